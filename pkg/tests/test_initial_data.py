import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import fixture_config, random_field
from hflow.criteria import check_criterion
from hflow.functionals import energy, gradsq, l2sq, lambda1_discrete, volume
from hflow.grid import GridSpec
from hflow.initial_data import (
    THREE_MODE_FIXTURE,
    NoBlowupRayError,
    amplitude_for_criterion,
    mode_field,
    parse_modes,
    project_modes,
)


def test_empty_modes_zero():
    assert not mode_field(GridSpec(7, 5), []).values.any()


def test_single_mode_norm():
    errs = []
    for n in (15, 31):
        u = mode_field(GridSpec(n, n), [(1, 1, (1.0, 0.0, 0.0))])
        errs.append(abs(l2sq(u) - 0.25))
    assert errs[1] < 1e-12 or errs[0] / errs[1] > 3.5
    assert errs[1] < 1e-3


def test_three_mode_volume_nonzero():
    for g in (GridSpec(15, 15), GridSpec(31, 21, 2.0, 0.5)):
        assert abs(volume(mode_field(g, THREE_MODE_FIXTURE))) > 0.1


@pytest.mark.parametrize("coeffs", [[(0, 1, (1, 0, 0))], [(1.5, 1, (1, 0, 0))], [(1, 1, (1, 0))]])
def test_mode_field_rejects(coeffs):
    with pytest.raises(ValueError):
        mode_field(GridSpec(5, 5), coeffs)


def test_parse_modes():
    assert parse_modes([[1, 2, 0.5, 0, -1]]) == [(1, 2, (0.5, 0.0, -1.0))]
    with pytest.raises(ValueError):
        parse_modes([[1, 2, 0.5]])


@pytest.mark.parametrize("a", [0.3, 1.0, 7.5])
@pytest.mark.parametrize("h0", [-2.0, 0.7])
def test_homogeneity_laws(a, h0, rng):
    g = GridSpec(21, 17, 1.0, 0.8)
    for phi in (mode_field(g, THREE_MODE_FIXTURE), random_field(g, rng)):
        D, M, W = gradsq(phi), l2sq(phi), volume(phi)
        u = a * phi
        assert l2sq(u) == pytest.approx(a**2 * M, rel=1e-12)
        assert volume(u) == pytest.approx(a**3 * W, rel=1e-12)
        assert energy(u, h0) == pytest.approx(a**2 * D / 2 + a**3 * (2 * h0 / 3) * W, rel=1e-12)


class TestAmplitude:
    grid = GridSpec(31, 31)

    def test_threshold_matches_bisection(self):
        phi = mode_field(self.grid, THREE_MODE_FIXTURE)
        lam = lambda1_discrete(self.grid)
        choice = amplitude_for_criterion(phi, -1.0, lam)
        # oracle: root of the gap of check_criterion along the ray
        root = brentq(lambda a: check_criterion(a * phi, -1.0, lam).gap, 0.1, 20.0, xtol=1e-14)
        assert choice.a_star == pytest.approx(root, rel=1e-10)
        assert choice.amplitude == pytest.approx(1.25 * root, rel=1e-10)
        assert not check_criterion(0.999 * root * phi, -1.0, lam).li_satisfied
        assert check_criterion(1.001 * root * phi, -1.0, lam).li_satisfied

    def test_gap_increasing_beyond_threshold(self):
        phi = mode_field(self.grid, THREE_MODE_FIXTURE)
        lam = lambda1_discrete(self.grid)
        a_star = amplitude_for_criterion(phi, -1.0, lam).a_star
        gaps = [check_criterion(m * a_star * phi, -1.0, lam).gap for m in np.linspace(1.0, 4.0, 13)]
        assert abs(gaps[0]) < 1e-9 * max(abs(g) for g in gaps)
        assert np.all(np.diff(gaps) > 0)

    @pytest.mark.parametrize("margin", [1.01, 1.25, 2.0, 10.0])
    @pytest.mark.parametrize("h0", [-3.0, -0.5])
    def test_output_satisfies_criterion(self, margin, h0):
        phi = mode_field(self.grid, THREE_MODE_FIXTURE)
        lam = lambda1_discrete(self.grid)
        choice = amplitude_for_criterion(phi, h0, lam, margin)
        assert check_criterion(choice.amplitude * phi, h0, lam).li_satisfied

    def test_sign_flip_by_negating_phi(self):
        # V(-phi) = -V(phi), so h0 > 0 works along the negated ray
        phi = mode_field(self.grid, THREE_MODE_FIXTURE)
        lam = lambda1_discrete(self.grid)
        with pytest.raises(NoBlowupRayError):
            amplitude_for_criterion(phi, 1.0, lam)
        choice = amplitude_for_criterion(-1.0 * phi, 1.0, lam)
        assert check_criterion(-choice.amplitude * phi, 1.0, lam).li_satisfied

    def test_zero_volume_rejected(self):
        phi = mode_field(self.grid, [(1, 1, (1.0, 0.0, 0.0)), (2, 2, (3.0, 0.0, 0.0))])
        with pytest.raises(NoBlowupRayError):
            amplitude_for_criterion(phi, -1.0, lambda1_discrete(self.grid))

    def test_margin_must_exceed_one(self):
        phi = mode_field(self.grid, THREE_MODE_FIXTURE)
        with pytest.raises(ValueError):
            amplitude_for_criterion(phi, -1.0, 19.0, margin=1.0)

    def test_trivial_region(self):
        # a lambda1 above 3 D / M makes every positive amplitude qualify
        phi = mode_field(self.grid, THREE_MODE_FIXTURE)
        lam = 3 * gradsq(phi) / l2sq(phi) * 1.1
        choice = amplitude_for_criterion(phi, -1.0, lam)
        assert choice.a_star == 0.0 and "every" in choice.note


def test_project_modes_round_trip():
    g = GridSpec(15, 11, 1.0, 0.6)
    coeffs = [(1, 1, (1.0, 0.0, -0.5)), (3, 2, (0.0, 0.25, 0.0)), (5, 7, (0.1, 0.2, 0.3))]
    u = mode_field(g, coeffs)
    got = project_modes(u, kmax=15, drop_below=1e-12, decimals=12)
    assert got == [(k, l, tuple(float(x) for x in c)) for k, l, c in coeffs]


def test_project_modes_reconstructs(rng):
    g = GridSpec(9, 7)
    u = random_field(g, rng)
    back = mode_field(g, project_modes(u, kmax=9))
    np.testing.assert_allclose(back.values, u.values, atol=1e-12)


def test_cap_fixture_matches_generator():
    # the frozen table is what the generator script writes; check its shape
    cfg = fixture_config("cap_huang_only.json")
    modes = parse_modes(cfg["initial_data"]["modes"])
    assert len(modes) == 75
    assert all(1 <= k <= 10 and 1 <= l <= 10 for k, l, _ in modes)
