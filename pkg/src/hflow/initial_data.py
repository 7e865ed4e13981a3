"""Initial fields built from Dirichlet sine modes, and the amplitude search
that pushes a profile into the blow-up region ``E(u0) < lambda1/6 ||u0||^2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dstn

from .functionals import gradsq, l2sq, volume
from .grid import Field3, GridSpec

# Three modes coupling all components; V(PHI) != 0 on any rectangle.
THREE_MODE_FIXTURE = (
    (1, 1, (1.0, 0.0, 0.0)),
    (2, 1, (0.0, 1.0, 0.0)),
    (1, 2, (0.0, 0.0, 1.0)),
)


class NoBlowupRayError(ValueError):
    """The ray ``a * phi`` (a > 0) never meets the blow-up criterion."""


def mode_field(grid: GridSpec, coeffs) -> Field3:
    """Sum of ``c * sin(kx pi x / lx) sin(ky pi y / ly)`` over ``(kx, ky, c)``."""
    X, Y = grid.coords()
    vals = np.zeros(grid.shape + (3,))
    for kx, ky, c in coeffs:
        if int(kx) != kx or int(ky) != ky or kx < 1 or ky < 1:
            raise ValueError(f"mode numbers must be integers >= 1, got ({kx}, {ky})")
        c = np.asarray(c, dtype=float)
        if c.shape != (3,):
            raise ValueError("mode coefficient must be a 3-vector")
        s = np.sin(kx * np.pi * X / grid.lx) * np.sin(ky * np.pi * Y / grid.ly)
        vals += s[..., None] * c
    # sin(k pi) is ~1e-16, not 0; pin the ring.
    return Field3.from_interior(grid, vals[1:-1, 1:-1])


def parse_modes(rows) -> list[tuple[int, int, tuple[float, float, float]]]:
    """Accept ``[kx, ky, c1, c2, c3]`` rows as found in JSON configs."""
    out = []
    for row in rows:
        if len(row) != 5:
            raise ValueError(f"mode rows need 5 entries (kx, ky, c1, c2, c3), got {row!r}")
        kx, ky, *c = row
        out.append((int(kx), int(ky), tuple(float(x) for x in c)))
    return out


@dataclass(frozen=True)
class AmplitudeChoice:
    amplitude: float
    a_star: float
    gradsq: float
    l2sq: float
    volume: float
    note: str = ""


def amplitude_for_criterion(
    phi: Field3, h0: float, lambda1: float, margin: float = 1.25
) -> AmplitudeChoice:
    """Smallest amplitude ``a*`` with ``a * phi`` on the blow-up threshold.

    Along the ray the criterion reads
    ``a^2 D / 2 + (2 h0 / 3) a^3 W < lambda1 a^2 M / 6`` with ``D, M, W`` the
    gradient energy, squared L2 norm and volume of ``phi``, so it holds for
    ``a > a* = (3D - lambda1 M) / (-4 h0 W)``.  Returns ``margin * a*``.
    """
    if not margin > 1:
        raise ValueError("margin must exceed 1")
    if h0 == 0:
        raise ValueError("H0 must be nonzero")
    D, M, W = gradsq(phi), l2sq(phi), volume(phi)
    scale = max(D, 1.0) * 1e-12
    if abs(W) <= scale or h0 * W >= 0:
        raise NoBlowupRayError(
            f"no blow-up along this ray: h0*V(phi) = {h0 * W:.3e} must be negative"
        )
    num = 3.0 * D - lambda1 * M
    if num <= 0:
        # Only possible if lambda1 exceeds the Poincare constant of phi.
        return AmplitudeChoice(0.0, 0.0, D, M, W, note="criterion holds for every a > 0")
    a_star = num / (-4.0 * h0 * W)
    return AmplitudeChoice(margin * a_star, a_star, D, M, W)


def project_modes(u: Field3, kmax: int, drop_below: float = 0.0, decimals: int | None = None):
    """Sine coefficients of ``u`` for mode numbers up to ``kmax``.

    Uses the type-I discrete sine transform, which interpolates the grid
    values exactly when ``kmax`` covers all interior nodes.  Coefficients
    whose largest component is below ``drop_below`` are omitted.
    """
    g = u.grid
    coef = dstn(u.interior, type=1, axes=(0, 1)) / ((g.nx + 1) * (g.ny + 1))
    out = []
    for kx in range(min(kmax, g.nx)):
        for ky in range(min(kmax, g.ny)):
            c = coef[kx, ky]
            if decimals is not None:
                c = np.round(c, decimals) + 0.0  # drop negative zeros
            if np.abs(c).max() > drop_below:
                out.append((kx + 1, ky + 1, tuple(float(x) for x in c)))
    return out
