"""IMEX time stepping for ``u_t = Lap u - 2 H0 u_x ^ u_y`` with zero Dirichlet
data.

Each step treats the Laplacian implicitly and the wedge nonlinearity
explicitly::

    (I - dt Lap_h) u^{n+1} = u^n - 2 dt H0 w(u^n)

The linear system is symmetric positive definite and is solved by conjugate
gradients.  :func:`run` wraps the step in sup-norm driven step-size control
and reports blow-up when the sup norm escapes a cap or the step collapses.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .functionals import EnergySnapshot, SNAPSHOT_COLUMNS, snapshot_from_array, wedge_term_array
from .grid import Field3, laplacian_array

logger = logging.getLogger(__name__)

TRACE_COLUMNS = SNAPSHOT_COLUMNS + ("dissipation", "dt")


class SolverError(RuntimeError):
    """The inner CG solve did not reach its tolerance."""


@dataclass
class StepperConfig:
    dt0: float = 1e-4
    dt_min: float = 1e-13
    supnorm_cap: float = 1e6
    t_max: float = 1.0
    cg_tol: float = 1e-10
    cg_maxiter: int = 1000
    record_every: int = 1
    growth_cut: float = 1.5
    # "variational" keeps the discrete energy identity exact in the
    # semi-discrete limit; "centered" is the plain pointwise product.
    wedge_form: str = "variational"
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not (self.dt0 >= self.dt_min > 0):
            raise ValueError(f"need dt0 >= dt_min > 0, got dt0={self.dt0}, dt_min={self.dt_min}")
        if not self.supnorm_cap > 0:
            raise ValueError("supnorm_cap must be positive")
        if not self.cg_tol > 0:
            raise ValueError("cg_tol must be positive")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if not self.growth_cut > 1:
            raise ValueError("growth_cut must exceed 1")
        if self.wedge_form not in ("variational", "centered"):
            raise ValueError(f"unknown wedge_form {self.wedge_form!r}")


@dataclass
class Trace:
    """Snapshots of a run plus running sums over accepted steps.

    ``dissipation[k]`` is the discrete ``int_0^t ||u_t||_2^2`` at snapshot
    ``k`` and ``dts[k]`` the step that produced it (0 for the initial state).
    ``l2_integral`` and ``cross_integral`` are right-endpoint sums of
    ``||u||_2^2 dt`` and ``<u, u_t> dt``; together with ``dissipation`` they
    obey Cauchy-Schwarz exactly, which the concavity monitor relies on.
    """

    h0: float
    snapshots: list[EnergySnapshot] = field(default_factory=list)
    dissipation: list[float] = field(default_factory=list)
    dts: list[float] = field(default_factory=list)
    l2_integral: list[float] = field(default_factory=list)
    cross_integral: list[float] = field(default_factory=list)
    steps_accepted: int = 0
    steps_rejected: int = 0

    def __len__(self):
        return len(self.snapshots)

    def column(self, name: str) -> np.ndarray:
        attr = {"E": "e", "N": "n", "V": "v"}.get(name, name)
        return np.array([getattr(s, attr) for s in self.snapshots])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def rows(self) -> list[dict]:
        out = []
        for s, d, dt in zip(self.snapshots, self.dissipation, self.dts):
            row = s.as_row()
            row["dissipation"] = d
            row["dt"] = dt
            out.append(row)
        return out

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in self.rows():
            w.writerow([repr(float(row[c])) for c in TRACE_COLUMNS])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


@dataclass
class BlowupReport:
    detected: bool
    t_detect: float | None
    reason: str
    final_supnorm: float

    def __post_init__(self):
        if self.reason not in ("supnorm_cap", "dt_underflow", "horizon_reached", "max_steps"):
            raise ValueError(f"unknown termination reason {self.reason!r}")
        if self.detected and self.reason not in ("supnorm_cap", "dt_underflow"):
            raise ValueError("a detected blow-up needs reason supnorm_cap or dt_underflow")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text


def _solve_implicit(rhs: np.ndarray, x0: np.ndarray, dt: float, grid, cfg: StepperConfig) -> np.ndarray:
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    shape = (nx, ny, 3)
    buf = np.zeros(grid.shape + (3,))

    def matvec(x):
        buf[1:-1, 1:-1] = x.reshape(shape)
        return (buf - dt * laplacian_array(buf, hx, hy))[1:-1, 1:-1].ravel()

    b = rhs[1:-1, 1:-1].ravel()
    out = np.zeros_like(rhs)
    if not np.any(b):
        return out
    n = b.size
    op = LinearOperator((n, n), matvec=matvec, dtype=float)
    x, info = cg(op, b, x0=x0[1:-1, 1:-1].ravel(), rtol=cfg.cg_tol, atol=0.0, maxiter=cfg.cg_maxiter)
    if info != 0:
        raise SolverError(f"CG did not converge in {cfg.cg_maxiter} iterations (dt={dt:g})")
    out[1:-1, 1:-1] = x.reshape(shape)
    return out


def _step_array(v: np.ndarray, dt: float, h0: float, grid, cfg: StepperConfig) -> np.ndarray:
    w = wedge_term_array(v, grid.hx, grid.hy, cfg.wedge_form)
    rhs = v - (2.0 * dt * h0) * w
    return _solve_implicit(rhs, v, dt, grid, cfg)


def step(u: Field3, dt: float, h0: float, cfg: StepperConfig | None = None) -> Field3:
    """Advance ``u`` by one IMEX step of size ``dt``.

    Raises
    ------
    SolverError
        If CG misses ``cfg.cg_tol * ||rhs||`` within ``cfg.cg_maxiter``
        iterations.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    cfg = cfg or StepperConfig()
    return Field3(u.grid, _step_array(u.values, dt, h0, u.grid, cfg))


def dissipation_increment(u_old: Field3, u_new: Field3, dt: float) -> float:
    """``||(u_new - u_old)/dt||_2^2 * dt``, the discrete ``int |u_t|^2`` over one step."""
    if u_old.grid != u_new.grid:
        raise ValueError("fields live on different grids")
    if not dt > 0:
        raise ValueError("dt must be positive")
    d = u_new.values - u_old.values
    return float(np.vdot(d, d)) * u_old.grid.cell_area / dt


def run(u0: Field3, h0: float, cfg: StepperConfig | None = None) -> tuple[Trace, BlowupReport, Field3]:
    """Integrate from ``u0`` until blow-up is detected or ``cfg.t_max``.

    A step is rejected (and ``dt`` halved) when the sup norm grows by more
    than ``growth_cut`` or CG fails.  After an accepted step with mild
    growth ``dt`` doubles, capped at ``dt0``.  Rejected steps leave no trace.
    """
    cfg = cfg or StepperConfig()
    if h0 == 0:
        raise ValueError("H0 must be nonzero")
    grid = u0.grid
    area = grid.cell_area
    mild = 1.0 + 0.25 * (cfg.growth_cut - 1.0)

    v = u0.values.copy()
    t = 0.0
    dt = cfg.dt0
    trace = Trace(h0=h0)
    diss = l2_int = cross = 0.0

    def record(snap, dt_used):
        trace.snapshots.append(snap)
        trace.dissipation.append(diss)
        trace.dts.append(dt_used)
        trace.l2_integral.append(l2_int)
        trace.cross_integral.append(cross)

    snap = snapshot_from_array(v, grid, h0, t)
    record(snap, 0.0)
    sup = snap.supnorm
    last_dt = 0.0
    since_record = 0
    reason = "horizon_reached"
    detected = False
    t_detect = None
    t_eps = 1e-12 * cfg.t_max

    while cfg.t_max - t > t_eps:
        if trace.steps_accepted >= cfg.max_steps:
            reason = "max_steps"
            break
        h = min(dt, cfg.t_max - t)
        try:
            new = _step_array(v, h, h0, grid, cfg)
        except SolverError:
            trace.steps_rejected += 1
            dt *= 0.5
            if dt < cfg.dt_min:
                raise
            continue
        new_sup = float(np.sqrt(np.max(np.einsum("ijc,ijc->ij", new, new))))
        if not math.isfinite(new_sup) or new_sup > cfg.growth_cut * sup:
            trace.steps_rejected += 1
            dt *= 0.5
            if dt < cfg.dt_min:
                detected, reason, t_detect = True, "dt_underflow", t
                break
            continue

        d = new - v
        dd = float(np.vdot(d, d)) * area
        diss += dd / h
        l2_new = float(np.vdot(new, new)) * area
        l2_int += l2_new * h
        cross += float(np.vdot(new, d)) * area
        v = new
        t += h
        last_dt = h
        trace.steps_accepted += 1
        since_record += 1
        growth = new_sup / sup if sup > 0 else 1.0
        sup = new_sup

        if sup > cfg.supnorm_cap:
            detected, reason, t_detect = True, "supnorm_cap", t
            break
        if since_record >= cfg.record_every:
            record(snapshot_from_array(v, grid, h0, t), h)
            since_record = 0
        if growth < mild:
            dt = min(2.0 * dt, cfg.dt0)

    if trace.snapshots[-1].t != t:
        record(snapshot_from_array(v, grid, h0, t), last_dt)
    report = BlowupReport(detected=detected, t_detect=t_detect, reason=reason, final_supnorm=sup)
    logger.info(
        "run finished: reason=%s t=%.6g accepted=%d rejected=%d sup=%.3g",
        reason, t, trace.steps_accepted, trace.steps_rejected, sup,
    )
    return trace, report, Field3(grid, v)
