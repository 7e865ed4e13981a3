"""Blow-up criteria at t = 0 and along-trajectory monitors for each inequality
used in the finite-time blow-up argument.

Monitors never abort or judge a run; they return normalized defects whose
sign the caller inspects.  A negative defect beyond discretization noise
means the recorded trajectory violates the corresponding inequality.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .functionals import snapshot
from .grid import Field3
from .integrator import BlowupReport, Trace

SCHEMA = "hflow.certificate/1"


@dataclass(frozen=True)
class CriterionReport:
    h0: float
    lambda1_used: float
    e0: float
    l2sq0: float
    gap: float
    li_satisfied: bool
    t_bound: float | None
    huang_e_threshold: float
    v0: float
    huang_v_threshold: float
    huang_satisfied: bool
    degenerate: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def criterion_from_values(e0: float, l2sq0: float, v0: float, h0: float, lambda1: float) -> CriterionReport:
    """Assemble a :class:`CriterionReport` from precomputed scalars."""
    if h0 == 0:
        raise ValueError("H0 must be nonzero")
    if not lambda1 > 0:
        raise ValueError("lambda1 must be positive")
    gap = lambda1 * l2sq0 - 6.0 * e0
    li = gap > 0
    e_thr = 4.0 * math.pi / (3.0 * h0**2)
    v_thr = 4.0 * math.pi / abs(h0) ** 3
    huang = (e0 < e_thr and abs(v0) > v_thr) or e0 < 0
    return CriterionReport(
        h0=h0,
        lambda1_used=lambda1,
        e0=e0,
        l2sq0=l2sq0,
        gap=gap,
        li_satisfied=li,
        t_bound=16.0 * l2sq0 / gap if li else None,
        huang_e_threshold=e_thr,
        v0=v0,
        huang_v_threshold=v_thr,
        huang_satisfied=huang,
        degenerate=l2sq0 == 0.0,
    )


def check_criterion(u0: Field3, h0: float, lambda1: float) -> CriterionReport:
    """Evaluate ``E(u0) < lambda1/6 ||u0||^2`` and the Huang thresholds."""
    s = snapshot(u0, h0)
    return criterion_from_values(s.e, s.l2sq, s.v, h0, lambda1)


def concavity_time_bound(l2sq0: float, beta: float, sigma: float) -> float:
    """Blow-up-time bound ``beta sigma^2 / (beta sigma - ||u0||^2)``.

    This is the self-consistent solution of ``T <= 2 F(0) / F'(0)`` with
    ``F(0) = T ||u0||^2 + beta sigma^2`` and ``F'(0) = 2 beta sigma``;
    infinite when ``beta sigma <= ||u0||^2``.  At ``sigma = 2||u0||^2/beta``
    it equals ``4 ||u0||^2 / beta``.
    """
    denom = beta * sigma - l2sq0
    if denom <= 0:
        return math.inf
    return beta * sigma**2 / denom


def default_beta_sigma(criterion: CriterionReport) -> tuple[float, float]:
    beta = criterion.gap / 4.0
    return beta, 2.0 * criterion.l2sq0 / beta


@dataclass
class MonitorSeries:
    """Per-snapshot defect series of one inequality; ``active`` marks the
    snapshots where the inequality's hypotheses hold."""

    name: str
    times: np.ndarray
    defect: np.ndarray
    normalized: np.ndarray
    active: np.ndarray
    status: str = "ok"
    extra: dict = field(default_factory=dict)

    @property
    def min_normalized(self) -> float | None:
        vals = self.normalized[self.active]
        return float(vals.min()) if vals.size else None

    def violations(self, tol: float) -> int:
        return int(np.sum(self.normalized[self.active] < -tol))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "min_normalized_defect": self.min_normalized,
            "t": self.times.tolist(),
            "defect": self.defect.tolist(),
            "normalized": self.normalized.tolist(),
            "active": self.active.tolist(),
            **{k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.extra.items()},
        }


def _inactive(name: str, status: str) -> MonitorSeries:
    empty = np.array([])
    return MonitorSeries(name, empty, empty, empty, empty.astype(bool), status=status)


def gronwall_monitor(trace: Trace, criterion: CriterionReport) -> MonitorSeries:
    """Defect of ``||u||^2 - (6/lam) E(u) >= (gap / lam) exp(lam t)``.

    Normalized by the right-hand side; zero at t = 0.
    """
    if not criterion.li_satisfied:
        return _inactive("gronwall", "inactive: blow-up criterion not satisfied at t=0")
    lam = criterion.lambda1_used
    t = trace.times
    lhs = trace.column("l2sq") - (6.0 / lam) * trace.column("E")
    rhs0 = criterion.l2sq0 - (6.0 / lam) * criterion.e0
    with np.errstate(over="ignore"):
        rhs = rhs0 * np.exp(lam * t)
    d = lhs - rhs
    return MonitorSeries(
        "gronwall", t, d, d / np.abs(rhs), np.ones(t.size, bool), extra={"lhs": lhs, "rhs": rhs}
    )


def growth_monitor(trace: Trace, e0: float) -> MonitorSeries:
    """Defect of ``||u(t)||_2 <= ||u0||_2 + sqrt(E(u0) t)``.

    Active from t = 0 up to (not including) the first snapshot with
    ``E(u(t)) < 0``; normalized by ``||u0||_2``.
    """
    t = trace.times
    E = trace.column("E")
    norm = np.sqrt(trace.column("l2sq"))
    neg = np.flatnonzero(E < 0)
    cut = neg[0] if neg.size else t.size
    active = np.arange(t.size) < cut
    if e0 < 0:
        active[:] = False
    rhs = norm[0] + np.sqrt(np.maximum(e0, 0.0) * t)
    g = rhs - norm
    scale = norm[0] if norm[0] > 0 else 1.0
    status = "ok" if active.any() else "inactive: E(u0) < 0"
    extra = {"first_negative_energy_t": float(t[cut]) if cut < t.size else None}
    return MonitorSeries("growth", t, g, g / scale, active, status=status, extra=extra)


def concavity_trajectory(
    trace: Trace,
    criterion: CriterionReport,
    t_horizon: float | None = None,
    beta: float | None = None,
    sigma: float | None = None,
) -> MonitorSeries:
    """Defect ``F F'' - 3/2 F'^2`` of the auxiliary functional

    ``F(t) = int_0^t ||u||^2 + (T - t) ||u0||^2 + beta (t + sigma)^2``

    with ``T = t_horizon`` (default: the last recorded time), ``F'`` and
    ``F''`` from their closed forms ``||u||^2 - ||u0||^2 + 2 beta (t+sigma)``
    and ``-2 N(u) + 2 beta``.  The time integral uses the trapezoid rule, so
    snapshots must be recorded every step.  Normalized by ``F^2``.

    Also evaluates the Cauchy-Schwarz gap ``eta(t)`` from the trace's
    right-endpoint sums (stored under ``extra['eta']``).
    """
    if not criterion.li_satisfied:
        return _inactive("concavity", "inactive: blow-up criterion not satisfied at t=0")
    if beta is None:
        beta = default_beta_sigma(criterion)[0]
    if not (0 < beta <= criterion.gap / 4.0 * (1 + 1e-12)):
        raise ValueError(f"beta must lie in (0, gap/4] = (0, {criterion.gap / 4.0:g}], got {beta:g}")
    if sigma is None:
        sigma = 2.0 * criterion.l2sq0 / beta
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    t = trace.times
    if t_horizon is None:
        t_horizon = float(t[-1])
    l2 = trace.column("l2sq")
    m0 = l2[0]
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (l2[1:] + l2[:-1]) * np.diff(t))])
    F = integral + (t_horizon - t) * m0 + beta * (t + sigma) ** 2
    F1 = l2 - m0 + 2.0 * beta * (t + sigma)
    F2 = -2.0 * trace.column("N") + 2.0 * beta
    c = F * F2 - 1.5 * F1**2

    A = np.asarray(trace.l2_integral) + beta * (t + sigma) ** 2
    B = np.asarray(trace.dissipation) + beta
    C = np.asarray(trace.cross_integral) + beta * (t + sigma)
    eta = A * B - C**2
    with np.errstate(over="ignore", invalid="ignore"):
        normalized = c / F**2
    extra = {
        "F": F, "F_prime": F1, "F_second": F2,
        "eta": eta, "eta_scale": A * B, "eta_normalized": eta / (A * B),
        "beta": beta, "sigma": sigma, "t_horizon": t_horizon,
        "lemma_bound": concavity_time_bound(m0, beta, sigma),
    }
    return MonitorSeries("concavity", t, c, normalized, np.ones(t.size, bool), extra=extra)


def l2_monotonicity_violations(trace: Trace) -> tuple[int, float | None]:
    """Count decreases of ``||u||^2`` between consecutive snapshots from the
    first snapshot with ``N < 0`` on.  Returns ``(count, t_first_negative)``."""
    N = trace.column("N")
    neg = np.flatnonzero(N < 0)
    if not neg.size:
        return 0, None
    l2 = trace.column("l2sq")[neg[0]:]
    return int(np.sum(np.diff(l2) <= 0)), float(trace.times[neg[0]])


@dataclass
class MonitorReport:
    gronwall: MonitorSeries
    growth: MonitorSeries
    concavity: MonitorSeries
    l2_violations: int
    t_first_negative_nehari: float | None

    def summary(self) -> dict:
        eta = self.concavity.extra.get("eta_normalized")
        return {
            "gronwall_min_defect": self.gronwall.min_normalized,
            "growth_min_defect": self.growth.min_normalized,
            "concavity_min_defect": self.concavity.min_normalized,
            "eta_min": float(np.min(eta)) if eta is not None and len(eta) else None,
            "l2_monotonicity_violations": self.l2_violations,
            "t_first_negative_nehari": self.t_first_negative_nehari,
        }

    def to_dict(self) -> dict:
        return {
            "summary": self.summary(),
            "gronwall": self.gronwall.to_dict(),
            "growth": self.growth.to_dict(),
            "concavity": self.concavity.to_dict(),
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text


def monitor_trace(trace: Trace, criterion: CriterionReport, **concavity_kw) -> MonitorReport:
    """Run every monitor on one trace."""
    count, t_neg = l2_monotonicity_violations(trace)
    return MonitorReport(
        gronwall=gronwall_monitor(trace, criterion),
        growth=growth_monitor(trace, criterion.e0),
        concavity=concavity_trajectory(trace, criterion, **concavity_kw),
        l2_violations=count,
        t_first_negative_nehari=t_neg,
    )


def certificate(criterion: CriterionReport, blowup: BlowupReport, monitors: MonitorReport | None) -> dict:
    """One-run summary: criterion at t = 0, observed outcome, worst defects."""
    return {
        "schema": SCHEMA,
        "criterion": criterion.to_dict(),
        "blowup": blowup.to_dict(),
        "monitors": monitors.summary() if monitors is not None else None,
    }
