"""Sampled check of the concavity inequality ``psi'' psi - (1 + theta) psi'^2 >= 0``.

Given samples of a positive function, estimate the inequality's defect at
interior samples and the blow-up-time bound ``psi(0) / (theta psi'(0))`` it
would imply.  The checker only tests hypotheses on the sampled window; it
cannot confirm that ``psi`` actually diverges.

Derivatives are taken of ``log psi`` with three-point stencils on the
(possibly nonuniform) sample grid and mapped back via
``psi' = psi L'`` and ``psi'' = psi (L'' + L'^2)``.  For the power profiles
that saturate the inequality this keeps the truncation error in the defect
independent of the exponent.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConcavitySample:
    times: np.ndarray
    psi: np.ndarray
    theta: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.psi, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "psi", p)
        if t.ndim != 1 or t.shape != p.shape:
            raise ValueError("times and psi must be 1-d arrays of equal length")
        if t.size < 3:
            raise ValueError(f"need at least 3 samples, got {t.size}")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(p)):
            raise ValueError("samples must be finite")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(p <= 0):
            raise ValueError("psi must be positive at every sample")
        if not self.theta > 0:
            raise ValueError("theta must be positive")


@dataclass(frozen=True)
class ConcavityResult:
    min_defect: float
    min_normalized_defect: float
    bound: float | None
    hypothesis_ok: bool
    defect: np.ndarray
    normalized_defect: np.ndarray

    def to_dict(self) -> dict:
        return {
            "min_defect": self.min_defect,
            "min_normalized_defect": self.min_normalized_defect,
            "bound": self.bound,
            "hypothesis_ok": self.hypothesis_ok,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _derivatives(t: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Three-point first and second derivatives at interior samples, plus a
    second-order one-sided first derivative at ``t[0]``."""
    h1 = t[1:-1] - t[:-2]
    h2 = t[2:] - t[1:-1]
    fm, f0, fp = f[:-2], f[1:-1], f[2:]
    d1 = (-h2 / (h1 * (h1 + h2))) * fm + ((h2 - h1) / (h1 * h2)) * f0 + (h1 / (h2 * (h1 + h2))) * fp
    d2 = 2.0 * (fm / (h1 * (h1 + h2)) - f0 / (h1 * h2) + fp / (h2 * (h1 + h2)))
    a, b = t[1] - t[0], t[2] - t[0]
    start = (-(a + b) / (a * b)) * f[0] + (b / (a * (b - a))) * f[1] - (a / (b * (b - a))) * f[2]
    return d1, d2, start


def check_concavity(sample: ConcavitySample, tol: float = 1e-4) -> ConcavityResult:
    """Minimum of ``psi'' psi - (1+theta) psi'^2`` over interior samples.

    The normalized defect divides by ``|psi'' psi| + (1+theta) psi'^2``.
    ``hypothesis_ok`` requires ``psi'(0) > 0`` and a normalized defect no
    lower than ``-tol`` anywhere; ``bound`` is ``None`` when it fails.
    """
    t, psi, theta = sample.times, sample.psi, sample.theta
    L = np.log(psi)
    L1, L2, L1_start = _derivatives(t, L)
    p = psi[1:-1]
    dpsi = p * L1
    ddpsi = p * (L2 + L1**2)
    defect = ddpsi * p - (1.0 + theta) * dpsi**2
    scale = np.abs(ddpsi * p) + (1.0 + theta) * dpsi**2
    with np.errstate(invalid="ignore", divide="ignore"):
        normalized = np.where(scale > 0, defect / scale, 0.0)
    dpsi0 = psi[0] * L1_start
    ok = bool(dpsi0 > 0 and normalized.min() >= -tol)
    bound = float(1.0 / (theta * L1_start)) if ok else None
    return ConcavityResult(
        min_defect=float(defect.min()),
        min_normalized_defect=float(normalized.min()),
        bound=bound,
        hypothesis_ok=ok,
        defect=defect,
        normalized_defect=normalized,
    )


def read_samples_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read ``t, psi`` pairs; a non-numeric first row is taken as a header."""
    rows = []
    with open(path, newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) < 2:
                raise ValueError(f"{path}: line {k + 1}: expected two columns")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if rows or k > 0:
                    raise ValueError(f"{path}: line {k + 1}: not numeric: {row!r}")
    if not rows:
        raise ValueError(f"{path}: no samples")
    data = np.array(rows)
    return data[:, 0], data[:, 1]


def write_samples_csv(path, times, psi) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "psi"])
        for a, b in zip(times, psi):
            w.writerow([repr(float(a)), repr(float(b))])
