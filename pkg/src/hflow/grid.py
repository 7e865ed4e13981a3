"""Uniform-grid discretization of a rectangle (0, lx) x (0, ly).

Fields are stored with an explicit boundary ring of zeros, so every stencil
can be applied to the interior block without special cases.  Array layout
is ``values[i, j, c]`` with ``i`` running along x, ``j`` along y and ``c``
the component of the 3-vector.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Interior node counts and side lengths of the rectangle."""

    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("nx and ny must be integers")
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"need nx, ny >= 3, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError(f"side lengths must be positive, got {self.lx}, {self.ly}")

    @property
    def hx(self) -> float:
        return self.lx / (self.nx + 1)

    @property
    def hy(self) -> float:
        return self.ly / (self.ny + 1)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def shape(self) -> tuple[int, int]:
        """Shape of the full node array, boundary ring included."""
        return (self.nx + 2, self.ny + 2)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates ``(X, Y)`` of the full grid, ``indexing='ij'``."""
        x = np.arange(self.nx + 2) * self.hx
        y = np.arange(self.ny + 2) * self.hy
        return np.meshgrid(x, y, indexing="ij")


@dataclass
class Field3:
    """A map from the grid nodes to R^3 with a zero boundary ring."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = self.grid.shape + (3,)
        if self.values.shape != expected:
            raise ValueError(f"values must have shape {expected}, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite entries")
        if np.any(_ring(self.values) != 0.0):
            raise ValueError("boundary ring must be identically zero")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Field3":
        return cls(grid, np.zeros(grid.shape + (3,)))

    @classmethod
    def from_interior(cls, grid: GridSpec, interior: np.ndarray) -> "Field3":
        """Embed an ``(nx, ny, 3)`` array, padding with the zero ring."""
        values = np.zeros(grid.shape + (3,))
        values[1:-1, 1:-1] = interior
        return cls(grid, values)

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "Field3":
        """Sample ``fn(X, Y) -> (..., 3)`` on the interior; boundary forced to zero."""
        X, Y = grid.coords()
        vals = np.asarray(fn(X, Y), dtype=float)
        return cls.from_interior(grid, vals[1:-1, 1:-1])

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1, 1:-1]

    def copy(self) -> "Field3":
        return Field3(self.grid, self.values.copy())

    def __mul__(self, a: float) -> "Field3":
        return Field3(self.grid, a * self.values)

    __rmul__ = __mul__

    def __add__(self, other: "Field3") -> "Field3":
        _same_grid(self, other)
        return Field3(self.grid, self.values + other.values)

    def __sub__(self, other: "Field3") -> "Field3":
        _same_grid(self, other)
        return Field3(self.grid, self.values - other.values)


def _ring(values: np.ndarray) -> np.ndarray:
    return np.concatenate(
        [values[0].ravel(), values[-1].ravel(), values[:, 0].ravel(), values[:, -1].ravel()]
    )


def _same_grid(a: Field3, b: Field3) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


# --- array-level stencils -------------------------------------------------
# These act on full (nx+2, ny+2, ...) arrays and return arrays of the same
# shape with a zero ring.  The integrator calls them directly.

def dx_centered(a: np.ndarray, hx: float) -> np.ndarray:
    out = np.zeros_like(a)
    out[1:-1, 1:-1] = (a[2:, 1:-1] - a[:-2, 1:-1]) / (2.0 * hx)
    return out


def dy_centered(a: np.ndarray, hy: float) -> np.ndarray:
    out = np.zeros_like(a)
    out[1:-1, 1:-1] = (a[1:-1, 2:] - a[1:-1, :-2]) / (2.0 * hy)
    return out


def laplacian_array(a: np.ndarray, hx: float, hy: float) -> np.ndarray:
    out = np.zeros_like(a)
    c = a[1:-1, 1:-1]
    out[1:-1, 1:-1] = (a[2:, 1:-1] - 2.0 * c + a[:-2, 1:-1]) / hx**2 + (
        a[1:-1, 2:] - 2.0 * c + a[1:-1, :-2]
    ) / hy**2
    return out


# --- field-level operations ----------------------------------------------

def gradient(u: Field3) -> tuple[Field3, Field3]:
    """Centered-difference partial derivatives ``(u_x, u_y)``.

    Second order at interior nodes; the boundary ring of both outputs is
    zero by convention.
    """
    g = u.grid
    return Field3(g, dx_centered(u.values, g.hx)), Field3(g, dy_centered(u.values, g.hy))


def forward_differences(u: Field3) -> tuple[np.ndarray, np.ndarray]:
    """One-sided differences over every grid edge.

    Returns arrays of shape ``(nx+1, ny, 3)`` and ``(nx, ny+1, 3)``: the x
    differences on the edges between interior rows (and the ring), and the
    same in y.  Their squared sum is exactly ``-<laplacian(u), u>``.
    """
    g = u.grid
    v = u.values
    ddx = (v[1:, 1:-1] - v[:-1, 1:-1]) / g.hx
    ddy = (v[1:-1, 1:] - v[1:-1, :-1]) / g.hy
    return ddx, ddy


def laplacian(u: Field3) -> Field3:
    """Componentwise 5-point Laplacian with homogeneous Dirichlet data."""
    g = u.grid
    return Field3(g, laplacian_array(u.values, g.hx, g.hy))


def wedge(a, b):
    """Cross product in R^3, broadcast over leading axes.

    Works on plain 3-vectors, on raw ``(..., 3)`` arrays and on ``Field3``
    pairs (returning a ``Field3``).
    """
    if isinstance(a, Field3) and isinstance(b, Field3):
        _same_grid(a, b)
        return Field3(a.grid, np.cross(a.values, b.values))
    return np.cross(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def integrate(f: np.ndarray, grid: GridSpec) -> float:
    """Node sum times cell area over the full grid.

    ``f`` holds samples on all ``(nx+2) x (ny+2)`` nodes.  For integrands
    vanishing on the boundary this coincides with the trapezoid rule; for
    general data the trapezoid weights are applied on the ring.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise ValueError(f"expected samples of shape {grid.shape}, got {f.shape}")
    wx = np.ones(grid.nx + 2)
    wy = np.ones(grid.ny + 2)
    wx[[0, -1]] = 0.5
    wy[[0, -1]] = 0.5
    return float(wx @ f @ wy) * grid.cell_area


def inner(u: Field3, v: Field3) -> float:
    """Discrete L2 inner product: node sum of ``u . v`` times cell area."""
    _same_grid(u, v)
    return float(np.vdot(u.values, v.values)) * u.grid.cell_area


# --- serialization ---------------------------------------------------------

def field_to_csv(u: Field3, path=None) -> str:
    """Write a field as CSV: one header line with the grid, then ``u1,u2,u3``
    per node in row-major ``(i, j)`` order, boundary ring included."""
    g = u.grid
    buf = io.StringIO()
    buf.write(f"# nx={g.nx} ny={g.ny} lx={g.lx!r} ly={g.ly!r}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["u1", "u2", "u3"])
    for row in u.values.reshape(-1, 3):
        w.writerow([repr(float(x)) for x in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def field_from_csv(source) -> Field3:
    """Inverse of :func:`field_to_csv`; ``source`` is a path or the CSV text."""
    text = source
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text()
    lines = text.splitlines()
    header = lines[0].lstrip("#").split()
    meta = dict(item.split("=", 1) for item in header)
    grid = GridSpec(int(meta["nx"]), int(meta["ny"]), float(meta["lx"]), float(meta["ly"]))
    rows = list(csv.reader(lines[2:]))
    data = np.array(rows, dtype=float).reshape(grid.shape + (3,))
    return Field3(grid, data)


_BIN_MAGIC = b"HFLD0001"


def field_to_bytes(u: Field3) -> bytes:
    """Flat little-endian binary: magic, ``nx, ny`` as int64, ``lx, ly`` as
    float64, then the row-major float64 node values."""
    g = u.grid
    head = _BIN_MAGIC + np.array([g.nx, g.ny], dtype="<i8").tobytes()
    head += np.array([g.lx, g.ly], dtype="<f8").tobytes()
    return head + np.ascontiguousarray(u.values, dtype="<f8").tobytes()


def field_from_bytes(blob: bytes) -> Field3:
    if blob[:8] != _BIN_MAGIC:
        raise ValueError("not a field snapshot")
    nx, ny = np.frombuffer(blob[8:24], dtype="<i8")
    lx, ly = np.frombuffer(blob[24:40], dtype="<f8")
    grid = GridSpec(int(nx), int(ny), float(lx), float(ly))
    data = np.frombuffer(blob[40:], dtype="<f8").reshape(grid.shape + (3,))
    return Field3(grid, data.copy())
