"""Regenerate ``src/hflow/fixtures/cap_huang_only.json``.

The profile is a sphere-like cap: the shifted inverse stereographic map
``(2z, -2) / (1 + |z|^2)`` with ``z = (p - centre) / eps``, damped by
``(sin pi x sin pi y)^2``, projected onto sine modes with ``k <= 10`` and
rounded.  Fields of this kind reach large |V| at moderate energy, which low
mode sums cannot, and so realize the Huang condition without the
``E(u0) < lambda1/6 ||u0||^2`` condition.
"""
import json
from pathlib import Path

import numpy as np

from hflow.grid import Field3, GridSpec
from hflow.initial_data import project_modes

EPS = 0.12
KMAX = 10
N = 63

grid = GridSpec(N, N)
X, Y = grid.coords()
zx, zy = (X - 0.5) / EPS, (Y - 0.5) / EPS
damp = (np.sin(np.pi * X) * np.sin(np.pi * Y)) ** 2
cap = np.stack([2 * zx, 2 * zy, -2 * np.ones_like(zx)], -1) / (1 + zx**2 + zy**2)[..., None]
u = Field3.from_interior(grid, (cap * damp[..., None])[1:-1, 1:-1])
modes = project_modes(u, KMAX, drop_below=4.99e-4, decimals=4)

config = {
    "description": "sphere-like cap in sine modes; Huang condition without the lambda1 criterion",
    "grid": {"nx": N, "ny": N, "lx": 1.0, "ly": 1.0},
    "h0": 1.0,
    "initial_data": {"amplitude": 1.7, "modes": [[kx, ky, *c] for kx, ky, c in modes]},
}
out = Path(__file__).resolve().parents[1] / "src" / "hflow" / "fixtures" / "cap_huang_only.json"
rows = ",\n".join("    " + json.dumps(r) for r in config["initial_data"]["modes"])
text = json.dumps(config, indent=2).split('"modes": [')[0] + '"modes": [\n' + rows + "\n    ]\n  }\n}\n"
json.loads(text)
out.write_text(text)
print(f"wrote {len(modes)} modes to {out}")
