import json
from pathlib import Path

import numpy as np
import pytest

from hflow.grid import Field3, GridSpec

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "hflow" / "fixtures"

ACCEPTANCE_LINES: list[str] = []


def fixture_config(name: str) -> dict:
    return json.loads((FIXTURES / name).read_text())


def random_field(grid: GridSpec, rng: np.random.Generator, scale: float = 1.0) -> Field3:
    return Field3.from_interior(grid, scale * rng.standard_normal((grid.nx, grid.ny, 3)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
