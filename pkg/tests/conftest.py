import numpy as np
import pytest

from knotgas.config import DEFAULT_GEOMETRY
from knotgas.spectra import TorusGeometry

ALPHAS = (1, 5, 7)
MU_FERMION = 1.0
MU_BOSON = -0.1
# standard grid: 5 temperatures x 3 winding numbers x 2 statistics = 30 points
STANDARD_T = tuple(np.geomspace(0.02, 2.0, 5))
STANDARD_GRID = [(T, a, chi, MU_FERMION if chi == 1 else MU_BOSON)
                 for chi in (1, -1) for a in ALPHAS for T in STANDARD_T]
# figure-style sweep window
SWEEP_T = np.geomspace(0.005, 1.0, 120)


def default_geometry(alpha: int = 1) -> TorusGeometry:
    g = DEFAULT_GEOMETRY
    return TorusGeometry(g["R"], g["d"], g["p"], alpha, g["M"])


_REPORT: list[str] = []


@pytest.fixture
def report():
    """Collects one verdict line per acceptance criterion for the terminal summary."""
    return _REPORT.append


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)
