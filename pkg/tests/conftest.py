from __future__ import annotations

import pytest

from hybridcavity import hybrid, tmm
from hybridcavity.constants import LAMBDA_ZPL, N_DIAMOND, N_SIO2, N_TA2O5

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def dbr():
    return tmm.build_dbr(11, N_TA2O5, N_SIO2, LAMBDA_ZPL, "high")


def resonant_stack(mode, dbr, sigma=0.0, min_gap=2e-6):
    td = hybrid.snap_thickness(4e-6, mode)
    cav = hybrid.HybridCavity.resonant(td, min_air_gap=min_gap)
    return cav, tmm.build_cavity(cav.t_d, cav.t_a, dbr, dbr, N_DIAMOND, sigma)
