import numpy as np
import pytest

from topamp import DriveSpec, LatticeSpec, WaveguideSpec, build_dynamical_matrix, coupling_matrices

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def chain(k_res, l_kappa, n_sites, pump=0.0, omega=None, delta=0.0):
    """Normal dynamical matrix of an equally split waveguide."""
    wg = WaveguideSpec.equal(k_res, l_kappa)
    drive = DriveSpec(pump=pump, omega=omega, delta=delta)
    return build_dynamical_matrix(coupling_matrices(wg, LatticeSpec(n_sites)), drive)
