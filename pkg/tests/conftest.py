from pathlib import Path

import numpy as np
import pytest

from svqsim.ansatz import AnsatzSpec
from svqsim.observables import build_h2_hamiltonian, build_rabi_hamiltonian, h2_coefficients
from svqsim.ssvqe import SsvqeProblem, optimize
from svqsim.svqs import build_extended_hamiltonian

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"
OMEGA = 0.612
FIELD = 5.0


@pytest.fixture(scope="session")
def rabi_hamiltonian():
    return build_extended_hamiltonian(build_rabi_hamiltonian(OMEGA), 1, FIELD)


@pytest.fixture(scope="session")
def rabi_result(rabi_hamiltonian):
    return optimize(SsvqeProblem(rabi_hamiltonian, AnsatzSpec(2, 1), 2, seed=0))


@pytest.fixture(scope="session")
def h2_results():
    out = {}
    for d in (0.2, 1.0):
        h = build_h2_hamiltonian(h2_coefficients(d))
        out[d] = (h, optimize(SsvqeProblem(h, AnsatzSpec(2, 2), 2, seed=0)))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
