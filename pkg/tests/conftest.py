import pathlib

import pytest

from univcheck.cli import run_check
from univcheck.gates import GateSet, builtin, parse_gate_set

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def load(name):
    return parse_gate_set((FIXTURES / name).read_bytes())


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def ht_report():
    return run_check(load("h_t.json"), diagnostics="all")


@pytest.fixture(scope="session")
def hs_report():
    return run_check(load("h_s.json"), diagnostics="all")


@pytest.fixture(scope="session")
def qutrit_report():
    return run_check(load("qutrit_f_phase.json"), diagnostics="delta")


@pytest.fixture(scope="session")
def clifford():
    return GateSet.from_gates([builtin("H", 2), builtin("S", 2)])
