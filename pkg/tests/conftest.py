import numpy as np
import pytest

from turingwaves import recipes
from turingwaves.dispersion import find_turing_point
from turingwaves.models import load_fixture

ACCEPTANCE_RESULTS = {}


@pytest.fixture(scope="session")
def quad_spec():
    return load_fixture("quadratic")


@pytest.fixture(scope="session")
def turing(quad_spec):
    return find_turing_point(quad_spec)


@pytest.fixture(scope="session")
def quad_wave(turing):
    return recipes.quadratic_wave(turing=turing)


@pytest.fixture(scope="session")
def super_wave(turing):
    return recipes.cubic_super_wave(turing=turing)


@pytest.fixture(scope="session")
def sub_wave(turing):
    return recipes.cubic_sub_wave(turing=turing)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")
