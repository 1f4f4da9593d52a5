import numpy as np
import pytest
from hypothesis import settings

from exoflex.chain import default_chain
from exoflex.dynamics import default_inertials, stack_inertials

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def model():
    return default_chain()


@pytest.fixture(scope="session")
def inertials(model):
    return stack_inertials(default_inertials(model))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one summary line per acceptance criterion, printed after the run
_ACCEPTANCE = []


@pytest.fixture
def criterion():
    def record(name, ok, detail):
        line = f"{name}: {'PASS' if ok else 'FAIL'} ({detail})"
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
