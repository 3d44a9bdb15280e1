import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gaugep import backend

settings.register_profile("gaugep", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("gaugep")


@pytest.fixture(params=["compiled", "python"])
def each_backend(request):
    if request.param == "compiled" and not backend.COMPILED_AVAILABLE:
        pytest.skip("compiled kernels not built")
    prev = backend.use(request.param)
    yield request.param
    backend.use(prev)


@pytest.fixture
def python_backend():
    prev = backend.use("python")
    yield
    backend.use(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict(capsys):
    """Print and remember a one-line ``A? PASS/FAIL`` verdict, return ``ok``."""
    def report(cid, ok, detail):
        line = f"{cid} {'PASS' if ok else 'FAIL'}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance verdicts")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
