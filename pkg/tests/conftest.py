import numpy as np
import pytest

from mbvlgc import kernels
from mbvlgc._accel import HAVE_NUMBA

BACKENDS = ["numpy"] + (["numba"] if HAVE_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def each_backend(request):
    with kernels.backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[dict]()


class CriterionLog:
    def __init__(self, store, number):
        self.store, self.number = store, number

    def check(self, passed, detail):
        self.store[self.number] = (bool(passed), detail)
        assert passed, f"criterion {self.number}: {detail}"


@pytest.fixture
def criterion(request):
    """Record the outcome of one numbered acceptance criterion."""
    store = request.config.stash.setdefault(ACCEPTANCE, {})
    number = int(request.node.originalname.split("_")[2])
    yield CriterionLog(store, number)
    store.setdefault(number, (False, "raised before completing"))


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        passed, detail = store[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
