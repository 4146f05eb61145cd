import numpy as np
import pytest

from platoon_game import _backend
from platoon_game.linear import make_dynamics
from platoon_game.scenario import paper_sec5


@pytest.fixture(params=_backend.available())
def backend(request):
    prev = _backend.use(request.param)
    yield request.param
    _backend.use(prev)


@pytest.fixture
def dyn():
    return make_dynamics(0.5)


@pytest.fixture
def sec5():
    return paper_sec5()


def taylor_expm(M, terms=30):
    """Scaling-and-squaring with a truncated Taylor series; test oracle only."""
    M = np.asarray(M, dtype=float)
    norm = np.abs(M).sum(axis=1).max()
    s = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0 else 0
    X = M / 2**s
    out = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, terms):
        term = term @ X / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
