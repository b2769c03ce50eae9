import numpy as np
import pytest

from turbmax.grid import SpaceTimeGrid

CRITERIA = {
    1: "toy reproduction",
    2: "concavity suite",
    3: "equality characterization",
    4: "nonnegativity and finiteness",
    5: "mean-value uniqueness",
    6: "weak-form convergence order",
    7: "admissibility counterexample",
    8: "concentration-mass bound",
    9: "recession limits",
    10: "combination linearity",
}
_results = {}


@pytest.fixture
def record():
    """``record(n, ok, detail)`` stores the verdict of acceptance criterion ``n``."""

    def _record(n, ok, detail=""):
        _results[n] = (bool(ok), detail)

    return _record


@pytest.fixture
def rng(request):
    # one stream per test, stable across runs and test ordering
    return np.random.default_rng(_seed(request.node.name))


def _seed(name: str) -> int:
    return sum((i + 1) * ord(c) for i, c in enumerate(name)) % 2**32


@pytest.fixture
def small_grid():
    return SpaceTimeGrid(1.0, 2, 2, 2)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n, name in CRITERIA.items():
        if n in _results:
            ok, detail = _results[n]
            verdict = "PASS" if ok else "FAIL"
        else:
            verdict, detail = "FAIL", "not reached"
        terminalreporter.write_line(f"criterion {n:2d} {verdict}  {name}: {detail}")
