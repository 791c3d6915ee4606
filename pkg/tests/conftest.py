import time

import numpy as np
import pytest

from loopsoliton import elliptic as el
from loopsoliton import hyperelliptic as hy

CANONICAL = (-2.0, -1.0, 0.0, 1.0, 2.0)
PERTURBED = (-2.1, -0.9, 0.1, 1.2, 2.3)
COMPLEX_BP = (-2.0, -1.0 + 0.5j, 0.0, 1.0 - 0.5j, 2.2)
# a2 = -lambda4 / 3 holds for these (a2 is the third sorted branch point)
CONSTRAINED = (CANONICAL, (-2.0, -1.0, 0.5, 1.0, 3.0))


@pytest.fixture(scope="session")
def lemniscatic():
    return el.curve_from_invariants(4, 0)


@pytest.fixture(scope="session")
def equianharmonic():
    return el.curve_from_invariants(0, 4)


@pytest.fixture(scope="session")
def canonical():
    return hy.curve_from_branch_points(CANONICAL)


@pytest.fixture(scope="session", params=[CANONICAL, PERTURBED, COMPLEX_BP], ids=["canonical", "perturbed", "complex"])
def g2_curve(request):
    return hy.curve_from_branch_points(request.param)


@pytest.fixture(scope="session", params=CONSTRAINED, ids=["canonical", "shifted"])
def constrained_curve(request):
    return hy.curve_from_branch_points(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


# --------------------------------------------------------------------------
# acceptance ledger: test_acceptance appends one line per criterion and the
# terminal summary repeats them, so they show up without -s

ACCEPTANCE: list[str] = []
SUITE_BUDGET = 300.0  # seconds for the whole suite


def pytest_sessionstart(session):
    session.config._loopsoliton_t0 = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    elapsed = time.perf_counter() - config._loopsoliton_t0
    tr = terminalreporter
    tr.section("acceptance criteria")
    for line in ACCEPTANCE:
        tr.write_line(line)
    ran = sum(len(tr.stats.get(k, [])) for k in ("passed", "failed", "error"))
    verdict = "PASS" if elapsed < SUITE_BUDGET else "FAIL"
    tr.write_line(f"{verdict}  suite runtime: {ran} tests in {elapsed:.1f} s (< {SUITE_BUDGET:.0f} s)")
