import random

import mpmath
import pytest
from mpmath import mpc

from cmunits.bignum import PrecisionPolicy


@pytest.fixture
def p256():
    return PrecisionPolicy(256, 64)


@pytest.fixture
def p128():
    return PrecisionPolicy(128, 32)


@pytest.fixture
def theta23():
    def make(policy):
        with policy.context():
            return mpc(-23, mpmath.sqrt(23)) / 2
    return make


def random_taus(seed, count, lo=0.5, hi=2.0):
    rng = random.Random(seed)
    return [mpc(rng.uniform(-0.5, 0.5), rng.uniform(lo, hi)) for _ in range(count)]


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """report(criterion, ok, detail): print one PASS/FAIL line, keep it for the summary, then assert."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def _report(criterion, ok, detail=""):
        line = f"{criterion:4} {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        print(line)
        lines.append(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
