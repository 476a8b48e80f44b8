import numpy as np
import pytest

from cyclicprox import shipped_scenario
from cyclicprox.geometry import Region
from cyclicprox.order import OrderRelation, OrderThresholds
from cyclicprox.scenario import parse_scenario
from cyclicprox.system import AffinePiece, CyclicSystem, MultiMap


def two_interval_system(k=0.5):
    """A1=[0,1], A2=[2,3], Tx = 2 + k(1-x) on A1 and Ty = 1 - k(y-2) on A2."""
    pieces = [AffinePiece.make([2.0], -k, [1.0]), AffinePiece.make([1.0], -k, [2.0])]
    return CyclicSystem((Region.interval(0, 1), Region.interval(2, 3)),
                        MultiMap.affine(pieces), (k, k))


def intersecting_system():
    """A1 = A2 = [0,1] with Tx = x/2 on both."""
    pieces = [AffinePiece.make([0.0], 0.5, [0.0]), AffinePiece.make([0.0], 0.5, [0.0])]
    return CyclicSystem((Region.interval(0, 1), Region.interval(0, 1)),
                        MultiMap.affine(pieces), (0.5, 0.5))


@pytest.fixture
def two_interval():
    return two_interval_system()


@pytest.fixture
def intersecting():
    return intersecting_system()


@pytest.fixture
def componentwise():
    return OrderRelation("componentwise")


@pytest.fixture
def thresholds():
    return OrderThresholds(1.5, (1.5, 1.5))


@pytest.fixture(params=["two_interval", "intersecting", "ball_valued", "violating", "three_box"])
def shipped(request):
    return parse_scenario(shipped_scenario(request.param))


def random_cloud(rng, n_max=20, d_max=3, d=None):
    d = d or int(rng.integers(1, d_max + 1))
    n = int(rng.integers(1, n_max + 1))
    return Region.cloud(rng.normal(size=(n, d)) * rng.uniform(0.5, 3.0) + rng.normal(size=d))


ACCEPTANCE_LINES: dict = {}


def record_criterion(number, name, ok, detail):
    """Store one summary line for the acceptance report printed at session end."""
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
