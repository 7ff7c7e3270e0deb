import math

import numpy as np
import pytest
from hypothesis import settings

from effplan import Ellipsoid, FlatTorus, Hemisphere, Sphere

settings.register_profile("effplan", max_examples=60, deadline=None)
settings.load_profile("effplan")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def s2():
    return Sphere(2)


@pytest.fixture(scope="session")
def t2():
    return FlatTorus(2)


@pytest.fixture(scope="session")
def hemi():
    return Hemisphere()


@pytest.fixture(scope="session")
def round_ellipsoid():
    return Ellipsoid(1.0, 1.0, 1.0)


def torus_distance_bruteforce(p, q, reach=2):
    """Distance on R^n / (2 pi Z)^n by minimizing over lattice translates of q."""
    p, q = np.atleast_1d(p), np.atleast_1d(q)
    best = math.inf
    for k in np.ndindex(*(2 * reach + 1,) * len(p)):
        shift = 2.0 * math.pi * (np.array(k) - reach)
        best = min(best, float(np.linalg.norm(q + shift - p)))
    return best


def great_circle(p, q):
    """arccos oracle, adequate away from 0 and pi."""
    return math.acos(max(-1.0, min(1.0, float(np.dot(p, q)))))


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
