import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import settings

from chebconvex.functions import builtin, monomial
from chebconvex.systems import Domain, builtin_system

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def vandermonde(points):
    return math.prod(b - a for a, b in itertools.combinations(points, 2))


def rel_close(a, b, rel):
    a, b = float(a), float(b)
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


@pytest.fixture
def poly2():
    return builtin_system("poly", 2).extend()


@pytest.fixture
def poly3():
    return builtin_system("poly", 3).extend()


@pytest.fixture
def p2():
    return monomial(2)


@pytest.fixture
def p3():
    return monomial(3)


def random_rational(rng, lo=-10, hi=10, den=64):
    return Fraction(int(rng.integers(lo * den, hi * den + 1)), den)


def random_increasing(rng, k, lo=-10, hi=10, den=64):
    while True:
        pts = sorted({random_rational(rng, lo, hi, den) for _ in range(k)})
        if len(pts) == k:
            return pts


def trig_odd_extension():
    # x is strictly convex with respect to (1, cos kx, sin kx)_{k<=n}
    return builtin("poly", 0, 1)


__all__ = ["Domain", "rel_close", "vandermonde", "random_increasing", "random_rational", "trig_odd_extension"]
