"""Number-type plumbing shared by every module.

Three arithmetics are supported and selected by a string:

``"float"``
    IEEE doubles, the default.
``"exact"``
    :class:`fractions.Fraction`; only for rational-valued functions.
``"mp"``
    :class:`mpmath.mpf` at the precision of the active mpmath context.

The determinant and solver below are written once and work for all three,
since they only use ``+ - * /``, ``abs`` and comparisons.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

import mpmath

from .errors import InexactArithmeticError, SpecError

ARITHMETICS = ("float", "exact", "mp")


def check_arithmetic(arithmetic: str) -> str:
    if arithmetic not in ARITHMETICS:
        raise SpecError(f"unknown arithmetic {arithmetic!r}; expected one of {ARITHMETICS}")
    return arithmetic


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, mpmath.mpf):
        if not mpmath.isfinite(x):
            raise ValueError("non-finite value has no rational form")
        man, e = x.man_exp
        return Fraction(int(man)) * Fraction(2) ** int(e)
    return Fraction(x)


def to_mpf(x):
    if isinstance(x, mpmath.mpf):
        return x
    if isinstance(x, Rational):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def coerce(x, arithmetic: str):
    """Convert a scalar to the number type of ``arithmetic``."""
    if arithmetic == "float":
        return float(x)
    if arithmetic == "exact":
        return to_fraction(x)
    return to_mpf(x)


def like(c, x):
    """Convert constant ``c`` to the number type of the argument ``x``."""
    if isinstance(x, mpmath.mpf):
        return to_mpf(c)
    if isinstance(x, (Fraction, int)) and not isinstance(x, bool):
        return to_fraction(c)
    return float(c)


def _transcendental(name: str, x):
    if isinstance(x, mpmath.mpf):
        return getattr(mpmath, name)(x)
    if isinstance(x, (Fraction, int)) and not isinstance(x, bool):
        raise InexactArithmeticError(f"{name} has no exact rational evaluation")
    return getattr(math, name)(x)


def exp(x):
    return _transcendental("exp", x)


def sin(x):
    return _transcendental("sin", x)


def cos(x):
    return _transcendental("cos", x)


def pi_like(x):
    if isinstance(x, mpmath.mpf):
        return +mpmath.pi
    return math.pi


def det(matrix):
    """Determinant by Gaussian elimination with partial pivoting.

    ``matrix`` is a sequence of rows; it is copied, never mutated.  The
    entries may be floats, Fractions or mpf values (not mixed).
    """
    a = [list(row) for row in matrix]
    n = len(a)
    if n == 0:
        return 1
    if any(len(row) != n for row in a):
        raise ValueError("determinant of a non-square matrix")
    if all(isinstance(v, Rational) for row in a for v in row):
        return _det_rational(a)
    result = a[0][0] ** 0
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(a[i][k]))
        pivot = a[p][k]
        if pivot == 0:
            return a[0][0] * 0
        if p != k:
            a[k], a[p] = a[p], a[k]
            result = -result
        result = result * pivot
        row_k = a[k]
        for i in range(k + 1, n):
            m = a[i][k] / pivot
            if m != 0:
                row_i = a[i]
                for j in range(k + 1, n):
                    row_i[j] = row_i[j] - m * row_k[j]
    return result


def _det_rational(a) -> Fraction:
    """Exact determinant: clear row denominators, then fraction-free elimination."""
    scale = 1
    rows = []
    for row in a:
        den = math.lcm(*(Fraction(v).denominator for v in row))
        scale *= den
        rows.append([int(Fraction(v) * den) for v in row])
    n = len(rows)
    sign, prev = 1, 1
    for k in range(n - 1):
        if rows[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if rows[i][k] != 0), None)
            if swap is None:
                return Fraction(0)
            rows[k], rows[swap] = rows[swap], rows[k]
            sign = -sign
        pivot = rows[k][k]
        for i in range(k + 1, n):
            ri, rk = rows[i], rows[k]
            for j in range(k + 1, n):
                ri[j] = (ri[j] * pivot - ri[k] * rk[j]) // prev
        prev = pivot
    return Fraction(sign * rows[n - 1][n - 1], scale)


def solve(matrix, rhs):
    """Solve a square system by elimination with partial pivoting."""
    n = len(matrix)
    a = [list(row) + [b] for row, b in zip(matrix, rhs)]
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(a[i][k]))
        if a[p][k] == 0:
            raise ZeroDivisionError("singular linear system")
        a[k], a[p] = a[p], a[k]
        for i in range(k + 1, n):
            m = a[i][k] / a[k][k]
            if m != 0:
                for j in range(k, n + 1):
                    a[i][j] = a[i][j] - m * a[k][j]
    x = [None] * n
    for i in reversed(range(n)):
        s = a[i][n]
        for j in range(i + 1, n):
            s = s - a[i][j] * x[j]
        x[i] = s / a[i][i]
    return x


def hadamard_bound(matrix) -> float:
    """Product of the Euclidean row norms, an upper bound for ``|det|``."""
    bound = 1.0
    for row in matrix:
        bound *= math.sqrt(sum(float(v) ** 2 for v in row))
    return bound
