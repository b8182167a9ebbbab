"""Generalized divided differences over an extended Chebyshev system.

For an extended system ``(w_1, ..., w_n, w_{n+1})`` the divided difference
of ``f`` at ``x_0 < ... < x_n`` is the ratio of the determinant with ``f``
in the last row to the determinant with ``w_{n+1}`` in the last row.  For
the polynomial system it is the classical ``n``-th divided difference.

Any divided difference over a sub-configuration of a grid is a convex
combination of the divided differences over the consecutive
``(n+1)``-point windows of that grid.  :func:`decompose` produces those
coefficients twice, once by repeated one-point insertion and once by
least squares on the delta-function basis, and checks that both agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _arith
from .errors import (
    ConfigurationLengthError,
    DenominatorNotPositiveError,
    GridTooSmallError,
    InconsistentOracleError,
    SpecError,
)
from .functions import CallableFunction, SampledFunction
from .systems import (
    ChebSystem,
    ExtendedSystem,
    check_configuration,
    collocation_matrix,
    is_nonnegative,
    phi_and_scale,
)


@dataclass(frozen=True)
class DividedDifferenceValue:
    value: object
    config: tuple
    numerator: object
    denominator: object

    def __float__(self):
        return float(self.value)


def _dd(system: ExtendedSystem, f: SampledFunction, pts: Sequence):
    """Numerator, denominator and ratio at already-coerced points."""
    base = collocation_matrix(system.base.basis, pts)
    num = _arith.det(base + [[f(x) for x in pts]])
    den = _arith.det(base + [[system.extension(x) for x in pts]])
    if not den > 0:
        raise DenominatorNotPositiveError(
            f"extended system determinant is {den} at {tuple(pts)}; the extension is not strictly convex there"
        )
    return num, den, num / den


def _dd_value(system, f, pts):
    return _dd(system, f, pts)[2]


def divided_difference(
    system: ExtendedSystem, f: SampledFunction, config: Sequence, *, arithmetic: str = "float"
) -> DividedDifferenceValue:
    """Generalized divided difference of ``f`` at an ``(n+1)``-point configuration."""
    _arith.check_arithmetic(arithmetic)
    pts = check_configuration(config, system.domain)
    if len(pts) != system.n + 1:
        raise ConfigurationLengthError(f"divided difference needs {system.n + 1} points, got {len(pts)}")
    cpts = [_arith.coerce(x, arithmetic) for x in pts]
    num, den, value = _dd(system, f, cpts)
    return DividedDifferenceValue(value, pts, num, den)


def classical_divided_difference(f: SampledFunction, config: Sequence, *, arithmetic: str = "float"):
    """Three-term second-order divided difference ``[x, y, z; f]``."""
    pts = check_configuration(config)
    if len(pts) != 3:
        raise ConfigurationLengthError("classical second-order divided difference needs 3 points")
    x, y, z = (_arith.coerce(p, arithmetic) for p in pts)
    return f(x) / ((y - x) * (z - x)) + f(y) / ((x - y) * (z - y)) + f(z) / ((x - z) * (y - z))


def _point_indicator(point) -> CallableFunction:
    return CallableFunction(lambda x: _arith.like(1 if x == point else 0, x), exact=True, name="delta")


def _deletion_weight(system: ExtendedSystem, pts: Sequence, j: int):
    n = system.n
    one = pts[0] ** 0
    if j == 0:
        return one * 0
    if j == n + 1:
        return one
    star = system.functions
    base = system.base.basis
    left_star = _arith.det(collocation_matrix(star, pts[: n + 1]))
    right_star = _arith.det(collocation_matrix(star, pts[1:]))
    right = _arith.det(collocation_matrix(base, pts[1:j] + pts[j + 1 :]))
    left = _arith.det(collocation_matrix(base, pts[:j] + pts[j + 1 : n + 1]))
    for name, v in (("extended", left_star), ("extended", right_star), ("base", left), ("base", right)):
        if not v > 0:
            raise DenominatorNotPositiveError(f"{name} system determinant {v} is not positive on grid {tuple(pts)}")
    ratio = (left_star / right_star) * (right / left)
    return ratio / (1 + ratio)


def deletion_weight(system: ExtendedSystem, grid: Sequence, j: int, *, arithmetic: str = "float"):
    """Weight ``A_j`` of the one-point deletion identity on ``n+2`` points.

    Deleting ``x_j`` from ``x_0 < ... < x_{n+1}`` gives a divided difference
    equal to ``A_j [x_0..x_n; f] + (1 - A_j) [x_1..x_{n+1}; f]`` for every
    ``f``; ``A_0 = 0``, ``A_{n+1} = 1``, and for interior ``j`` the odds
    ``A_j / (1 - A_j)`` are a ratio of four determinants.
    """
    _arith.check_arithmetic(arithmetic)
    pts = check_configuration(grid, system.domain)
    if len(pts) != system.n + 2:
        raise ConfigurationLengthError(f"deletion grid needs {system.n + 2} points, got {len(pts)}")
    if not 0 <= j <= system.n + 1:
        raise IndexError(f"j={j} outside 0..{system.n + 1}")
    return _deletion_weight(system, [_arith.coerce(x, arithmetic) for x in pts], j)


def deletion_residual(system: ExtendedSystem, grid: Sequence, j: int, a, *, arithmetic: str = "float"):
    """Largest defect of the deletion identity over the delta-function basis.

    The defect is divided by the largest magnitude occurring in the
    identity, so the result is scale free.
    """
    n = system.n
    pts = [_arith.coerce(x, arithmetic) for x in check_configuration(grid, system.domain)]
    a = _arith.coerce(a, arithmetic)
    reduced = pts[:j] + pts[j + 1 :]
    worst = scale = 0
    for point in pts:
        delta = _point_indicator(point)
        lhs = _dd_value(system, delta, reduced)
        rhs = a * _dd_value(system, delta, pts[: n + 1]) + (1 - a) * _dd_value(system, delta, pts[1:])
        worst = max(worst, abs(lhs - rhs))
        scale = max(scale, abs(lhs), abs(rhs))
    return worst / scale if scale else worst


@dataclass(frozen=True)
class DecompositionCertificate:
    """Convex weights over the consecutive windows of a grid.

    ``coefficients[i]`` multiplies the window ``grid[i : i+n+1]``.  They come
    from the insertion induction; ``linear_coefficients`` are the least
    squares solution of the delta-basis system.  ``residual`` is the
    relative defect of the identity over the delta basis and
    ``disagreement`` the largest difference between the two routes.
    """

    target: tuple
    grid: tuple
    indices: tuple
    coefficients: tuple
    linear_coefficients: tuple
    residual: object
    disagreement: object


def _check_indices(indices, m, n):
    idx = tuple(int(i) for i in indices)
    if len(idx) != n + 1:
        raise ConfigurationLengthError(f"need {n + 1} indices, got {len(idx)}")
    if any(a >= b for a, b in zip(idx, idx[1:])) or idx[0] < 0 or idx[-1] > m:
        raise SpecError(f"indices must be strictly increasing within 0..{m}, got {idx}")
    return idx


def _induction(system: ExtendedSystem, pts: list, idx: tuple) -> list:
    n = system.n
    m = len(pts) - 1
    memo = {}
    zero = pts[0] * 0

    def rec(lo, hi, sub):
        # sub is a sorted tuple of absolute indices inside lo..hi; returns {window start: weight}
        key = (lo, hi, sub)
        if key in memo:
            return memo[key]
        if sub[-1] - sub[0] == n:
            out = {sub[0]: zero + 1}
        else:
            extra = next(i for i in range(lo, hi + 1) if i not in sub)
            aug = tuple(sorted(sub + (extra,)))
            j = aug.index(extra)
            a = _deletion_weight(system, [pts[i] for i in aug], j)
            out = {}
            if a != 0:
                for w, c in rec(lo, hi - 1, aug[: n + 1]).items():
                    out[w] = out.get(w, zero) + a * c
            if a != 1:
                for w, c in rec(lo + 1, hi, aug[1:]).items():
                    out[w] = out.get(w, zero) + (1 - a) * c
        memo[key] = out
        return out

    weights = rec(0, m, idx)
    return [weights.get(i, zero) for i in range(m - n + 1)]


def _delta_system(system, pts, idx):
    """Rows: grid points; columns: windows.  Entry = [window; delta_k]."""
    n = system.n
    m = len(pts) - 1
    target = [pts[i] for i in idx]
    matrix, rhs = [], []
    zero = pts[0] * 0
    for k, point in enumerate(pts):
        delta = _point_indicator(point)
        row = []
        for i in range(m - n + 1):
            row.append(_dd_value(system, delta, pts[i : i + n + 1]) if i <= k <= i + n else zero)
        matrix.append(row)
        rhs.append(_dd_value(system, delta, target) if k in idx else zero)
    return matrix, rhs


def decompose(
    system: ExtendedSystem,
    grid: Sequence,
    indices: Sequence[int],
    *,
    arithmetic: str = "float",
    agreement_tol: float = 1e-8,
) -> DecompositionCertificate:
    """Express ``[grid[indices]; f]`` as a convex combination of window values.

    Raises
    ------
    InconsistentOracleError
        The induction and the least-squares route disagree by more than
        ``agreement_tol`` (exactly, in exact arithmetic).
    """
    _arith.check_arithmetic(arithmetic)
    n = system.n
    raw = check_configuration(grid, system.domain)
    m = len(raw) - 1
    if m < n:
        raise GridTooSmallError(f"grid needs at least {n + 1} points, got {m + 1}")
    idx = _check_indices(indices, m, n)
    pts = [_arith.coerce(x, arithmetic) for x in raw]

    induced = _induction(system, pts, idx)
    matrix, rhs = _delta_system(system, pts, idx)
    if arithmetic == "float":
        linear = list(np.linalg.lstsq(np.array(matrix, dtype=float), np.array(rhs, dtype=float), rcond=None)[0])
        linear = [float(c) for c in linear]
    else:
        cols = range(len(matrix[0]))
        normal = [[sum(row[a] * row[b] for row in matrix) for b in cols] for a in cols]
        normal_rhs = [sum(row[a] * r for row, r in zip(matrix, rhs)) for a in cols]
        linear = _arith.solve(normal, normal_rhs)

    worst = scale = 0
    for row, r in zip(matrix, rhs):
        combo = sum((c * v for c, v in zip(induced, row)), pts[0] * 0)
        worst = max(worst, abs(combo - r))
        scale = max(scale, abs(r))
    residual = worst / scale if scale else worst
    disagreement = max(abs(a - b) for a, b in zip(induced, linear))
    if (arithmetic == "exact" and disagreement != 0) or disagreement > agreement_tol:
        raise InconsistentOracleError(
            f"induction weights {[float(c) for c in induced]} and least-squares weights "
            f"{[float(c) for c in linear]} differ by {float(disagreement):.3g}"
        )
    return DecompositionCertificate(
        target=tuple(raw[i] for i in idx),
        grid=raw,
        indices=idx,
        coefficients=tuple(induced),
        linear_coefficients=tuple(linear),
        residual=residual,
        disagreement=disagreement,
    )


@dataclass(frozen=True)
class ChainBounds:
    lower: object
    mid: object
    upper: object
    window_values: tuple

    def holds(self, tol: float = 0.0) -> bool:
        return self.lower - tol <= self.mid <= self.upper + tol


def window_values(system: ExtendedSystem, f: SampledFunction, pts: Sequence) -> list:
    n = system.n
    return [_dd_value(system, f, pts[i : i + n + 1]) for i in range(len(pts) - n)]


def chain_bounds(
    system: ExtendedSystem, f: SampledFunction, grid: Sequence, indices: Sequence[int], *, arithmetic: str = "float"
) -> ChainBounds:
    """Window minimum, sub-configuration value and window maximum."""
    _arith.check_arithmetic(arithmetic)
    n = system.n
    raw = check_configuration(grid, system.domain)
    if len(raw) < n + 1:
        raise GridTooSmallError(f"grid needs at least {n + 1} points, got {len(raw)}")
    idx = _check_indices(indices, len(raw) - 1, n)
    pts = [_arith.coerce(x, arithmetic) for x in raw]
    windows = window_values(system, f, pts)
    mid = _dd_value(system, f, [pts[i] for i in idx])
    return ChainBounds(min(windows), mid, max(windows), tuple(windows))


@dataclass(frozen=True)
class DiscreteConvexityReport:
    """Outcome of the consecutive-window test on a finite grid.

    A ``"convex"`` verdict is a certificate: nonnegative window
    determinants imply nonnegativity on every sub-configuration.
    ``spot_failures`` lists random sub-configurations that nevertheless
    came out negative, which can only be numerical breakdown.
    """

    verdict: str
    window_phis: tuple
    witness: tuple | None
    witness_window: int | None
    spot_checked: int
    spot_failures: tuple


def _base_functions(system):
    return system.base.basis if isinstance(system, ExtendedSystem) else system.basis


def check_discrete_convexity(
    system: ChebSystem | ExtendedSystem,
    f: SampledFunction,
    grid: Sequence,
    *,
    spot_checks: int = 16,
    seed: int = 0,
    arithmetic: str = "float",
    eps_abs: float = 1e-12,
    eps_rel: float = 1e-9,
) -> DiscreteConvexityReport:
    """Decide convexity of ``f`` on a finite grid from its consecutive windows."""
    _arith.check_arithmetic(arithmetic)
    base = _base_functions(system)
    n = len(base)
    raw = check_configuration(grid, system.domain)
    m = len(raw) - 1
    if m < n:
        raise GridTooSmallError(f"grid needs at least {n + 1} points, got {m + 1}")
    pts = [_arith.coerce(x, arithmetic) for x in raw]
    fns = tuple(base) + (f,)

    phis = []
    witness_window = None
    for i in range(m - n + 1):
        value, scale = phi_and_scale(fns, pts[i : i + n + 1])
        phis.append(value)
        if witness_window is None and not is_nonnegative(value, scale, eps_abs, eps_rel):
            witness_window = i
    if witness_window is not None:
        return DiscreteConvexityReport(
            "not-convex", tuple(phis), raw[witness_window : witness_window + n + 1], witness_window, 0, ()
        )

    rng = np.random.default_rng(seed)
    failures = []
    for _ in range(spot_checks):
        sub = sorted(int(i) for i in rng.choice(m + 1, size=n + 1, replace=False))
        value, scale = phi_and_scale(fns, [pts[i] for i in sub])
        if not is_nonnegative(value, scale, eps_abs, eps_rel):
            failures.append(tuple(sub))
    return DiscreteConvexityReport("convex", tuple(phis), None, None, spot_checks, tuple(failures))


# alternative name used by the operation contract
lemma1_coefficient = deletion_weight


def overlapping_subgrids(grid: Sequence, size: int, overlap: int) -> list:
    """Cover ``grid`` by consecutive sub-grids of ``size`` points sharing ``overlap`` points.

    With ``overlap == n`` every consecutive ``(n+1)``-window of the grid lies
    inside some sub-grid, so local certificates combine into a global one.
    """
    pts = tuple(grid)
    if not 0 <= overlap < size:
        raise ValueError("need 0 <= overlap < size")
    if len(pts) <= size:
        return [pts]
    out = []
    start = 0
    step = size - overlap
    while True:
        out.append(pts[start : start + size])
        if start + size >= len(pts):
            break
        start += step
    return out
