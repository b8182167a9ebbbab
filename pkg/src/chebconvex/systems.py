"""Chebyshev systems and the determinant functional.

For functions ``w_1, ..., w_k`` and points ``x_1 < ... < x_k`` the
determinant functional is ``det[w_i(x_j)]``.  A system is a (positive)
Chebyshev system when that determinant is positive for every strictly
increasing tuple of its domain.  Positivity is never verified over a
continuum; it is checked at the configurations actually evaluated.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _arith
from .errors import (
    ConfigurationLengthError,
    DomainNotPositiveError,
    DomainTooLongError,
    IllConditionedWarning,
    NotStrictlyOrderedError,
    OutOfDomainError,
    SpecError,
)
from .functions import BuiltinFunction, SampledFunction, TableFunction, monomial

DEFAULT_COND_THRESHOLD = 1e12


@dataclass(frozen=True)
class Domain:
    """An interval (possibly unbounded) or a finite set of reals."""

    kind: str
    lo: float
    hi: float
    closed_lo: bool = True
    closed_hi: bool = True
    points: tuple = ()

    def __post_init__(self):
        if self.kind == "interval":
            if not self.lo < self.hi:
                raise SpecError(f"interval domain needs lo < hi, got [{self.lo}, {self.hi}]")
        elif self.kind == "finite-set":
            if not self.points:
                raise SpecError("finite-set domain needs at least one point")
            if any(a >= b for a, b in zip(self.points, self.points[1:])):
                raise SpecError("finite-set domain points must be strictly increasing")
        else:
            raise SpecError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def interval(cls, lo, hi, closed_lo: bool = True, closed_hi: bool = True) -> "Domain":
        closed_lo = closed_lo and math.isfinite(lo)
        closed_hi = closed_hi and math.isfinite(hi)
        return cls("interval", lo, hi, closed_lo, closed_hi)

    @classmethod
    def open_interval(cls, lo, hi) -> "Domain":
        return cls.interval(lo, hi, False, False)

    @classmethod
    def real_line(cls) -> "Domain":
        return cls.interval(-math.inf, math.inf)

    @classmethod
    def finite(cls, points: Iterable) -> "Domain":
        pts = tuple(points)
        return cls("finite-set", pts[0] if pts else 0, pts[-1] if pts else 0, True, True, pts)

    @property
    def is_finite_set(self) -> bool:
        return self.kind == "finite-set"

    @property
    def width(self):
        return self.hi - self.lo

    def contains(self, x) -> bool:
        if self.kind == "finite-set":
            return x in self._point_set
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and not self.closed_lo:
            return False
        if x == self.hi and not self.closed_hi:
            return False
        return True

    @property
    def _point_set(self):
        return frozenset(self.points)

    def to_spec(self) -> dict:
        if self.kind == "finite-set":
            return {"points": [float(p) for p in self.points]}
        spec = {"lo": _inf_json(self.lo), "hi": _inf_json(self.hi)}
        if math.isfinite(self.lo) and not self.closed_lo:
            spec["closed_lo"] = False
        if math.isfinite(self.hi) and not self.closed_hi:
            spec["closed_hi"] = False
        return spec


def _inf_json(v):
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return float(v)


@dataclass(frozen=True)
class ChebSystem:
    """An ``n``-dimensional system of basis functions over a domain.

    ``kind`` and ``order`` record the builtin family (``order`` is the
    family parameter, e.g. 3 for ``poly(3)``); ``kind == "table"`` for
    tabulated systems and ``"custom"`` otherwise.
    """

    basis: tuple
    domain: Domain
    kind: str = "custom"
    order: int | None = None
    default_extension: SampledFunction | None = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return len(self.basis)

    @property
    def exact(self) -> bool:
        return all(b.exact for b in self.basis)

    @property
    def descriptor(self) -> str:
        if self.kind == "table":
            return "tabulated"
        return self.kind if self.order is None else f"{self.kind}({self.order})"

    @property
    def functions(self) -> tuple:
        return self.basis

    def extend(self, extension: SampledFunction | None = None) -> "ExtendedSystem":
        """Append a strictly convex extension function.

        Only polynomial systems have a default (the next power); any other
        system needs an explicit ``extension``.
        """
        if extension is None:
            extension = self.default_extension
        if extension is None:
            raise SpecError(
                f"{self.descriptor} system has no default extension; supply a strictly convex one"
            )
        return ExtendedSystem(self, extension)


@dataclass(frozen=True)
class ExtendedSystem:
    """A Chebyshev system together with one extra function ``w_{n+1}``."""

    base: ChebSystem
    extension: SampledFunction

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def domain(self) -> Domain:
        return self.base.domain

    @property
    def exact(self) -> bool:
        return self.base.exact and self.extension.exact

    @property
    def functions(self) -> tuple:
        return self.base.basis + (self.extension,)


def builtin_system(kind: str, n: int | None = None, domain: Domain | None = None) -> ChebSystem:
    """Construct one of the builtin Chebyshev systems.

    Parameters
    ----------
    kind : {"poly", "trig-odd", "trig-even", "one-xsq"}
        ``poly(n)`` is ``(1, x, ..., x^{n-1})``; ``trig-odd(n)`` is
        ``(1, cos x, sin x, ..., cos nx, sin nx)`` of dimension ``2n+1``;
        ``trig-even(n)`` drops the constant (dimension ``2n``);
        ``one-xsq`` is ``(1, x^2)``.
    n : int
        Family parameter; ignored for ``one-xsq``.
    domain : Domain, optional
        Defaults to the real line for ``poly``, ``(-pi, pi)`` for
        ``trig-odd``, ``(-pi/2, pi/2)`` for ``trig-even`` and ``(0, inf)``
        for ``one-xsq``.

    Raises
    ------
    DomainTooLongError
        Trigonometric system on a domain where some pair of points is
        ``2 pi`` (odd) or ``pi`` (even) or more apart.
    DomainNotPositiveError
        ``one-xsq`` on a domain that is not inside the positive reals.
    """
    if kind != "one-xsq" and (n is None or int(n) != n or n < 1):
        raise SpecError(f"{kind} needs a positive integer parameter n, got {n!r}")
    if kind == "poly":
        domain = domain or Domain.real_line()
        basis = tuple(monomial(k) for k in range(n))
        return ChebSystem(basis, domain, "poly", n, default_extension=monomial(n))
    if kind in ("trig-odd", "trig-even"):
        limit = 2 * math.pi if kind == "trig-odd" else math.pi
        if domain is None:
            domain = Domain.open_interval(-limit / 2, limit / 2)
        _check_span(domain, limit, kind)
        basis = [BuiltinFunction("poly", [1])] if kind == "trig-odd" else []
        for k in range(1, n + 1):
            basis.append(BuiltinFunction("cos", [k]))
            basis.append(BuiltinFunction("sin", [k]))
        return ChebSystem(tuple(basis), domain, kind, n)
    if kind == "one-xsq":
        domain = domain or Domain.open_interval(0, math.inf)
        if domain.is_finite_set:
            positive = domain.points[0] > 0
        else:
            positive = domain.lo > 0 or (domain.lo == 0 and not domain.closed_lo)
        if not positive:
            raise DomainNotPositiveError(
                "(1, x^2) is a Chebyshev system only on subsets of the positive reals; "
                "e.g. its determinant vanishes at (-1, 1)"
            )
        return ChebSystem((monomial(0), monomial(2)), domain, "one-xsq", None)
    raise SpecError(f"unknown system kind {kind!r}")


def _check_span(domain: Domain, limit: float, kind: str):
    span = domain.width
    if domain.is_finite_set:
        ok = span < limit
    else:
        ok = span < limit or (span == limit and not (domain.closed_lo and domain.closed_hi))
    if not ok:
        raise DomainTooLongError(f"{kind} needs a domain shorter than {limit:.6g}, got length {span}")


def tabulated_system(points: Sequence, values: Sequence[Sequence]) -> ChebSystem:
    """System whose ``i``-th basis function takes ``values[i][j]`` at ``points[j]``."""
    if not values:
        raise SpecError("tabulated system needs at least one basis row")
    basis = tuple(TableFunction(points, row) for row in values)
    return ChebSystem(basis, Domain.finite(points), "table", None)


def check_configuration(points: Sequence, domain: Domain | None = None) -> tuple:
    """Validate a strictly increasing configuration inside ``domain``."""
    pts = tuple(points)
    for i, (a, b) in enumerate(zip(pts, pts[1:])):
        if not a < b:
            raise NotStrictlyOrderedError(f"configuration not strictly increasing at positions {i}, {i + 1}: {a} >= {b}")
    if domain is not None:
        for x in pts:
            if not domain.contains(x):
                raise OutOfDomainError(f"point {x} lies outside the domain")
    return pts


def collocation_matrix(functions: Sequence, points: Sequence) -> list:
    """Matrix with entry ``(i, j)`` equal to ``functions[i](points[j])``."""
    return [[fn(x) for x in points] for fn in functions]


def phi_unchecked(functions: Sequence, points: Sequence):
    """Determinant functional without ordering, domain or conditioning checks."""
    return _arith.det(collocation_matrix(functions, points))


def phi_and_scale(functions: Sequence, points: Sequence):
    """Determinant and its Hadamard bound, for sign decisions with tolerance."""
    matrix = collocation_matrix(functions, points)
    return _arith.det(matrix), _arith.hadamard_bound(matrix)


def is_nonnegative(value, scale: float, eps_abs: float = 1e-12, eps_rel: float = 1e-9) -> bool:
    """Tolerant sign test ``value >= -(eps_abs + eps_rel * scale)``.

    Exact (Fraction) values are compared with zero directly.
    """
    if isinstance(value, Fraction) or isinstance(value, int):
        return value >= 0
    return value >= -(eps_abs + eps_rel * scale)


class PhiValue(float):
    """Float determinant value carrying its condition estimate.

    ``ill_conditioned`` is set when the 2-norm condition number of the
    collocation matrix exceeds the threshold in force; the value is still
    returned.
    """

    condition: float
    ill_conditioned: bool

    def __new__(cls, value, condition=math.nan, ill_conditioned=False):
        obj = super().__new__(cls, value)
        obj.condition = condition
        obj.ill_conditioned = ill_conditioned
        return obj


def stack_functions(system, f: SampledFunction | None = None) -> tuple:
    """Rows of the determinant: the system, optionally with ``f`` appended.

    For an :class:`ExtendedSystem` with ``f`` given, ``f`` takes the place
    of the extension.
    """
    if isinstance(system, ExtendedSystem):
        return system.functions if f is None else system.base.basis + (f,)
    return system.basis if f is None else system.basis + (f,)


def evaluate_phi(
    system,
    config: Sequence,
    f: SampledFunction | None = None,
    *,
    arithmetic: str = "float",
    cond_threshold: float | None = DEFAULT_COND_THRESHOLD,
):
    """Evaluate the determinant functional of ``system`` (with ``f`` appended).

    Returns a :class:`PhiValue` in float arithmetic, a ``Fraction`` in
    exact arithmetic and an ``mpf`` in mp arithmetic.  In float
    arithmetic an :class:`IllConditionedWarning` is issued when the
    condition estimate exceeds ``cond_threshold`` (``None`` disables the
    estimate).
    """
    _arith.check_arithmetic(arithmetic)
    functions = stack_functions(system, f)
    pts = check_configuration(config, system.domain)
    if len(pts) != len(functions):
        raise ConfigurationLengthError(f"configuration has {len(pts)} points but the function stack has {len(functions)} rows")
    pts = [_arith.coerce(x, arithmetic) for x in pts]
    matrix = collocation_matrix(functions, pts)
    value = _arith.det(matrix)
    if arithmetic != "float":
        return value
    if cond_threshold is None:
        return PhiValue(value)
    cond = float(np.linalg.cond(np.asarray(matrix, dtype=float)))
    ill = not cond <= cond_threshold
    if ill:
        warnings.warn(
            IllConditionedWarning(f"collocation matrix condition estimate {cond:.3g} exceeds {cond_threshold:.3g}"),
            stacklevel=2,
        )
    return PhiValue(value, cond, ill)


@dataclass(frozen=True)
class PositivityEntry:
    config: tuple
    value: object
    sign: int


@dataclass(frozen=True)
class PositivityReport:
    entries: tuple
    verdict: str  # "positive" | "violated"

    @property
    def witness(self) -> PositivityEntry | None:
        for e in self.entries:
            if e.sign <= 0:
                return e
        return None


def validate_positivity(system, configs: Iterable[Sequence], *, arithmetic: str = "float") -> PositivityReport:
    """Evaluate the determinant functional eagerly on ``configs``."""
    entries = []
    for config in configs:
        value = evaluate_phi(system, config, arithmetic=arithmetic, cond_threshold=None)
        sign = (value > 0) - (value < 0)
        entries.append(PositivityEntry(tuple(config), value, sign))
    verdict = "positive" if all(e.sign > 0 for e in entries) else "violated"
    return PositivityReport(tuple(entries), verdict)


def all_configurations(points: Sequence, k: int):
    """All strictly increasing ``k``-tuples drawn from ``points``."""
    return itertools.combinations(sorted(points), k)


def _spec_number(v, where):
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return math.inf
        if s in ("-inf", "-infinity"):
            return -math.inf
        try:
            return Fraction(s)
        except ValueError:
            raise SpecError(f"{where}: cannot parse number {v!r}") from None
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecError(f"{where}: expected a number, got {v!r}")
    return v


def domain_from_spec(spec) -> Domain:
    if not isinstance(spec, dict):
        raise SpecError("domain must be a JSON object")
    if "points" in spec:
        return Domain.finite([_spec_number(p, "domain.points") for p in spec["points"]])
    lo = _spec_number(spec.get("lo", "-inf"), "domain.lo")
    hi = _spec_number(spec.get("hi", "inf"), "domain.hi")
    lo = -math.inf if lo is None else lo
    hi = math.inf if hi is None else hi
    return Domain.interval(lo, hi, bool(spec.get("closed_lo", True)), bool(spec.get("closed_hi", True)))


def system_from_spec(spec) -> ChebSystem:
    """Build a system from its JSON object form.

    ``{"kind": "poly"|"trig-odd"|"trig-even"|"one-xsq"|"table", "n": int,
    "domain": {"lo": r, "hi": r}, "table": {"points": [...], "values": [[...]]}}``
    """
    if not isinstance(spec, dict):
        raise SpecError("system spec must be a JSON object")
    kind = spec.get("kind")
    if kind == "table":
        table = spec.get("table")
        if not isinstance(table, dict) or "points" not in table or "values" not in table:
            raise SpecError("table system needs 'table': {'points': [...], 'values': [[...], ...]}")
        points = [_spec_number(p, f"table.points[{i}]") for i, p in enumerate(table["points"])]
        rows = table["values"]
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise SpecError("table.values must be a list of rows")
        for i, row in enumerate(rows):
            if len(row) != len(points):
                raise SpecError(f"table.values[{i}] has {len(row)} entries, expected {len(points)}")
        values = [[_spec_number(v, f"table.values[{i}]") for v in row] for i, row in enumerate(rows)]
        if "n" in spec and spec["n"] != len(values):
            raise SpecError(f"n={spec['n']} disagrees with {len(values)} table rows")
        return tabulated_system(points, values)
    if kind not in ("poly", "trig-odd", "trig-even", "one-xsq"):
        raise SpecError(f"system spec field 'kind' must be poly, trig-odd, trig-even, one-xsq or table; got {kind!r}")
    domain = domain_from_spec(spec["domain"]) if "domain" in spec else None
    n = spec.get("n")
    if kind != "one-xsq" and (not isinstance(n, int) or isinstance(n, bool)):
        raise SpecError(f"system spec field 'n' must be an integer for {kind}")
    return builtin_system(kind, n, domain)


def system_to_spec(system: ChebSystem) -> dict:
    if system.kind == "table":
        pts = system.domain.points
        return {
            "kind": "table",
            "n": system.n,
            "table": {"points": [float(p) for p in pts], "values": [[float(b(p)) for p in pts] for b in system.basis]},
        }
    if system.kind == "custom":
        raise SpecError("custom systems have no JSON form")
    spec = {"kind": system.kind, "domain": system.domain.to_spec()}
    if system.order is not None:
        spec["n"] = system.order
    return spec


def parse_system(text: str, domain: Domain | None = None) -> ChebSystem:
    """Parse a system from shorthand (``poly:3``, ``one-xsq``), inline JSON or a JSON file."""
    text = text.strip()
    if text.startswith("{") or (not text.split(":")[0] in ("poly", "trig-odd", "trig-even", "one-xsq") and Path(text).exists()):
        if text.startswith("{"):
            raw, where = text, "system spec"
        else:
            raw, where = Path(text).read_text(encoding="utf-8"), text
        try:
            spec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{where}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        if domain is not None and isinstance(spec, dict):
            spec = dict(spec, domain=domain.to_spec())
        return system_from_spec(spec)
    kind, _, arg = text.partition(":")
    if kind == "one-xsq":
        return builtin_system(kind, None, domain)
    if kind not in ("poly", "trig-odd", "trig-even"):
        raise SpecError(f"unknown system {text!r}; use poly:N, trig-odd:N, trig-even:N, one-xsq, inline JSON or a file")
    try:
        n = int(arg)
    except ValueError:
        raise SpecError(f"system {text!r}: expected an integer after ':'") from None
    return builtin_system(kind, n, domain)
