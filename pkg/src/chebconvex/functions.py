"""Real functions that can be evaluated in float, exact or mp arithmetic.

Basis functions of Chebyshev systems and the functions whose convexity is
examined are both :class:`SampledFunction` instances.  Builtins are
evaluable anywhere; tables only at their tabulated points.

Functions combine linearly::

    >>> f = monomial(2) - 0.1 * builtin("abs")
    >>> f(2.0)
    3.8
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

from . import _arith
from .errors import OffGridError, SpecError

BUILTIN_NAMES = ("poly", "abs", "exp", "sin", "cos")


class SampledFunction:
    """Base class.  Subclasses implement ``__call__`` and ``to_spec``.

    Attributes
    ----------
    exact : bool
        Rational arguments give rational values, so exact arithmetic works.
    analytic : bool
        Evaluable at every point of the real line (False for tables).
    """

    exact: bool = False
    analytic: bool = True

    def __call__(self, x):
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise SpecError(f"{type(self).__name__} has no JSON form")

    def __add__(self, other):
        if not isinstance(other, SampledFunction):
            return NotImplemented
        return LinearCombination([(1, self), (1, other)])

    def __sub__(self, other):
        if not isinstance(other, SampledFunction):
            return NotImplemented
        return LinearCombination([(1, self), (-1, other)])

    def __neg__(self):
        return LinearCombination([(-1, self)])

    def __mul__(self, c):
        if isinstance(c, SampledFunction):
            return NotImplemented
        return LinearCombination([(c, self)])

    __rmul__ = __mul__


class BuiltinFunction(SampledFunction):
    """One of the named analytic families.

    ``poly``  params are ascending coefficients ``c0, c1, ...``.
    ``abs``   ``|x - c|`` with params ``[c]`` (default 0).
    ``exp``   ``exp(a x)`` with params ``[a]`` (default 1).
    ``sin``, ``cos``  ``sin(a x + b)`` with params ``[a, b]`` (default 1, 0).
    """

    def __init__(self, name: str, params: Sequence = ()):
        if name not in BUILTIN_NAMES:
            raise SpecError(f"unknown builtin function {name!r}; expected one of {BUILTIN_NAMES}")
        self.name = name
        self.params = tuple(params)
        if name == "poly" and not self.params:
            raise SpecError("poly needs at least one coefficient")
        if name == "abs" and len(self.params) > 1:
            raise SpecError("abs takes at most one parameter (the kink position)")
        if name == "exp" and len(self.params) > 1:
            raise SpecError("exp takes at most one parameter (the rate)")
        if name in ("sin", "cos") and len(self.params) > 2:
            raise SpecError(f"{name} takes at most two parameters (frequency, phase)")
        self.exact = name in ("poly", "abs")

    def __call__(self, x):
        p = self.params
        if self.name == "poly":
            acc = _arith.like(p[-1], x)
            for c in reversed(p[:-1]):
                acc = acc * x + _arith.like(c, x)
            return acc
        if self.name == "abs":
            c = _arith.like(p[0], x) if p else 0
            return abs(x - c)
        if self.name == "exp":
            a = _arith.like(p[0], x) if p else 1
            return _arith.exp(a * x)
        a = _arith.like(p[0], x) if p else 1
        b = _arith.like(p[1], x) if len(p) > 1 else 0
        arg = a * x + b if b else a * x
        return _arith.sin(arg) if self.name == "sin" else _arith.cos(arg)

    def to_spec(self) -> dict:
        return {"source": "builtin", "name": self.name, "params": [_json_number(c) for c in self.params]}

    def __repr__(self):
        return f"BuiltinFunction({self.name!r}, {list(self.params)!r})"


class TableFunction(SampledFunction):
    """Function known only on a finite set of points."""

    analytic = False

    def __init__(self, points: Sequence, values: Sequence):
        if len(points) != len(values):
            raise SpecError("table points and values differ in length")
        if not points:
            raise SpecError("empty table")
        self.points = tuple(points)
        self.values = tuple(values)
        self._lookup = dict(zip(self.points, self.values))
        if len(self._lookup) != len(self.points):
            raise SpecError("table points must be distinct")
        # float entries are dyadic rationals, so exact evaluation is always possible
        self.exact = True

    def __call__(self, x):
        try:
            v = self._lookup[x]
        except (KeyError, TypeError):
            raise OffGridError(f"table function evaluated off its grid at x={x!r}") from None
        return _arith.like(v, x)

    def to_spec(self) -> dict:
        return {
            "source": "table",
            "points": [_json_number(p) for p in self.points],
            "values": [_json_number(v) for v in self.values],
        }

    def __repr__(self):
        return f"TableFunction({len(self.points)} points)"


class LinearCombination(SampledFunction):
    def __init__(self, terms):
        flat = []
        for c, fn in terms:
            if isinstance(fn, LinearCombination):
                flat.extend((c * c2, f2) for c2, f2 in fn.terms)
            else:
                flat.append((c, fn))
        self.terms = tuple(flat)
        self.exact = all(fn.exact for _, fn in self.terms)
        self.analytic = all(fn.analytic for _, fn in self.terms)

    def __call__(self, x):
        acc = None
        for c, fn in self.terms:
            term = _arith.like(c, x) * fn(x)
            acc = term if acc is None else acc + term
        return acc

    def to_spec(self) -> dict:
        terms = []
        for c, fn in self.terms:
            spec = fn.to_spec()
            if spec.get("source") != "builtin" or "terms" in spec:
                raise SpecError("only combinations of builtin functions serialize")
            terms.append({"coef": _json_number(c), "name": spec["name"], "params": spec["params"]})
        return {"source": "builtin", "terms": terms}

    def __repr__(self):
        return "LinearCombination(" + ", ".join(f"{c!r}*{fn!r}" for c, fn in self.terms) + ")"


class CallableFunction(SampledFunction):
    """Wrap a plain Python callable.

    The callable must accept whichever number type the caller uses; set
    ``exact=True`` only if it maps Fractions to Fractions.
    """

    def __init__(self, fn: Callable, exact: bool = False, analytic: bool = True, name: str | None = None):
        self.fn = fn
        self.exact = exact
        self.analytic = analytic
        self.name = name or getattr(fn, "__name__", "callable")

    def __call__(self, x):
        return self.fn(x)

    def __repr__(self):
        return f"CallableFunction({self.name})"


def builtin(name: str, *params) -> BuiltinFunction:
    return BuiltinFunction(name, params)


def monomial(k: int) -> BuiltinFunction:
    """The power function ``x**k``."""
    return BuiltinFunction("poly", [0] * k + [1])


def delta_function(points: Sequence, k: int, height=1) -> TableFunction:
    """Table function equal to ``height`` at ``points[k]`` and 0 elsewhere."""
    return TableFunction(points, [height if i == k else 0 for i in range(len(points))])


def _json_number(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else float(x)
    return x


def _number(v, where: str):
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise SpecError(f"{where}: expected a number, got {v!r}")
    if isinstance(v, str):
        try:
            return Fraction(v)
        except ValueError:
            raise SpecError(f"{where}: cannot parse number {v!r}") from None
    return v


def function_from_spec(spec) -> SampledFunction:
    """Build a function from its JSON object form.

    Accepted shapes::

        {"source": "table", "points": [...], "values": [...]}
        {"source": "builtin", "name": "poly|abs|exp|sin|cos", "params": [...]}
        {"source": "builtin", "terms": [{"coef": c, "name": ..., "params": [...]}, ...]}
    """
    if not isinstance(spec, dict):
        raise SpecError(f"function spec must be a JSON object, got {type(spec).__name__}")
    source = spec.get("source")
    if source == "table":
        for key in ("points", "values"):
            if not isinstance(spec.get(key), list):
                raise SpecError(f"function spec field {key!r} must be a list")
        points = [_number(p, f"points[{i}]") for i, p in enumerate(spec["points"])]
        values = [_number(v, f"values[{i}]") for i, v in enumerate(spec["values"])]
        return TableFunction(points, values)
    if source == "builtin":
        if "terms" in spec:
            if not isinstance(spec["terms"], list) or not spec["terms"]:
                raise SpecError("function spec field 'terms' must be a non-empty list")
            terms = []
            for i, term in enumerate(spec["terms"]):
                if not isinstance(term, dict) or "name" not in term:
                    raise SpecError(f"terms[{i}] must be an object with a 'name'")
                coef = _number(term.get("coef", 1), f"terms[{i}].coef")
                params = [_number(p, f"terms[{i}].params") for p in term.get("params", [])]
                terms.append((coef, BuiltinFunction(term["name"], params)))
            return LinearCombination(terms)
        if "name" not in spec:
            raise SpecError("builtin function spec needs a 'name'")
        params = spec.get("params", [])
        if not isinstance(params, list):
            raise SpecError("function spec field 'params' must be a list")
        return BuiltinFunction(spec["name"], [_number(p, "params") for p in params])
    raise SpecError(f"function spec 'source' must be 'table' or 'builtin', got {source!r}")


def function_from_csv(text: str) -> TableFunction:
    """Parse a two-column table with header ``x,f``."""
    import csv
    import io

    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows or [c.strip() for c in rows[0]] != ["x", "f"]:
        raise SpecError("CSV function table must start with the header 'x,f'")
    points, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise SpecError(f"CSV line {lineno}: expected 2 columns, got {len(row)}")
        points.append(_number(row[0].strip(), f"CSV line {lineno} x"))
        values.append(_number(row[1].strip(), f"CSV line {lineno} f"))
    return TableFunction(points, values)


def parse_function(text: str) -> SampledFunction:
    """Parse a function given inline or by path.

    Besides JSON (inline or ``.json`` file) and ``.csv`` tables, a shorthand
    ``builtin:NAME[:p1,p2,...]`` is accepted, e.g. ``builtin:poly:0,0,0,1``.
    """
    text = text.strip()
    if text.startswith("builtin:"):
        parts = text.split(":", 2)
        params = []
        if len(parts) == 3 and parts[2]:
            params = [_number(p.strip(), "builtin params") for p in parts[2].split(",")]
        return BuiltinFunction(parts[1], params)
    if text.startswith("{"):
        try:
            return function_from_spec(json.loads(text))
        except json.JSONDecodeError as exc:
            raise SpecError(f"function spec: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    path = Path(text)
    if not path.exists():
        raise SpecError(f"function spec {text!r} is neither inline JSON, builtin shorthand nor an existing file")
    content = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".csv":
        return function_from_csv(content)
    try:
        return function_from_spec(json.loads(content))
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
