"""Step-pattern convexity over intervals and the grid constructions behind it.

A function ``f`` is ``(t, w)``-convex when the determinant with ``f``
appended is nonnegative on every configuration
``(x, x + t_1 h, ..., x + (t_1 + ... + t_n) h)`` inside the interval.
Cyclic, symmetric and Jensen variants run the same test over cyclic
shifts of ``t``, over all its permutations, or with ``t = (1, ..., 1)``.

Every check here is finite: verdicts are ``"convex-on-samples"`` or
``"violated"``, never a statement about the whole interval.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _arith
from .errors import FactorialBlowupError, SpecError, StepExceedsDomainError
from .functions import SampledFunction
from .systems import ChebSystem, Domain, ExtendedSystem, check_configuration, is_nonnegative, phi_and_scale

MODES = ("plain", "cyclic", "symmetric", "jensen")
MAX_SYMMETRIC_N = 6
MAX_GRID_POINTS = 100_000


@dataclass(frozen=True)
class StepVector:
    """Positive step proportions ``t = (t_1, ..., t_n)``."""

    t: tuple

    def __post_init__(self):
        if not self.t:
            raise SpecError("step vector must be non-empty")
        if any(not v > 0 for v in self.t):
            raise SpecError(f"step vector entries must be positive, got {self.t}")

    @classmethod
    def of(cls, t) -> "StepVector":
        return t if isinstance(t, StepVector) else cls(tuple(t))

    @classmethod
    def ones(cls, n: int) -> "StepVector":
        return cls((1,) * n)

    @property
    def n(self) -> int:
        return len(self.t)

    @property
    def total(self):
        return sum(self.t)

    def permuted(self, perm: Sequence[int]) -> tuple:
        return tuple(self.t[i] for i in perm)


@dataclass(frozen=True)
class SamplingPlan:
    """Where ``(x, h)`` pairs are drawn.

    A ``lattice x lattice`` grid over the admissible region comes first, in
    row-major order, followed by ``random_draws`` uniform draws from a
    generator seeded with ``seed``.  ``explicit`` replaces both.  ``region``
    restricts sampling to ``[lo, hi]`` and is required on unbounded domains
    (otherwise ``[-1, 1]``-sized windows are substituted, see
    :func:`sampling_region`).
    """

    lattice: int = 32
    random_draws: int = 256
    seed: int = 0
    region: tuple | None = None
    explicit: tuple | None = None

    def pairs(self, lo: float, hi: float, span: float):
        """Yield admissible ``(x, h)`` with ``lo <= x`` and ``x + span * h <= hi``."""
        if self.explicit is not None:
            yield from self.explicit
            return
        width = hi - lo
        for i in range(self.lattice):
            x = lo + (i + 0.5) / self.lattice * width
            for j in range(self.lattice):
                h = (j + 0.5) / self.lattice * (hi - x) / span
                yield x, h
        rng = np.random.default_rng(self.seed)
        for u, v in rng.random((self.random_draws, 2)):
            x = lo + float(u) * width
            h = float(v) * (hi - x) / span
            if h > 0:
                yield x, h


def sampling_region(domain: Domain, plan: SamplingPlan) -> tuple:
    """Finite ``(lo, hi)`` to sample in; unbounded ends become unit offsets."""
    if domain.is_finite_set:
        raise SpecError("step-pattern convexity is checked on intervals, not finite sets")
    if plan.region is not None:
        lo, hi = plan.region
        if not (lo < hi and domain.contains(lo) and domain.contains(hi)):
            raise StepExceedsDomainError(f"sampling region {plan.region} is not inside the domain")
        return float(lo), float(hi)
    lo, hi = float(domain.lo), float(domain.hi)
    if not math.isfinite(lo) and not math.isfinite(hi):
        return -1.0, 1.0
    if not math.isfinite(lo):
        return hi - 2.0, hi
    if not math.isfinite(hi):
        return lo, lo + 2.0
    return lo, hi


@dataclass(frozen=True)
class Witness:
    """A violated instance: ``config`` has a negative determinant ``phi``."""

    x: object
    h: object
    permutation: tuple
    steps: tuple
    config: tuple
    phi: object
    label: str = ""


@dataclass(frozen=True)
class ConvexityReport:
    verdict: str  # "convex-on-samples" | "violated"
    mode: str
    witness: Witness | None
    samples_checked: int
    target_failures: tuple = field(default=())

    @property
    def ok(self) -> bool:
        return self.verdict == "convex-on-samples"


def _base(system) -> tuple:
    return system.base.basis if isinstance(system, ExtendedSystem) else system.basis


def step_configuration(x, h, steps: Sequence) -> tuple:
    """``(x, x + s_1 h, ..., x + (s_1 + ... + s_n) h)``."""
    out = [x]
    acc = 0
    for s in steps:
        acc = acc + s
        out.append(x + acc * h)
    return tuple(out)


def permutations_for(mode: str, n: int) -> list:
    """Index permutations examined in each mode, identity first."""
    if mode in ("plain", "jensen"):
        return [tuple(range(n))]
    if mode == "cyclic":
        return [tuple((k + i) % n for i in range(n)) for k in range(n)]
    if mode == "symmetric":
        if n > MAX_SYMMETRIC_N:
            raise FactorialBlowupError(f"symmetric mode is limited to n <= {MAX_SYMMETRIC_N}, got n={n}")
        return list(itertools.permutations(range(n)))
    raise SpecError(f"unknown mode {mode!r}; expected one of {MODES}")


class _Evaluator:
    def __init__(self, system, f, arithmetic, eps_abs, eps_rel):
        self.fns = tuple(_base(system)) + (f,)
        self.domain = system.domain
        self.arithmetic = _arith.check_arithmetic(arithmetic)
        self.eps_abs = eps_abs
        self.eps_rel = eps_rel

    def violation(self, config):
        """Determinant value if ``config`` violates nonnegativity, else None."""
        pts = [_arith.coerce(x, self.arithmetic) for x in config]
        value, scale = phi_and_scale(self.fns, pts)
        return None if is_nonnegative(value, scale, self.eps_abs, self.eps_rel) else value

    def admissible(self, config) -> bool:
        return all(a < b for a, b in zip(config, config[1:])) and all(self.domain.contains(p) for p in config)


def check_t_convexity(
    system: ChebSystem | ExtendedSystem,
    f: SampledFunction,
    t,
    mode: str = "plain",
    sampling: SamplingPlan | None = None,
    *,
    arithmetic: str = "float",
    eps_abs: float = 1e-12,
    eps_rel: float = 1e-9,
) -> ConvexityReport:
    """Sample the step-pattern inequality for ``f``.

    Samples are visited in plan order and, within a sample, permutations in
    :func:`permutations_for` order; the first violation is returned.
    """
    sampling = sampling or SamplingPlan()
    n = len(_base(system))
    if mode == "jensen":
        t = StepVector.ones(n)
    t = StepVector.of(t)
    if t.n != n:
        raise SpecError(f"step vector has {t.n} entries but the system has dimension {n}")
    perms = permutations_for(mode, n)
    seen, unique = set(), []
    for p in perms:
        key = t.permuted(p)
        if key not in seen:
            seen.add(key)
            unique.append(p)
    ev = _Evaluator(system, f, arithmetic, eps_abs, eps_rel)
    lo, hi = sampling_region(system.domain, sampling)
    checked = 0
    any_sample = False
    for x, h in sampling.pairs(lo, hi, float(t.total)):
        for perm in unique:
            steps = t.permuted(perm)
            config = step_configuration(x, h, steps)
            if not ev.admissible(config):
                continue
            any_sample = True
            checked += 1
            phi = ev.violation(config)
            if phi is not None:
                return ConvexityReport("violated", mode, Witness(x, h, perm, steps, config, phi), checked)
    if not any_sample:
        raise StepExceedsDomainError("no admissible (x, h) sample fits inside the domain")
    return ConvexityReport("convex-on-samples", mode, None, checked)


def as_rational(r) -> Fraction:
    """Interpret ``r`` as a rational number.

    Floats are accepted when a denominator below 10**6 reproduces them to
    within one part in 10**15.
    """
    if isinstance(r, (int, Fraction)) and not isinstance(r, bool):
        return Fraction(r)
    if isinstance(r, str):
        try:
            return Fraction(r.strip())
        except ValueError:
            raise SpecError(f"cannot parse {r!r} as a rational") from None
    if isinstance(r, float) and math.isfinite(r):
        q = Fraction(r).limit_denominator(10**6)
        if abs(float(q) - r) <= 1e-15 * max(1.0, abs(r)):
            return q
    raise SpecError(f"{r!r} is not a rational with a moderate denominator")


@dataclass(frozen=True)
class GridConstruction:
    """Points of a refinement grid and where the target configuration sits."""

    points: tuple
    target_indices: tuple
    patterns: tuple = ()  # per consecutive window, a description of its step pattern

    @property
    def target(self) -> tuple:
        return tuple(self.points[i] for i in self.target_indices)


def _scalar(v, arithmetic):
    return _arith.to_fraction(v) if arithmetic == "exact" else float(v)


def rational_step_grid(x, h, r: Sequence, t, *, arithmetic: str = "float") -> GridConstruction:
    """Refinement grid turning cyclic ``t``-steps into rational ``r``-steps.

    With ``r_i = q_i / q`` in lowest common terms, ``N = q_1 + ... + q_n``
    and ``T = t_1 + ... + t_n``, the points are
    ``x + (k + (t_1 + ... + t_j) / T) h / q`` for ``k < N``, ``j < n``,
    followed by ``x + N h / q``.  Consecutive gaps cycle through
    ``t_1 h / (T q), ..., t_n h / (T q)``, so every consecutive window is a
    cyclic shift of ``t``; the ``r``-configuration sits at indices
    ``0, q_1 n, (q_1 + q_2) n, ...``.
    """
    t = StepVector.of(t)
    n = t.n
    if len(r) != n:
        raise SpecError(f"r has {len(r)} entries but t has {n}")
    rq = [as_rational(v) for v in r]
    if any(v <= 0 for v in rq):
        raise SpecError("r entries must be positive")
    if not h > 0:
        raise SpecError(f"h must be positive, got {h}")
    q = math.lcm(*(v.denominator for v in rq))
    parts = [int(v * q) for v in rq]
    total_blocks = sum(parts)
    if total_blocks * n + 1 > MAX_GRID_POINTS:
        raise SpecError(f"grid would have {total_blocks * n + 1} points; limit is {MAX_GRID_POINTS}")

    x = _scalar(x, arithmetic)
    h = _scalar(h, arithmetic)
    ts = [_scalar(v, arithmetic) for v in t.t]
    big_t = sum(ts)
    partial = [0 * big_t]
    for v in ts[:-1]:
        partial.append(partial[-1] + v)
    step = h / q
    points = []
    for k in range(total_blocks):
        for j in range(n):
            points.append(x + (k + partial[j] / big_t) * step)
    points.append(x + total_blocks * step)
    targets = [0]
    for p in parts:
        targets.append(targets[-1] + p * n)
    patterns = tuple(f"cyclic shift {i % n}" for i in range(len(points) - n))
    return GridConstruction(tuple(points), tuple(targets), patterns)


def pairwise_step_grid(x, h, t, *, arithmetic: str = "float") -> GridConstruction:
    """Grid reducing a general ``t`` to two-valued step patterns.

    For ``k = 1..n`` and ``j = 0..n-2`` the point with index
    ``(n-1)(k-1) + j`` is ``x + (t_1 + ... + t_{k-1} + j t_k / (n-1)) h``,
    plus the terminal point ``x + T h``: ``n(n-1) + 1`` points, with the
    ``t``-configuration at indices ``0, n-1, 2(n-1), ..., n(n-1)``.  The
    window starting at index ``l`` has ``n-1-j`` gaps ``t_k h/(n-1)``
    followed by ``j+1`` gaps ``t_{k+1} h/(n-1)``.
    """
    t = StepVector.of(t)
    n = t.n
    if n < 2:
        raise SpecError("the pairwise reduction needs n >= 2")
    if not h > 0:
        raise SpecError(f"h must be positive, got {h}")
    x = _scalar(x, arithmetic)
    h = _scalar(h, arithmetic)
    ts = [_scalar(v, arithmetic) for v in t.t]
    points = []
    acc = 0 * ts[0]
    for k in range(1, n + 1):
        tk = ts[k - 1]
        for j in range(n - 1):
            points.append(x + (acc + j * tk / (n - 1)) * h)
        acc = acc + tk
    points.append(x + acc * h)
    targets = tuple(i * (n - 1) for i in range(n + 1))
    patterns = []
    for ell in range(n * (n - 2) + 1):
        k, j = divmod(ell, n - 1)
        patterns.append((k + 1, n - 1 - j))  # (i, count): t_i repeated count times, then t_{i+1}
    return GridConstruction(tuple(points), targets, tuple(patterns))


def pair_pattern(t: StepVector, i: int, count: int) -> tuple:
    """``(t_i, ..., t_i, t_{i+1}, ..., t_{i+1})`` with ``count`` copies of ``t_i`` (1-based ``i``)."""
    n = t.n
    return (t.t[i - 1],) * count + (t.t[i],) * (n - count)


def _propagation_report(mode, system, f, grid_for, span, sampling, arithmetic, eps_abs, eps_rel, label_for):
    sampling = sampling or SamplingPlan()
    n = len(_base(system))
    ev = _Evaluator(system, f, arithmetic, eps_abs, eps_rel)
    lo, hi = sampling_region(system.domain, sampling)
    checked = 0
    any_sample = False
    target_failures = []
    for x, h in sampling.pairs(lo, hi, span):
        grid = grid_for(x, h)
        pts = grid.points
        if not ev.admissible(pts):
            continue
        any_sample = True
        for i in range(len(pts) - n):
            window = pts[i : i + n + 1]
            checked += 1
            phi = ev.violation(window)
            if phi is not None:
                perm, steps, label = label_for(grid, i)
                witness = Witness(x, h, perm, steps, tuple(window), phi, label)
                return ConvexityReport("violated", mode, witness, checked, tuple(target_failures))
        checked += 1
        phi = ev.violation(grid.target)
        if phi is not None:
            target_failures.append((x, h, grid.target, phi))
    if not any_sample:
        raise StepExceedsDomainError("no admissible (x, h) sample fits inside the domain")
    verdict = "violated" if target_failures else "convex-on-samples"
    return ConvexityReport(verdict, mode, None, checked, tuple(target_failures))


def check_rational_propagation(
    system,
    f: SampledFunction,
    t,
    r: Sequence,
    sampling: SamplingPlan | None = None,
    *,
    arithmetic: str = "float",
    eps_abs: float = 1e-12,
    eps_rel: float = 1e-9,
) -> ConvexityReport:
    """Certify the ``r``-step inequality from cyclic ``t``-step windows.

    For each sample the refinement grid of :func:`rational_step_grid` is built
    and all its consecutive windows are checked.  A failing window is
    reported as the witness (``f`` is not cyclically ``t``-convex there).
    When every window passes, the ``r``-configuration is certified and is
    also evaluated directly; such a direct failure is recorded in
    ``target_failures`` and signals numerical breakdown.
    """
    t = StepVector.of(t)
    rq = [as_rational(v) for v in r]
    n = t.n

    def grid_for(x, h):
        return rational_step_grid(x, h, rq, t, arithmetic=arithmetic)

    def label_for(grid, i):
        shift = i % n
        perm = tuple((shift + k) % n for k in range(n))
        return perm, t.permuted(perm), f"window {i} (cyclic shift {shift} of t)"

    return _propagation_report(
        "rational", system, f, grid_for, float(sum(rq)), sampling, arithmetic, eps_abs, eps_rel, label_for
    )


def check_pairwise_reduction(
    system,
    f: SampledFunction,
    t,
    sampling: SamplingPlan | None = None,
    *,
    arithmetic: str = "float",
    eps_abs: float = 1e-12,
    eps_rel: float = 1e-9,
) -> ConvexityReport:
    """Certify the ``t``-step inequality from two-valued step patterns.

    Windows of :func:`pairwise_step_grid` each instantiate a pattern
    ``(t_i, ..., t_i, t_{i+1}, ..., t_{i+1})``; a failing window names its
    pattern in the witness label.
    """
    t = StepVector.of(t)
    n = t.n
    if n < 2:
        raise SpecError("the pairwise reduction needs n >= 2")

    def grid_for(x, h):
        return pairwise_step_grid(x, h, t, arithmetic=arithmetic)

    def label_for(grid, i):
        idx, count = grid.patterns[i]
        steps = pair_pattern(t, idx, count)
        perm = (idx - 1,) * count + (idx,) * (n - count)
        return perm, steps, f"window {i}: pattern (t_{idx} x{count}, t_{idx + 1} x{n - count})"

    return _propagation_report(
        "pairwise", system, f, grid_for, float(t.total), sampling, arithmetic, eps_abs, eps_rel, label_for
    )


# alternative names used by the operation contract
theorem5_grid = rational_step_grid
theorem5plus_grid = pairwise_step_grid
check_theorem5_propagation = check_rational_propagation

__all__ = [
    "MODES",
    "ConvexityReport",
    "GridConstruction",
    "SamplingPlan",
    "StepVector",
    "Witness",
    "as_rational",
    "check_configuration",
    "check_pairwise_reduction",
    "check_t_convexity",
    "check_rational_propagation",
    "check_theorem5_propagation",
    "pair_pattern",
    "permutations_for",
    "sampling_region",
    "step_configuration",
    "rational_step_grid",
    "theorem5_grid",
    "theorem5plus_grid",
    "pairwise_step_grid",
]
