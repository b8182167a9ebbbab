"""Lower Dinghas-type derivative estimates and mean-value refinement.

The lower derivative at ``p`` is the liminf of divided differences over
configurations ``x_0 <= p <= x_n`` whose width shrinks to zero.  It is
approximated on a decreasing schedule ``delta_k = delta_0 2**-k``; each
level contributes sampled configurations of width below ``delta_k`` and
the estimate at level ``k`` is the minimum over every sample of width
below ``delta_k``.  Sample sets are therefore nested and the estimates are
nondecreasing along the schedule.  A sampled minimum can only overshoot
the true infimum, so every estimate is one-sided.

The refinement routines repeatedly enlarge a configuration to a finer grid
and keep the consecutive window with the smallest divided difference.  By
the chain inequality the recorded values never increase, and the windows
close in on a point ``p``.

Refinement stops after ``max_iters`` steps, or earlier once the width
falls below ``width_tol`` times the initial width.  The width stop defaults
to 1e-9 for float evaluation only: exact and mp runs keep refining to the
iteration cap.

Nodes are tracked as exact rationals.  Divided differences are evaluated
exactly when the system and function allow it and otherwise in mpmath at a
working precision that covers the cancellation at the finest width.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from . import _arith
from .convexity import StepVector
from .errors import (
    DenominatorNotPositiveError,
    NoAdmissibleConfigurationError,
    NotStrictlyOrderedError,
    OutOfDomainError,
    SpecError,
    TableFunctionRejectedError,
)
from .functions import SampledFunction
from .systems import ExtendedSystem

DEFAULT_LEVELS = 12
MAX_ITERS = 60
WIDTH_TOL = 1e-9
SATURATION = 1e8
EVALUATIONS = ("auto", "float", "exact", "mp")


def dyadic_schedule(delta0: float, levels: int = DEFAULT_LEVELS) -> tuple:
    """``(delta0, delta0/2, ..., delta0/2**(levels-1))``."""
    if not delta0 > 0:
        raise SpecError(f"delta0 must be positive, got {delta0}")
    if levels < 1:
        raise SpecError(f"need at least one level, got {levels}")
    return tuple(delta0 / 2**k for k in range(levels))


def default_schedule(system: ExtendedSystem, levels: int = DEFAULT_LEVELS) -> tuple:
    width = float(system.domain.width)
    return dyadic_schedule(min(1.0, width / 4), levels)


def _require_analytic(system: ExtendedSystem, f: SampledFunction):
    if not isinstance(system, ExtendedSystem):
        raise SpecError("an extended system (base plus extension) is required")
    if not f.analytic or not all(g.analytic for g in system.functions):
        raise TableFunctionRejectedError(
            "limit-based estimates need functions evaluable at arbitrary points; tables are not accepted"
        )


class _Evaluator:
    """Divided differences at rational nodes in the chosen arithmetic."""

    def __init__(self, system, f, evaluation: str, min_width: float, span: float):
        if evaluation not in EVALUATIONS:
            raise SpecError(f"unknown evaluation {evaluation!r}; expected one of {EVALUATIONS}")
        if evaluation == "auto":
            evaluation = "exact" if (system.exact and f.exact) else "mp"
        self.system, self.f, self.evaluation = system, f, evaluation
        n = system.n
        lost = n * max(0.0, math.log10(max(span, 1.0) / max(min_width, 1e-300)))
        self.dps = int(30 + math.ceil(lost))

        self._columns = {}

    def _column(self, x):
        # refinement windows overlap, so node values are cached per evaluator
        col = self._columns.get(x)
        if col is None:
            if self.evaluation == "exact":
                v = Fraction(x)
            elif self.evaluation == "float":
                v = float(x)
            else:
                v = _arith.to_mpf(x)
            col = [g(v) for g in self.system.functions] + [self.f(v)]
            self._columns[x] = col
        return col

    def __call__(self, config):
        if self.evaluation != "mp":
            return self._value(config)
        with mpmath.workdps(self.dps):
            return +self._value(config)

    def _value(self, config):
        cols = [self._column(x) for x in config]
        n = self.system.n
        base = [[c[i] for c in cols] for i in range(n)]
        num = _arith.det(base + [[c[n + 1] for c in cols]])
        den = _arith.det(base + [[c[n] for c in cols]])
        if not den > 0:
            raise DenominatorNotPositiveError(
                f"extended system determinant is {den} at {tuple(config)}; the extension is not strictly convex there"
            )
        return num / den


def _as_fraction(x) -> Fraction:
    try:
        return _arith.to_fraction(x)
    except (TypeError, ValueError):
        raise SpecError(f"{x!r} is not a finite real number") from None


@dataclass(frozen=True)
class DinghasSampler:
    """Configurations around ``p`` for one schedule level.

    Each level draws a deterministic lattice, namely ``offsets`` (where
    ``p`` sits within the configuration) times ``widths`` (fractions
    ``u`` giving width ``delta (0.5 + 0.49 u)``) times three node shapes
    (uniform, clustered left, clustered right), followed by
    ``random_draws`` configurations from a generator seeded by ``seed`` and
    the level index.
    """

    offsets: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    widths: tuple = (0.0, 0.5, 1.0)
    random_draws: int = 32
    seed: int = 0

    def _rng(self, level: int):
        return np.random.default_rng([self.seed, level])

    def fractions(self, level: int, n_inner: int):
        """Yield ``(s, u, inner)`` with interior node fractions ``inner`` of length ``n_inner``."""
        base = [Fraction(j, n_inner + 1) for j in range(1, n_inner + 1)]
        shapes = [base, [b * b for b in base], [1 - (1 - b) ** 2 for b in base]]
        if n_inner == 0:
            shapes = [[]]
        for s in self.offsets:
            for u in self.widths:
                for inner in shapes:
                    yield Fraction(s), Fraction(u), inner
        rng = self._rng(level)
        for _ in range(self.random_draws):
            s, u = rng.random(2)
            inner = sorted(Fraction(float(v)) for v in rng.random(n_inner))
            yield Fraction(float(s)), Fraction(float(u)), inner


@dataclass(frozen=True)
class DinghasEstimate:
    """Sampled lower derivative at ``point``.

    ``inf_estimates[k]`` is the smallest divided difference found over
    samples of width below ``schedule[k]``; ``estimate`` is the value at the
    finest level.  ``witnesses[k]`` is a configuration attaining
    ``inf_estimates[k]``.  ``one_sided`` is always True: sampled minima
    bound the true infima from above.  ``saturated`` flags estimates whose
    magnitude exceeds 1e8, a hint that the liminf is infinite.
    """

    point: float
    schedule: tuple
    inf_estimates: tuple
    estimate: float
    witnesses: tuple
    samples_per_level: tuple
    kind: str
    t: tuple | None = None
    one_sided: bool = True
    saturated: bool = False

    @property
    def extrapolate(self) -> float:
        return self.estimate

    @property
    def minimum(self) -> float:
        """Smallest divided difference over every sample."""
        return self.inf_estimates[0]


def _estimate(system, f, p, schedule, sampler, evaluation, kind, configs_for, t=None):
    _require_analytic(system, f)
    dom = system.domain
    if not dom.contains(p):
        raise OutOfDomainError(f"point {p} is outside the domain")
    schedule = tuple(schedule) if schedule is not None else default_schedule(system)
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise SpecError("schedule must be strictly decreasing")
    sampler = sampler or DinghasSampler()
    pf = _as_fraction(p)
    ev = _Evaluator(system, f, evaluation, 0.5 * schedule[-1], float(dom.width) if math.isfinite(dom.width) else 1.0)

    level_min, level_arg, counts = [], [], []
    for level, delta in enumerate(schedule):
        d = Fraction(delta)
        best, arg, count = None, None, 0
        for s, u, inner in sampler.fractions(level, configs_for.n_inner):
            w = d * (Fraction(1, 2) + Fraction(49, 100) * u)
            x0 = pf - s * w
            config = configs_for(x0, w, inner)
            if not all(dom.contains(x) for x in config):
                continue
            count += 1
            v = ev(config)
            if best is None or v < best:
                best, arg = v, tuple(config)
        if count == 0:
            raise NoAdmissibleConfigurationError(f"no admissible configuration around {p} of width below {delta}")
        level_min.append(best)
        level_arg.append(arg)
        counts.append(count)

    # samples of width below delta_k are exactly those drawn at levels >= k
    infs, wits = [None] * len(schedule), [None] * len(schedule)
    for k in reversed(range(len(schedule))):
        if k == len(schedule) - 1 or level_min[k] < infs[k + 1]:
            infs[k], wits[k] = level_min[k], level_arg[k]
        else:
            infs[k], wits[k] = infs[k + 1], wits[k + 1]
    infs_f = tuple(float(v) for v in infs)
    est = infs_f[-1]
    return DinghasEstimate(
        point=float(p),
        schedule=tuple(float(d) for d in schedule),
        inf_estimates=infs_f,
        estimate=est,
        witnesses=tuple(wits),
        samples_per_level=tuple(counts),
        kind=kind,
        t=t,
        saturated=abs(est) > SATURATION,
    )


class _FreeNodes:
    """Configurations with free interior nodes."""

    def __init__(self, n):
        self.n_inner = n - 1

    def __call__(self, x0, w, inner):
        return [x0] + [x0 + c * w for c in inner] + [x0 + w]


class _StepNodes:
    """Configurations with consecutive gaps proportional to ``t``."""

    n_inner = 0

    def __init__(self, t: StepVector):
        ts = [_as_fraction(v) for v in t.t]
        total = sum(ts)
        acc, self.fracs = Fraction(0), []
        for v in ts:
            acc += v
            self.fracs.append(acc / total)

    def __call__(self, x0, w, inner):
        return [x0] + [x0 + c * w for c in self.fracs]


def estimate_D(
    system: ExtendedSystem,
    f: SampledFunction,
    p,
    schedule: Sequence | None = None,
    sampler: DinghasSampler | None = None,
    *,
    evaluation: str = "auto",
) -> DinghasEstimate:
    """Estimate the lower derivative over configurations with free nodes."""
    return _estimate(system, f, p, schedule, sampler, evaluation, "omega", _FreeNodes(system.n))


def estimate_D_t(
    system: ExtendedSystem,
    f: SampledFunction,
    t,
    p,
    schedule: Sequence | None = None,
    sampler: DinghasSampler | None = None,
    *,
    evaluation: str = "auto",
) -> DinghasEstimate:
    """Estimate the lower derivative over ``t``-proportional configurations.

    For pairs ``x <= p <= y`` the nodes are
    ``x + (t_1 + ... + t_i) (y - x) / T``.
    """
    t = StepVector.of(t)
    if t.n != system.n:
        raise SpecError(f"step vector has {t.n} entries but the system has dimension {system.n}")
    return _estimate(system, f, p, schedule, sampler, evaluation, "t", _StepNodes(t), tuple(t.t))


@dataclass(frozen=True)
class MeanValueWitness:
    """Outcome of a refinement run.

    ``trace`` lists ``(configuration, divided difference)`` pairs starting
    with the input configuration; values never increase and widths shrink
    geometrically.  ``p`` is the midpoint of the final configuration.
    ``classes`` records, for pair refinement, which gap-ratio class
    (``"t1/t2"`` or ``"t2/t1"``) each step produced and ``bound_kind`` the
    class dominating the last ten steps.
    """

    p: float
    trace: tuple
    mode: str
    bound_kind: str | None = None
    classes: tuple = field(default=())
    evaluation: str = "exact"

    @property
    def values(self) -> list:
        return [float(v) for _, v in self.trace]

    @property
    def widths(self) -> list:
        return [float(c[-1] - c[0]) for c, _ in self.trace]

    @property
    def iterations(self) -> int:
        return len(self.trace) - 1

    def is_nonincreasing(self, rel_tol: float = 0.0) -> bool:
        vals = [v for _, v in self.trace]
        # compare differences so that high-precision values are not rounded first
        return all(b - a <= rel_tol * max(1.0, abs(float(a))) for a, b in zip(vals, vals[1:]))


def _refine_setup(system, f, config, max_iters):
    _require_analytic(system, f)
    if max_iters < 0:
        raise SpecError("max_iters must be nonnegative")
    config = [_as_fraction(x) for x in config]
    if len(config) != system.n + 1:
        raise SpecError(f"configuration needs {system.n + 1} points, got {len(config)}")
    if any(b <= a for a, b in zip(config, config[1:])):
        raise NotStrictlyOrderedError(f"configuration {tuple(float(x) for x in config)} is not strictly increasing")
    for x in config:
        if not system.domain.contains(x):
            raise OutOfDomainError(f"point {float(x)} is outside the domain")
    return config


def _run(system, f, config, max_iters, width_tol, evaluation, step):
    d0 = config[-1] - config[0]
    ev = _Evaluator(system, f, evaluation, 0.0, float(d0))
    if width_tol is None:
        # float nodes coalesce near 1e-9 relative width; exact and mp runs go to max_iters
        width_tol = WIDTH_TOL if ev.evaluation == "float" else 0.0
    ev = _Evaluator(system, f, evaluation, float(d0) * max(width_tol, 2.0**-max_iters), float(d0))
    trace = [(tuple(config), ev(config))]
    extra = []
    state = None
    for _ in range(max_iters):
        if config[-1] - config[0] < width_tol * d0:
            break
        windows, states = step(config, state)
        values = [ev(w) for w in windows]
        best = min(range(len(values)), key=lambda i: (values[i], i))
        config, state = list(windows[best]), states[best] if states else None
        trace.append((tuple(config), values[best]))
        extra.append(state)
    p = float((config[0] + config[-1]) / 2)
    return p, tuple(trace), extra, ev.evaluation


def refine_general(
    system: ExtendedSystem,
    f: SampledFunction,
    config: Sequence,
    max_iters: int = MAX_ITERS,
    *,
    width_tol: float | None = None,
    evaluation: str = "auto",
) -> MeanValueWitness:
    """Midpoint refinement: insert all midpoints, keep the smallest window."""
    config = _refine_setup(system, f, config, max_iters)
    n = system.n

    def step(cfg, _state):
        pts = [cfg[0]]
        for a, b in zip(cfg, cfg[1:]):
            pts += [(a + b) / 2, b]
        return [pts[i : i + n + 1] for i in range(n + 1)], None

    p, trace, _, used = _run(system, f, config, max_iters, width_tol, evaluation, step)
    return MeanValueWitness(p, trace, "general", evaluation=used)


def refine_jensen(
    system: ExtendedSystem,
    f: SampledFunction,
    x,
    y,
    max_iters: int = MAX_ITERS,
    *,
    width_tol: float | None = None,
    evaluation: str = "auto",
) -> MeanValueWitness:
    """Equal-spacing refinement starting from ``x + j (y - x) / n``.

    Each step halves the spacing, lays ``2n + 1`` equally spaced points from
    the current left end and keeps the smallest of the ``n + 1`` windows.
    """
    n = system.n
    x, y = _as_fraction(x), _as_fraction(y)
    config = _refine_setup(system, f, [x + Fraction(j, n) * (y - x) for j in range(n + 1)], max_iters)

    def step(cfg, _state):
        h = (cfg[1] - cfg[0]) / 2
        pts = [cfg[0] + j * h for j in range(2 * n + 1)]
        return [pts[i : i + n + 1] for i in range(n + 1)], None

    p, trace, _, used = _run(system, f, config, max_iters, width_tol, evaluation, step)
    return MeanValueWitness(p, trace, "jensen", evaluation=used)


def _dominant_class(classes: Sequence) -> str | None:
    tail = list(classes[-10:])
    if not tail:
        return None
    counts = Counter(tail)
    top = max(counts.values())
    leaders = [c for c in ("t1/t2", "t2/t1") if counts.get(c, 0) == top]
    return leaders[0] if len(leaders) == 1 else tail[-1]


def refine_pair(
    system: ExtendedSystem,
    f: SampledFunction,
    t,
    x,
    y,
    max_iters: int = MAX_ITERS,
    *,
    width_tol: float | None = None,
    evaluation: str = "auto",
) -> MeanValueWitness:
    """Refinement over triples whose gap ratio stays in ``{t1/t2, t2/t1}``.

    For a triple with gaps in ratio ``t_i : t_j`` the points
    ``(t_j x0 + t_i x1) / T`` and ``(t_i x1 + t_j x2) / T`` are inserted;
    the three consecutive sub-triples have ratios ``t_i:t_j``, ``t_i:t_j``
    and ``t_j:t_i``, and widths at most ``max(t) / T`` of the parent.
    """
    if system.n != 2:
        raise SpecError(f"pair refinement needs a system of dimension 2, got {system.n}")
    t = StepVector.of(t)
    if t.n != 2:
        raise SpecError("pair refinement needs exactly two step proportions")
    tt = (_as_fraction(t.t[0]), _as_fraction(t.t[1]))
    total = tt[0] + tt[1]
    x, y = _as_fraction(x), _as_fraction(y)
    config = _refine_setup(system, f, [x, x + tt[0] / total * (y - x), y], max_iters)

    def step(cfg, state):
        i, j = state or (0, 1)
        ti, tj = tt[i], tt[j]
        x0, x1, x2 = cfg
        y1 = (tj * x0 + ti * x1) / total
        y3 = (ti * x1 + tj * x2) / total
        pts = [x0, y1, x1, y3, x2]
        return [pts[0:3], pts[1:4], pts[2:5]], [(i, j), (i, j), (j, i)]

    p, trace, states, used = _run(system, f, config, max_iters, width_tol, evaluation, step)
    classes = tuple("t1/t2" if s == (0, 1) else "t2/t1" for s in states)
    return MeanValueWitness(p, trace, "pair", _dominant_class(classes), classes, used)


@dataclass(frozen=True)
class CharacterizationReport:
    """Per-probe estimates and, if any sample went negative, a witness.

    ``verdict`` is ``"not-convex"`` when some sampled divided difference is
    below ``-tol`` (a certificate: the witness configuration has a negative
    divided difference) and ``"consistent-with-convexity"`` otherwise, which
    is one-sided evidence only.
    """

    verdict: str
    mode: str
    estimates: tuple
    witness: tuple | None
    witness_value: float | None
    witness_probe: float | None
    tol: float


def characterize_convexity(
    system: ExtendedSystem,
    f: SampledFunction,
    mode: str = "omega",
    probe_points: Sequence = (),
    schedule: Sequence | None = None,
    sampler: DinghasSampler | None = None,
    *,
    t=None,
    tol: float = 1e-9,
    evaluation: str = "auto",
) -> CharacterizationReport:
    """Probe convexity through lower derivative estimates.

    ``mode`` is ``"omega"`` (free nodes), ``"jensen"`` (equal gaps) or
    ``"pair"`` (gaps ``t`` and reversed ``t``, for ``n = 2``).
    """
    if not probe_points:
        raise SpecError("at least one probe point is required")
    n = system.n
    if mode == "omega":
        runs = [lambda p: estimate_D(system, f, p, schedule, sampler, evaluation=evaluation)]
    elif mode == "jensen":
        runs = [lambda p: estimate_D_t(system, f, (1,) * n, p, schedule, sampler, evaluation=evaluation)]
    elif mode == "pair":
        if n != 2 or t is None:
            raise SpecError("pair mode needs a dimension-2 system and t = (t1, t2)")
        tv = StepVector.of(t)
        runs = [
            lambda p, s=s: estimate_D_t(system, f, s, p, schedule, sampler, evaluation=evaluation)
            for s in (tv.t, tv.t[::-1])
        ]
    else:
        raise SpecError(f"unknown mode {mode!r}; expected omega, jensen or pair")

    estimates, witness, wval, wprobe = [], None, None, None
    for p in probe_points:
        for run in runs:
            est = run(p)
            estimates.append(est)
            if witness is None and est.minimum < -tol:
                witness = est.witnesses[0]
                wprobe = est.point
                ev = _Evaluator(system, f, evaluation, 1e-12, 1.0)
                wval = float(ev(witness))
    verdict = "not-convex" if witness is not None else "consistent-with-convexity"
    return CharacterizationReport(verdict, mode, tuple(estimates), witness, wval, wprobe, tol)


__all__ = [
    "CharacterizationReport",
    "DinghasEstimate",
    "DinghasSampler",
    "MeanValueWitness",
    "characterize_convexity",
    "default_schedule",
    "dyadic_schedule",
    "estimate_D",
    "estimate_D_t",
    "refine_general",
    "refine_jensen",
    "refine_pair",
]
