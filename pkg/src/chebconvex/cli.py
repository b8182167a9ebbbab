"""Command-line front end.

Every command prints one JSON report (or a CSV series with ``--format
csv``) to stdout.  Reports are deterministic: keys are sorted, floats use
the shortest round-trip representation and exact results are ``"p/q"``
strings.

Exit codes: 0 for pure computations and convex or consistent verdicts,
1 for violated verdicts, 2 for usage, specification and domain errors.

Convexity verdicts from sampling commands (``check`` without ``--grid``,
``propagate``, ``dinghas``) describe the samples examined only; they are
evidence, not a proof of convexity on the whole interval.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from fractions import Fraction

import mpmath

from . import __version__
from .convexity import (
    MODES,
    SamplingPlan,
    as_rational,
    check_pairwise_reduction,
    check_t_convexity,
    check_rational_propagation,
)
from .dinghas import (
    DinghasSampler,
    characterize_convexity,
    dyadic_schedule,
    refine_general,
    refine_jensen,
    refine_pair,
)
from .divdiff import chain_bounds, check_discrete_convexity, decompose, divided_difference
from .errors import ChebConvexError, InconsistentOracleError
from .functions import parse_function
from .systems import Domain, evaluate_phi, parse_system

COMMANDS = ("phi", "divdiff", "decompose", "chain", "check", "propagate", "dinghas", "refine")
FORMATS = ("json", "csv")
SERIES_COMMANDS = ("dinghas", "refine", "chain")
CONSTRUCTION_ALIASES = {"theorem5": "rational", "theorem5plus": "pairwise"}


class UnsupportedFormat(ChebConvexError, ValueError):
    """The requested output format is not available for this command."""


class UsageError(ChebConvexError, ValueError):
    pass


_PI = re.compile(r"^([+-]?)([0-9./]*)\*?pi(?:/([0-9]+))?$")


def parse_number(token: str):
    """A rational (``3``, ``-0.5``, ``1/3``) or a multiple of pi (``pi/2``, ``2pi/3``)."""
    tok = token.strip().lower()
    m = _PI.match(tok)
    if m:
        sign, coef, den = m.groups()
        value = float(Fraction(coef) if coef else 1) * math.pi / (int(den) if den else 1)
        return -value if sign == "-" else value
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse number {token!r}") from None


def parse_list(text: str, what: str) -> list:
    if text is None:
        raise UsageError(f"--{what} is required for this command")
    items = [s for s in text.split(",") if s.strip()]
    if not items:
        raise UsageError(f"--{what} is empty")
    return [parse_number(s) for s in items]


def parse_indices(text: str) -> list:
    if text is None:
        raise UsageError("--indices is required for this command")
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--indices must be comma-separated integers, got {text!r}") from None


def parse_domain(text: str | None) -> Domain | None:
    """``lo,hi`` for a closed interval, ``(lo,hi)`` open, mixed brackets allowed."""
    if text is None:
        return None
    s = text.strip()
    closed_lo, closed_hi = not s.startswith("("), not s.endswith(")")
    s = s.strip("[]()")
    parts = s.split(",")
    if len(parts) != 2:
        raise UsageError(f"--domain must look like 'lo,hi' or '(lo,hi)', got {text!r}")

    def end(tok):
        t = tok.strip().lower()
        if t in ("inf", "+inf"):
            return math.inf
        if t == "-inf":
            return -math.inf
        return parse_number(t)

    return Domain.interval(end(parts[0]), end(parts[1]), closed_lo, closed_hi)


def to_json_value(v):
    """Fractions become ``"p/q"`` (integers stay integers); mpf becomes float."""
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, mpmath.mpf):
        return float(v)
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return v
    if isinstance(v, float):
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, dict):
        return {str(k): to_json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [to_json_value(x) for x in v]
    try:
        return float(v)
    except (TypeError, ValueError):
        return str(v)


def _number_out(v, exact: bool):
    if exact:
        return v
    return float(v)


def _points_out(pts, exact: bool):
    return [_number_out(p, exact) for p in pts]


def _arith(args) -> str:
    return "exact" if args.exact else "float"


def _seed(args) -> int:
    env = os.environ.get("CHEBCONVEX_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"CHEBCONVEX_SEED must be an integer, got {env!r}") from None
    return args.seed


def _system(args):
    if args.system is None:
        raise UsageError("--system is required")
    return parse_system(args.system, parse_domain(args.domain))


def _extended(args):
    base = _system(args)
    ext = parse_function(args.extension) if args.extension else None
    return base.extend(ext)


def _function(args, required=True):
    if args.function is None:
        if required:
            raise UsageError("--function is required for this command")
        return None
    return parse_function(args.function)


def _sampling(args, seed):
    region = None
    if args.region:
        lo, hi = parse_list(args.region, "region")
        region = (float(lo), float(hi))
    return SamplingPlan(lattice=args.lattice, random_draws=args.samples, seed=seed, region=region)


def _step_vector(args, n, required=True):
    if args.t is None:
        if required:
            raise UsageError("--t is required for this command")
        return None
    t = parse_list(args.t, "t")
    if len(t) != n:
        raise UsageError(f"--t has {len(t)} entries but the system has dimension {n}")
    return tuple(t)


# --------------------------------------------------------------------- commands


def cmd_phi(args):
    system = _system(args)
    f = _function(args, required=False)
    config = parse_list(args.config, "config")
    value = evaluate_phi(system, config, f, arithmetic=_arith(args), cond_threshold=args.cond_threshold)
    report = {"value": _number_out(value, args.exact), "config": _points_out(config, args.exact)}
    if not args.exact:
        report["ill_conditioned"] = bool(value.ill_conditioned)
    code = 0
    if f is None:
        report["positive"] = bool(value > 0)
        code = 0 if value > 0 else 1
    return report, code


def cmd_divdiff(args):
    system = _extended(args)
    f = _function(args)
    config = parse_list(args.config, "config")
    dd = divided_difference(system, f, config, arithmetic=_arith(args))
    e = args.exact
    report = {
        "value": _number_out(dd.value, e),
        "numerator": _number_out(dd.numerator, e),
        "denominator": _number_out(dd.denominator, e),
        "config": _points_out(config, e),
    }
    return report, 0


def cmd_decompose(args):
    system = _extended(args)
    grid = parse_list(args.grid, "grid")
    indices = parse_indices(args.indices)
    e = args.exact
    try:
        cert = decompose(system, grid, indices, arithmetic=_arith(args), agreement_tol=args.agreement_tol)
    except InconsistentOracleError as exc:
        return {"verdict": "inconsistent", "message": str(exc)}, 1
    report = {
        "verdict": "consistent",
        "coefficients": [_number_out(c, e) for c in cert.coefficients],
        "linear_coefficients": [_number_out(c, e) for c in cert.linear_coefficients],
        "residual": _number_out(cert.residual, e),
        "disagreement": _number_out(cert.disagreement, e),
        "target": _points_out(cert.target, e),
        "indices": list(cert.indices),
    }
    return report, 0


def cmd_chain(args):
    system = _extended(args)
    f = _function(args)
    grid = parse_list(args.grid, "grid")
    indices = parse_indices(args.indices)
    b = chain_bounds(system, f, grid, indices, arithmetic=_arith(args))
    e = args.exact
    tol = 0 if e else args.tol * max(1.0, abs(float(b.upper)), abs(float(b.lower)))
    holds = b.holds(tol)
    report = {
        "lower": _number_out(b.lower, e),
        "mid": _number_out(b.mid, e),
        "upper": _number_out(b.upper, e),
        "window_values": [_number_out(v, e) for v in b.window_values],
        "verdict": "holds" if holds else "violated",
    }
    return report, 0 if holds else 1


def cmd_check(args, seed):
    system = _system(args)
    f = _function(args)
    if args.grid is not None:
        grid = parse_list(args.grid, "grid")
        r = check_discrete_convexity(system, f, grid, spot_checks=args.samples, seed=seed, arithmetic=_arith(args))
        report = {
            "kind": "grid",
            "verdict": r.verdict,
            "window_phis": [_number_out(v, args.exact) for v in r.window_phis],
            "witness": None if r.witness is None else _points_out(r.witness, args.exact),
            "witness_window": r.witness_window,
            "spot_checked": r.spot_checked,
            "spot_failures": [list(s) for s in r.spot_failures],
        }
        return report, 0 if r.verdict == "convex" else 1
    if args.mode not in MODES:
        raise UsageError(f"--mode must be one of {MODES} for check")
    t = _step_vector(args, system.n, required=args.mode != "jensen") or (1,) * system.n
    plan = _sampling(args, seed)
    r = check_t_convexity(system, f, t, args.mode, plan, arithmetic=_arith(args))
    return _convexity_report(r, "interval", t), 0 if r.ok else 1


def _convexity_report(r, kind, t, extra=None):
    w = r.witness
    report = {
        "kind": kind,
        "verdict": r.verdict,
        "mode": r.mode,
        "t": [float(v) for v in t],
        "samples_checked": r.samples_checked,
        "witness": None
        if w is None
        else {
            "x": float(w.x),
            "h": float(w.h),
            "permutation": list(w.permutation),
            "steps": [float(s) for s in w.steps],
            "config": [float(c) for c in w.config],
            "phi": float(w.phi),
            "label": w.label,
        },
        "target_failures": [
            {"x": float(x), "h": float(h), "config": [float(c) for c in cfg], "phi": float(phi)}
            for x, h, cfg, phi in r.target_failures
        ],
    }
    report.update(extra or {})
    return report


def cmd_propagate(args, seed):
    system = _system(args)
    f = _function(args)
    t = _step_vector(args, system.n)
    plan = _sampling(args, seed)
    construction = CONSTRUCTION_ALIASES.get(args.construction, args.construction)
    if construction == "rational":
        if args.r is None:
            raise UsageError("--r is required for the rational construction")
        r = [as_rational(v) for v in args.r.split(",") if v.strip()]
        res = check_rational_propagation(system, f, t, r, plan, arithmetic=_arith(args))
        extra = {"construction": "rational", "r": [to_json_value(v) for v in r]}
    else:
        res = check_pairwise_reduction(system, f, t, plan, arithmetic=_arith(args))
        extra = {"construction": "pairwise"}
    return _convexity_report(res, "propagate", t, extra), 0 if res.ok else 1


def _dinghas_levels(args, system):
    width = float(system.domain.width)
    delta0 = args.delta0 if args.delta0 is not None else min(1.0, width / 4)
    return dyadic_schedule(delta0, args.levels)


def cmd_dinghas(args, seed):
    system = _extended(args)
    f = _function(args)
    if args.point is None:
        raise UsageError("--point is required for dinghas")
    p = parse_number(args.point)
    t = None
    if args.mode == "pair":
        t = _step_vector(args, system.n)
    elif args.mode not in ("omega", "jensen"):
        raise UsageError("--mode must be omega, jensen or pair for dinghas")
    schedule = _dinghas_levels(args, system)
    sampler = DinghasSampler(random_draws=args.samples, seed=seed)
    rep = characterize_convexity(system, f, args.mode, [p], schedule, sampler, t=t, tol=args.tol)
    first = rep.estimates[0]
    report = {
        "point": first.point,
        "mode": args.mode,
        "schedule": list(first.schedule),
        "inf_estimates": list(first.inf_estimates),
        "estimate": min(e.estimate for e in rep.estimates),
        "one_sided": True,
        "saturated": any(e.saturated for e in rep.estimates),
        "samples_per_level": list(first.samples_per_level),
        "estimates": [
            {"t": None if e.t is None else [float(v) for v in e.t], "inf_estimates": list(e.inf_estimates),
             "estimate": e.estimate}
            for e in rep.estimates
        ],
        "verdict": rep.verdict,
        "witness": None if rep.witness is None else [float(x) for x in rep.witness],
        "witness_value": rep.witness_value,
    }
    return report, 0 if rep.verdict != "not-convex" else 1


def cmd_refine(args):
    system = _extended(args)
    f = _function(args)
    if args.method == "general":
        w = refine_general(system, f, parse_list(args.config, "config"), args.max_iters)
    else:
        if args.x is None or args.y is None:
            raise UsageError(f"--x and --y are required for the {args.method} method")
        x, y = parse_number(args.x), parse_number(args.y)
        if args.method == "jensen":
            w = refine_jensen(system, f, x, y, args.max_iters)
        else:
            w = refine_pair(system, f, _step_vector(args, system.n), x, y, args.max_iters)
    monotone = w.is_nonincreasing(1e-20)
    report = {
        "method": args.method,
        "p": w.p,
        "values": w.values,
        "widths": w.widths,
        "iterations": w.iterations,
        "final_config": [float(c) for c in w.trace[-1][0]],
        "bound_kind": w.bound_kind,
        "evaluation": w.evaluation,
        "monotone": monotone,
    }
    return report, 0 if monotone else 1


# ----------------------------------------------------------------------- output


def emit_series(report: dict, command: str, fmt: str) -> str:
    """Render ``report`` as JSON, or as a CSV series for plotting.

    CSV columns: dinghas ``level,delta,inf_estimate``; refine
    ``step,width,value``; chain ``lower,mid,upper``.
    """
    if fmt == "json":
        return json.dumps(to_json_value(report), sort_keys=True, indent=2, allow_nan=False) + "\n"
    if fmt != "csv":
        raise UnsupportedFormat(f"unknown format {fmt!r}; expected one of {FORMATS}")
    if command not in SERIES_COMMANDS:
        raise UnsupportedFormat(f"CSV output is available for {', '.join(SERIES_COMMANDS)} only")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if command == "dinghas":
        w.writerow(["level", "delta", "inf_estimate"])
        for k, (d, v) in enumerate(zip(report["schedule"], report["inf_estimates"])):
            w.writerow([k, repr(float(d)), repr(float(v))])
    elif command == "refine":
        w.writerow(["step", "width", "value"])
        for k, (d, v) in enumerate(zip(report["widths"], report["values"])):
            w.writerow([k, repr(float(d)), repr(float(v))])
    else:
        w.writerow(["lower", "mid", "upper"])
        w.writerow([to_json_value(report[k]) if isinstance(report[k], Fraction) else repr(float(report[k]))
                    for k in ("lower", "mid", "upper")])
    return buf.getvalue()


# ----------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chebconvex",
        description="Convexity analysis with respect to Chebyshev systems. "
        "Sampled verdicts hold on the examined samples only.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", help="poly:N, trig-odd:N, trig-even:N, one-xsq, inline JSON or a JSON file")
    common.add_argument("--domain", help="interval 'lo,hi' (closed) or '(lo,hi)' (open); overrides the default")
    common.add_argument("--extension", help="extension function (default for poly systems: x**n)")
    common.add_argument("--function", help="builtin:NAME[:p1,...], inline JSON, or a .json/.csv file")
    common.add_argument("--exact", action="store_true", help="exact rational arithmetic; results as 'p/q'")
    common.add_argument("--format", choices=FORMATS, default="json")
    common.add_argument("--seed", type=int, default=0, help="random seed (CHEBCONVEX_SEED overrides)")
    common.add_argument("--tol", type=float, default=1e-9, help="verdict tolerance")

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text, description=help_text)

    p = add("phi", "determinant of the collocation matrix at a configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--cond-threshold", type=float, default=1e12)

    p = add("divdiff", "generalized divided difference")
    p.add_argument("--config", required=True)

    p = add("decompose", "convex-combination certificate for a sub-configuration")
    p.add_argument("--grid", required=True)
    p.add_argument("--indices", required=True)
    p.add_argument("--agreement-tol", type=float, default=1e-8)

    p = add("chain", "window bounds for a sub-configuration divided difference")
    p.add_argument("--grid", required=True)
    p.add_argument("--indices", required=True)

    p = add("check", "convexity on a grid (--grid) or sampled step-pattern convexity on an interval")
    p.add_argument("--grid")
    p.add_argument("--t")
    p.add_argument("--mode", default="plain", choices=MODES)
    p.add_argument("--samples", type=int, default=256, help="random draws (grid mode: spot checks)")
    p.add_argument("--lattice", type=int, default=32)
    p.add_argument("--region", help="sampling interval 'lo,hi' inside the domain")

    p = add("propagate", "certify step-pattern inequalities through refinement grids")
    p.add_argument("--construction", choices=("rational", "pairwise", *CONSTRUCTION_ALIASES), default="rational",
                   help="rational: rational step ratios from cyclic t-steps; pairwise: t-steps from two-valued patterns")
    p.add_argument("--t")
    p.add_argument("--r", help="positive rationals, e.g. '1/3,2/3'")
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--lattice", type=int, default=32)
    p.add_argument("--region")

    p = add("dinghas", "sampled lower derivative estimates at a point")
    p.add_argument("--point")
    p.add_argument("--mode", default="omega", choices=("omega", "jensen", "pair"))
    p.add_argument("--t")
    p.add_argument("--levels", type=int, default=12)
    p.add_argument("--delta0", type=float)
    p.add_argument("--samples", type=int, default=32, help="random draws per level")

    p = add("refine", "mean-value refinement with a nonincreasing trace")
    p.add_argument("--method", choices=("general", "jensen", "pair"), default="general")
    p.add_argument("--config")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--t")
    p.add_argument("--max-iters", type=int, default=60)
    return parser


def run(argv=None) -> tuple:
    """Parse ``argv`` and execute; return ``(output text, exit code)``."""
    args = build_parser().parse_args(argv)
    seed = _seed(args)
    if args.tol <= 0:
        raise UsageError("--tol must be positive")
    handlers = {
        "phi": lambda: cmd_phi(args),
        "divdiff": lambda: cmd_divdiff(args),
        "decompose": lambda: cmd_decompose(args),
        "chain": lambda: cmd_chain(args),
        "check": lambda: cmd_check(args, seed),
        "propagate": lambda: cmd_propagate(args, seed),
        "dinghas": lambda: cmd_dinghas(args, seed),
        "refine": lambda: cmd_refine(args),
    }
    report, code = handlers[args.command]()
    if args.format == "json":
        report = {
            "command": args.command,
            "version": __version__,
            "provenance": {
                "seed": seed,
                "tol": args.tol,
                "arithmetic": _arith(args),
                "samples": getattr(args, "samples", None),
                "lattice": getattr(args, "lattice", None),
                "levels": getattr(args, "levels", None),
            },
            **report,
        }
    return emit_series(report, args.command, args.format), code


def main(argv=None) -> int:
    try:
        out, code = run(argv)
    except (ChebConvexError, ValueError, KeyError, ArithmeticError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"chebconvex: error: {msg}", file=sys.stderr)
        return 2
    sys.stdout.write(out)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
