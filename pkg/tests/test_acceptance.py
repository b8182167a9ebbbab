"""Acceptance criteria, one test each, printing one PASS/FAIL line per criterion."""

import io
import itertools
import json
import math
import time
from contextlib import redirect_stderr, redirect_stdout
from fractions import Fraction

import numpy as np
import pytest

from chebconvex.cli import main
from chebconvex.convexity import SamplingPlan, check_rational_propagation, rational_step_grid
from chebconvex.dinghas import (
    DinghasSampler,
    characterize_convexity,
    estimate_D,
    refine_general,
    refine_jensen,
    refine_pair,
)
from chebconvex.divdiff import (
    chain_bounds,
    check_discrete_convexity,
    classical_divided_difference,
    decompose,
    divided_difference,
    deletion_weight,
    deletion_residual,
)
from chebconvex.functions import TableFunction, builtin, monomial
from chebconvex.systems import builtin_system, evaluate_phi, is_nonnegative, phi_and_scale

from conftest import random_increasing, rel_close, trig_odd_extension, vandermonde


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} ({detail})")
        assert ok, detail

    return emit


def _float_grid(rng, k, lo, hi, gap):
    while True:
        g = np.sort(rng.uniform(lo, hi, k))
        if np.min(np.diff(g)) > gap:
            return [float(x) for x in g]


def test_01_vandermonde_agreement(verdict):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    bad_exact = bad_float = 0
    systems = {n: builtin_system("poly", n) for n in range(1, 7)}
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        pts = random_increasing(rng, n, -10, 10, 97)
        expected = vandermonde(pts)
        if evaluate_phi(systems[n], pts, arithmetic="exact") != expected:
            bad_exact += 1
        if not rel_close(evaluate_phi(systems[n], [float(p) for p in pts], cond_threshold=None), expected, 1e-10):
            bad_float += 1
    elapsed = time.perf_counter() - start
    ok = bad_exact == 0 and bad_float == 0 and elapsed < 5
    verdict(1, "Vandermonde agreement", ok, f"exact mismatches {bad_exact}, float mismatches {bad_float}, {elapsed:.2f}s")


def test_02_deletion_weight(verdict):
    rng = np.random.default_rng(202)
    worst, out_of_range = 0.0, 0
    for _ in range(500):
        n = int(rng.integers(1, 5))
        sys_ = builtin_system("poly", n).extend()
        grid = _float_grid(rng, n + 2, -3, 3, 0.05)
        j = int(rng.integers(0, n + 2))
        a = deletion_weight(sys_, grid, j)
        out_of_range += not (0 <= a <= 1)
        worst = max(worst, deletion_residual(sys_, grid, j, a))
    poly2 = builtin_system("poly", 2).extend()
    worked = deletion_weight(poly2, (0, 1, 2, 3), 1, arithmetic="exact")
    ok = worst < 1e-9 and out_of_range == 0 and worked == Fraction(1, 3)
    verdict(2, "one-point deletion weights", ok, f"max residual {worst:.2e}, out of [0,1]: {out_of_range}, worked case {worked}")


def test_03_decomposition(verdict):
    rng = np.random.default_rng(303)
    worst_gap = worst_sum = worst_res = 0.0
    out_of_range = 0
    for _ in range(500):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(n, 9))
        sys_ = builtin_system("poly", n).extend()
        grid = _float_grid(rng, m + 1, -3, 3, 0.05)
        idx = sorted(int(i) for i in rng.choice(m + 1, n + 1, replace=False))
        c = decompose(sys_, grid, idx, agreement_tol=1e-8)
        worst_gap = max(worst_gap, c.disagreement)
        worst_sum = max(worst_sum, abs(sum(c.coefficients) - 1))
        worst_res = max(worst_res, c.residual)
        out_of_range += sum(not (-1e-12 <= a <= 1 + 1e-12) for a in c.coefficients)
    ok = worst_gap < 1e-8 and worst_sum < 1e-12 and worst_res < 1e-9 and out_of_range == 0
    verdict(3, "decomposition certificates", ok,
            f"route gap {worst_gap:.2e}, |sum-1| {worst_sum:.2e}, residual {worst_res:.2e}, out of range {out_of_range}")


def test_04_chain_inequality(verdict):
    rng = np.random.default_rng(404)
    kinds = {
        "poly": lambda: (builtin_system("poly", int(rng.integers(1, 5))).extend(), (-3, 3)),
        "trig-odd": lambda: (builtin_system("trig-odd", int(rng.integers(1, 3))).extend(trig_odd_extension()), (-3, 3)),
        "one-xsq": lambda: (builtin_system("one-xsq").extend(monomial(4)), (0.1, 3)),
    }
    names = list(kinds)
    violations = 0
    for i in range(1000):
        sys_, (lo, hi) = kinds[names[i % 3]]()
        n = sys_.n
        m = int(rng.integers(n, n + 5))
        grid = _float_grid(rng, m + 1, lo, hi, 0.08)
        idx = sorted(int(k) for k in rng.choice(m + 1, n + 1, replace=False))
        coefs = rng.normal(size=3)
        f = (float(coefs[0]) * builtin("exp", 0.7) + float(coefs[1]) * builtin("abs", float(rng.uniform(lo, hi)))
             + float(coefs[2]) * builtin("sin", 2.3))
        b = chain_bounds(sys_, f, grid, idx)
        scale = max(1.0, max(abs(v) for v in b.window_values))
        violations += not b.holds(1e-9 * scale)
    verdict(4, "chain inequality", violations == 0, f"{violations} violations in 1000 instances")


def test_05_window_certificate_brute_force(verdict):
    rng = np.random.default_rng(505)
    start = time.perf_counter()
    certified = failures = 0
    for n in (2, 3):
        sys_ = builtin_system("poly", n).extend()
        fns_base = tuple(sys_.base.basis)
        for size in range(n + 1, 9):
            grid = _float_grid(rng, size, -2, 2, 0.1)
            for k in range(200):
                if k % 2:
                    vals = rng.normal(size=size)
                else:
                    vals = np.array(grid) ** n + 0.05 * rng.normal(size=size)
                f = TableFunction(grid, [float(v) for v in vals])
                if check_discrete_convexity(sys_, f, grid, spot_checks=0).verdict != "convex":
                    continue
                certified += 1
                fns = fns_base + (f,)
                for sub in itertools.combinations(grid, n + 1):
                    value, scale = phi_and_scale(fns, list(sub))
                    if not is_nonnegative(value, scale, 1e-10, 1e-10):
                        failures += 1
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 30 and certified > 0
    verdict(5, "window-to-global brute force", ok, f"{certified} certified functions, {failures} negative sub-configurations, {elapsed:.1f}s")


def test_06_classical_equivalence(verdict):
    rng = np.random.default_rng(606)
    sys_ = builtin_system("poly", 2).extend()
    funcs = [builtin("exp", 0.9), builtin("sin", 1.7, 0.3), builtin("abs", 0.2), monomial(4), builtin("cos", 0.5)]
    worst = 0.0
    for i in range(1000):
        pts = _float_grid(rng, 3, -5, 5, 0.01)
        f = funcs[i % len(funcs)]
        g = divided_difference(sys_, f, pts).value
        c = classical_divided_difference(f, pts)
        worst = max(worst, abs(g - c) / max(1.0, abs(g), abs(c)))
    verdict(6, "generalized vs classical second divided difference", worst <= 1e-10, f"max relative gap {worst:.2e}")


def test_07_refinement_grid(verdict):
    rng = np.random.default_rng(707)
    pattern_failures = 0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        t = [Fraction(int(v), int(rng.integers(1, 4))) for v in rng.integers(1, 6, n)]
        q = int(rng.integers(1, 6))
        r = [Fraction(int(v), q) for v in rng.integers(1, 6, n)]
        x, h = Fraction(int(rng.integers(-20, 20)), 7), Fraction(int(rng.integers(1, 20)), 5)
        g = rational_step_grid(x, h, r, t, arithmetic="exact")
        qq = math.lcm(*(v.denominator for v in r))
        total = sum(t)
        diffs = [b - a for a, b in zip(g.points, g.points[1:])]
        if any(d != t[i % n] * h / (total * qq) for i, d in enumerate(diffs)):
            pattern_failures += 1
        target = [x]
        for v in r:
            target.append(target[-1] + v * h)
        if list(g.target) != target:
            pattern_failures += 1
    poly2 = builtin_system("poly", 2)
    plan = SamplingPlan(lattice=8, random_draws=32, seed=7)
    convex = check_rational_propagation(poly2, monomial(2), (1, 1), ["1/3", "2/3"], plan)
    concave = check_rational_propagation(poly2, -monomial(2), (1, 1), ["1/3", "2/3"], plan)
    ok = (pattern_failures == 0 and convex.ok and not convex.target_failures
          and concave.verdict == "violated" and concave.witness is not None and "window" in concave.witness.label)
    verdict(7, "refinement grid pattern and propagation", ok,
            f"pattern failures {pattern_failures}, p2 {convex.verdict}, -p2 {concave.verdict}")


def test_08_refinement_shrinkage(verdict):
    rng = np.random.default_rng(808)
    general_bad = pair_bad = 0
    for _ in range(200):
        n = int(rng.integers(1, 4))
        sys_ = builtin_system("poly", n).extend()
        cfg = sorted(Fraction(int(v), 8) for v in rng.choice(80, n + 1, replace=False))
        coefs = [int(c) for c in rng.integers(-3, 4, n + 3)]
        f = builtin("poly", *coefs) + builtin("abs", Fraction(int(rng.integers(0, 80)), 8))
        w = refine_general(sys_, f, cfg)
        d = max(b - a for a, b in zip(cfg, cfg[1:]))
        widths = [c[-1] - c[0] for c, _ in w.trace]
        shrink_ok = all(wk <= n * d / Fraction(2) ** (k - 1) for k, wk in enumerate(widths[1:], start=1))
        general_bad += not (shrink_ok and w.is_nonincreasing())
    poly2 = builtin_system("poly", 2).extend()
    for _ in range(50):
        t = (Fraction(int(rng.integers(1, 6))), Fraction(int(rng.integers(1, 6))))
        x = Fraction(int(rng.integers(-10, 0)), 3)
        y = x + Fraction(int(rng.integers(1, 10)), 2)
        w = refine_pair(poly2, monomial(4), t, x, y)
        ratio = max(t) / (t[0] + t[1])
        widths = [c[-1] - c[0] for c, _ in w.trace]
        pair_bad += not all(wk <= ratio ** (k - 1) * (y - x) for k, wk in enumerate(widths[1:], start=1))
        pair_bad += not w.is_nonincreasing()
    j = refine_jensen(poly2, builtin("exp"), 0, 1)
    vals = [v for _, v in j.trace]
    tail = float(vals[-1] - vals[-6])
    ok = general_bad == 0 and pair_bad == 0 and j.is_nonincreasing() and tail > -1e-9
    verdict(8, "refinement shrinkage and monotone traces", ok,
            f"general failures {general_bad}/200, pair failures {pair_bad}, jensen tail change {tail:.2e}")


def test_09_dinghas_estimates(verdict):
    poly2 = builtin_system("poly", 2).extend()
    sampler = DinghasSampler(seed=9)
    probes = [float(p) for p in np.linspace(-2, 2, 10)]
    quad = [estimate_D(poly2, monomial(2), p, sampler=sampler).estimate for p in probes]
    kink = estimate_D(poly2, builtin("abs"), 0, sampler=sampler).estimate
    neg = estimate_D(poly2, -monomial(2), 0.5, sampler=sampler).estimate
    r1 = characterize_convexity(poly2, -monomial(2), "omega", [0.5], sampler=sampler)
    r2 = characterize_convexity(poly2, -monomial(2), "omega", [0.5], sampler=sampler)
    again = divided_difference(poly2, -monomial(2), r1.witness, arithmetic="exact").value
    ok = (all(abs(v - 1) <= 1e-9 for v in quad) and abs(kink) <= 1e-9 and abs(neg + 1) <= 1e-9
          and r1.verdict == "not-convex" and r1.witness == r2.witness and again < 0 and float(again) == r1.witness_value)
    verdict(9, "lower derivative estimates", ok,
            f"p2 range [{min(quad)}, {max(quad)}], |x| at 0 {kink}, -p2 {neg}, witness {[float(x) for x in r1.witness]}")


CLI_CASES = {
    # command: (passing argv, violating argv, expected violating exit code)
    "phi": (["--system", "poly:3", "--config", "0,1,3"],
            ["--system", '{"kind":"table","table":{"points":[0,1],"values":[[1,1],[1,0]]}}', "--config", "0,1"], 1),
    "divdiff": (["--system", "poly:2", "--function", "builtin:poly:0,0,0,1", "--config", "0,1,2"],
                ["--system", "poly:2", "--function", "builtin:poly:0,0,0,1", "--config", "0,2,1"], 2),
    "decompose": (["--system", "poly:2", "--grid", "0,1,2,3", "--indices", "0,1,3"],
                  ["--system", "poly:2", "--grid", "0,1,2,3", "--indices", "0,1,3", "--agreement-tol", "1e-300"], 1),
    "chain": (["--system", "poly:2", "--function", "builtin:poly:0,0,0,1", "--grid", "0,1,2,3", "--indices", "0,2,3"],
              ["--system", "poly:2", "--function", "builtin:poly:0,0,0,1", "--grid", "0,1,2,3", "--indices", "0,3"], 2),
    "check": (["--system", "poly:2", "--function", "builtin:poly:0,0,1", "--mode", "symmetric", "--t", "1,2",
               "--samples", "16", "--lattice", "6"],
              ["--system", "poly:2", "--function", "builtin:poly:0,0,-1", "--mode", "jensen",
               "--samples", "16", "--lattice", "6"], 1),
    "propagate": (["--system", "poly:2", "--function", "builtin:poly:0,0,1", "--t", "1,1", "--r", "1/3,2/3",
                   "--samples", "8", "--lattice", "4"],
                  ["--system", "poly:2", "--function", "builtin:poly:0,0,-1", "--construction", "pairwise",
                   "--t", "1,3", "--samples", "8", "--lattice", "4"], 1),
    "dinghas": (["--system", "poly:2", "--function", "builtin:abs", "--point", "0", "--levels", "6"],
                ["--system", "poly:2", "--function", "builtin:poly:0,0,-1", "--point", "0", "--levels", "6"], 1),
    "refine": (["--system", "poly:2", "--function", "builtin:exp", "--method", "pair", "--t", "1,2",
                "--x", "0", "--y", "1"],
               ["--system", "poly:2", "--function", "builtin:exp", "--method", "pair", "--t", "1,2",
                "--x", "1", "--y", "0"], 2),
}


def _run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue().encode("utf-8")


def test_10_cli_determinism_and_exit_codes(verdict):
    problems = []
    for command, (good, bad, bad_code) in CLI_CASES.items():
        for argv, expected in ((good, 0), (bad, bad_code)):
            full = [command, *argv, "--seed", "3"]
            c1, o1 = _run_cli(full)
            c2, o2 = _run_cli(full)
            if o1 != o2:
                problems.append(f"{command}: output differs between runs")
            if c1 != expected or c2 != expected:
                problems.append(f"{command}: exit {c1} expected {expected}")
            if expected != 2:
                json.loads(o1)
    verdict(10, "CLI determinism and exit codes", not problems,
            "; ".join(problems) or f"{len(CLI_CASES)} commands, passing and violating runs each twice")
