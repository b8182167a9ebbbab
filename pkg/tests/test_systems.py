import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chebconvex.errors import (
    DomainNotPositiveError,
    DomainTooLongError,
    NotStrictlyOrderedError,
    OffGridError,
    OutOfDomainError,
    ConfigurationLengthError,
    SpecError,
)
from chebconvex.functions import builtin, monomial
from chebconvex.systems import (
    Domain,
    IllConditionedWarning,
    all_configurations,
    builtin_system,
    evaluate_phi,
    parse_system,
    phi_unchecked,
    system_from_spec,
    system_to_spec,
    tabulated_system,
    validate_positivity,
)

from conftest import rel_close, vandermonde


def test_vandermonde_example():
    s = builtin_system("poly", 3)
    assert evaluate_phi(s, (0, 1, 3)) == 6.0
    assert evaluate_phi(s, (0, 1, 3), arithmetic="exact") == 6


def test_poly2_is_gap():
    assert evaluate_phi(builtin_system("poly", 2), (0, 1)) == 1.0


def test_one_xsq_pair():
    s = builtin_system("one-xsq")
    assert evaluate_phi(s, (1, 2)) == pytest.approx(3.0)


def test_one_xsq_rejects_symmetric_domain():
    # (-1, 1) would give a zero determinant
    with pytest.raises(DomainNotPositiveError):
        builtin_system("one-xsq", domain=Domain.interval(-1, 1))


def test_trig_even_pair():
    s = builtin_system("trig-even", 1, Domain.interval(0, math.pi / 2))
    assert evaluate_phi(s, (math.pi / 6, math.pi / 2)) == pytest.approx(math.sin(math.pi / 3), rel=1e-12)


def test_trig_even_open_endpoint_is_outside():
    s = builtin_system("trig-even", 1, Domain.open_interval(0, math.pi / 2))
    with pytest.raises(OutOfDomainError):
        evaluate_phi(s, (math.pi / 6, math.pi / 2))


def test_trig_odd_triple():
    s = builtin_system("trig-odd", 1, Domain.interval(0, math.pi))
    v = evaluate_phi(s, (0, math.pi / 2, math.pi))
    expected = 4 * math.sin(math.pi / 4) * math.sin(math.pi / 2) * math.sin(math.pi / 4)
    assert v == pytest.approx(expected, rel=1e-12)
    assert v == pytest.approx(2.0, rel=1e-12)


def test_trig_domain_limits():
    with pytest.raises(DomainTooLongError):
        builtin_system("trig-odd", 1, Domain.interval(0, 7))
    with pytest.raises(DomainTooLongError):
        builtin_system("trig-even", 1, Domain.interval(0, 3.5))
    # half-open interval of exactly the critical length is admissible
    builtin_system("trig-even", 1, Domain.interval(0, math.pi, closed_hi=False))


def test_ordering_and_domain_errors():
    s = builtin_system("poly", 3)
    with pytest.raises(NotStrictlyOrderedError):
        evaluate_phi(s, (0, 1, 1))
    with pytest.raises(ConfigurationLengthError):
        evaluate_phi(s, (0, 1))
    s2 = builtin_system("poly", 2, Domain.interval(0, 1))
    with pytest.raises(OutOfDomainError):
        evaluate_phi(s2, (0.5, 2))


def test_ill_conditioned_flag():
    s = builtin_system("poly", 6)
    pts = [1 + k * 1e-4 for k in range(6)]
    with pytest.warns(IllConditionedWarning):
        v = evaluate_phi(s, pts, cond_threshold=1e6)
    assert v.ill_conditioned
    assert v.condition > 1e6


def test_validate_positivity_examples():
    rep = validate_positivity(builtin_system("poly", 2), all_configurations([0, 1, 2], 2))
    assert rep.verdict == "positive" and len(rep.entries) == 3
    rep = validate_positivity(builtin_system("one-xsq"), all_configurations([1, 2, 3], 2))
    assert rep.verdict == "positive"
    assert all(e.sign > 0 and e.value > 0 for e in rep.entries)


def test_validate_positivity_detects_negated_value():
    pts = [0, 1, 2]
    good = tabulated_system(pts, [[1, 1, 1], [0, 1, 2]])
    assert validate_positivity(good, all_configurations(pts, 2)).verdict == "positive"
    bad = tabulated_system(pts, [[1, 1, 1], [0, -1, 2]])
    rep = validate_positivity(bad, all_configurations(pts, 2))
    assert rep.verdict == "violated"
    assert rep.witness.config == (0, 1)
    assert rep.witness.value < 0


def test_tabulated_off_grid():
    s = tabulated_system([0, 1, 2], [[1, 1, 1], [0, 1, 2]])
    with pytest.raises(OutOfDomainError):
        evaluate_phi(s, (0, 1.5))


def test_exact_mode_rejects_transcendental():
    from chebconvex.errors import InexactArithmeticError

    with pytest.raises(InexactArithmeticError):
        evaluate_phi(builtin_system("trig-odd", 1), (0, 1, 2), arithmetic="exact")


def test_serialization_round_trip():
    s = parse_system('{"kind": "poly", "n": 3, "domain": {"lo": 0, "hi": 5}}')
    assert s.n == 3 and float(s.domain.hi) == 5
    again = system_from_spec(system_to_spec(s))
    assert again.n == 3
    t = system_from_spec({"kind": "table", "n": 2, "table": {"points": [0, 1], "values": [[1, 1], [0, 1]]}})
    assert evaluate_phi(t, (0, 1)) == 1.0
    with pytest.raises(SpecError):
        system_from_spec({"kind": "bogus"})
    with pytest.raises(SpecError):
        parse_system("poly:x")


@given(st.lists(st.fractions(min_value=-10, max_value=10, max_denominator=50), min_size=1, max_size=6, unique=True))
def test_vandermonde_exact_property(pts):
    pts = sorted(pts)
    s = builtin_system("poly", len(pts))
    assert evaluate_phi(s, pts, arithmetic="exact") == vandermonde(pts)
    assert rel_close(evaluate_phi(s, [float(p) for p in pts]), vandermonde(pts), 1e-10)


@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_trig_odd_product_formula(n, seed):
    rng = np.random.default_rng(seed)
    pts = sorted(rng.uniform(-3.0, 3.0, 2 * n + 1))
    if min(np.diff(pts)) < 1e-3:
        return
    s = builtin_system("trig-odd", n)
    expected = 4 ** (n * n) * math.prod(math.sin((b - a) / 2) for a, b in itertools.combinations(pts, 2))
    assert rel_close(evaluate_phi(s, pts), expected, 1e-8)


@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_column_swap_negates(n, seed):
    rng = np.random.default_rng(seed)
    pts = sorted(rng.uniform(-2, 2, n))
    s = builtin_system("poly", n)
    i, j = sorted(rng.choice(n, 2, replace=False))
    swapped = list(pts)
    swapped[i], swapped[j] = swapped[j], swapped[i]
    a = phi_unchecked(s.basis, pts)
    b = phi_unchecked(s.basis, swapped)
    assert rel_close(a, -b, 1e-10)


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_multilinearity_in_last_row(n, seed):
    rng = np.random.default_rng(seed)
    ext = builtin_system("poly", n).extend()
    alpha = float(rng.uniform(0.1, 3))
    coefs = [float(c) for c in rng.normal(size=n)]
    f = alpha * ext.extension
    for k, c in enumerate(coefs):
        f = f + c * monomial(k)
    pts = sorted(rng.uniform(-2, 2, n + 1))
    if min(np.diff(pts)) < 1e-2:
        return
    lhs = evaluate_phi(ext.base, pts, f)
    rhs = alpha * evaluate_phi(ext, pts)
    assert rel_close(lhs, rhs, 1e-9)


def test_phi_is_deterministic():
    s = builtin_system("trig-odd", 2)
    pts = (-1.0, -0.3, 0.1, 0.5, 1.2)
    assert evaluate_phi(s, pts) == evaluate_phi(s, pts)


def test_table_function_off_grid():
    from chebconvex.functions import TableFunction

    f = TableFunction([0, 1], [1, 2])
    with pytest.raises(OffGridError):
        f(0.5)
