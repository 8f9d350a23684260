import math
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from jetcalc.errors import DomainError, ExprSyntaxError, MissingVariable, UnknownIdentifier
from jetcalc.expr import (
    Add,
    Func,
    Mul,
    Pow,
    Rational,
    Var,
    Verdict,
    const,
    differentiate,
    equivalence_check,
    evaluate,
    free_vars,
    is_polynomial,
    normalize,
    substitute,
)
from jetcalc.numeric import finite_difference_check
from jetcalc.parser import parse_expr

from strategies import VARS, points, polynomials, raw_tree, smooth

KG_SRC = "1/2*v1_1^2 - 1/2*v1_2^2 - 1/2*y1^2"
J1E = {"x1", "x2", "y1", "v1_1", "v1_2"}


def P(src, vocab=J1E):
    return parse_expr(src, vocab)


def to_sympy(e):
    return sympy.sympify(str(e).replace("^", "**"), locals={"ln": sympy.log})


# -- parsing -----------------------------------------------------------------


def test_parse_half_square():
    e = P("1/2*v1_1^2")
    assert isinstance(e, Mul)
    assert e.factors[0] == Rational(1, 2)
    assert e.factors[1] == Pow(Var("v1_1"), 2)


def test_parse_cancellation_to_zero():
    e = P("y1*(v1_1 - v1_1)")
    assert e == Rational(0)


def test_parse_function_power():
    e = P("sin(x1)^2")
    assert e == Pow(Func("sin", Var("x1")), 2)


def test_unary_minus_binds_tighter_than_power():
    # base := '-' base, so -x1^2 reads (-x1)^2
    assert P("-x1^2") == P("x1^2")
    assert P("-(x1^2)") == P("0 - x1^2")


def test_whitespace_insignificant():
    assert P(" 1 / 2 *v1_1 ^ 2") == P("1/2*v1_1^2")


def test_decimal_literals_are_exact():
    e = P("0.5*x1 + 0.25")
    assert e == P("1/2*x1 + 1/4")


def test_negative_integer_exponent():
    e = P("x1^-2")
    assert evaluate(e, {"x1": 2.0}) == pytest.approx(0.25)


@pytest.mark.parametrize("src,pos", [
    ("1/2*v1_1^", 9),
    ("x1 +", 4),
    ("(x1", 3),
    ("x1 $ 2", 3),
    ("sin x1", 4),
    ("x1^1.5", 3),
    ("", 0),
])
def test_syntax_error_positions(src, pos):
    with pytest.raises(ExprSyntaxError) as info:
        P(src)
    assert info.value.pos == pos
    assert str(info.value).startswith(f"SyntaxError at position {pos}")


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier) as info:
        P("p1_1 + x1")
    assert info.value.name == "p1_1"


@given(polynomials)
def test_print_parse_round_trip(e):
    assert parse_expr(str(e), VARS) == e


@given(smooth)
def test_print_parse_round_trip_smooth(e):
    assert parse_expr(str(e), VARS) == e


# -- differentiation ---------------------------------------------------------


def test_derivative_of_kg():
    assert differentiate(P(KG_SRC), "v1_1") == Var("v1_1")
    assert differentiate(P(KG_SRC), "v1_2") == -Var("v1_2")


def test_derivative_of_independent_variable():
    assert differentiate(P("y1"), "x1") == const(0)


def test_derivative_of_sine():
    assert differentiate(P("sin(y1)"), "y1") == P("cos(y1)")


@pytest.mark.parametrize("src,var,expected", [
    ("exp(2*x1)", "x1", "2*exp(2*x1)"),
    ("ln(x1^2 + 1)", "x1", "2*x1/(x1^2 + 1)"),
    ("sqrt(x1)", "x1", "1/(2*sqrt(x1))"),
    ("cos(x1*y1)", "y1", "-1*x1*sin(x1*y1)"),
    ("1/(x1 + y1)", "x1", "-1/(x1 + y1)^2"),
])
def test_table_and_chain_rules(src, var, expected):
    res = equivalence_check(differentiate(P(src), var), P(expected),
                            ranges={n: (0.1, 2.0) for n in J1E})
    assert res.verdict in (Verdict.PROVED_EQUAL, Verdict.NUMERICALLY_EQUAL)


@given(polynomials, st.sampled_from(VARS))
def test_derivative_matches_sympy(e, v):
    ours = to_sympy(differentiate(e, v))
    theirs = sympy.diff(to_sympy(e), sympy.Symbol(v))
    assert sympy.expand(ours - theirs) == 0


@given(polynomials, st.sampled_from(VARS), st.sampled_from(VARS))
def test_mixed_partials_commute(e, u, w):
    a = differentiate(differentiate(e, u), w)
    b = differentiate(differentiate(e, w), u)
    assert equivalence_check(a, b).verdict is Verdict.PROVED_EQUAL


@given(smooth, st.sampled_from(VARS), st.sampled_from(VARS))
def test_mixed_partials_commute_smooth(e, u, w):
    a = differentiate(differentiate(e, u), w)
    b = differentiate(differentiate(e, w), u)
    assert equivalence_check(a, b).equal


@given(polynomials, polynomials, st.sampled_from(VARS))
def test_derivative_is_linear_and_leibniz(a, b, v):
    assert differentiate(a + b, v) == differentiate(a, v) + differentiate(b, v)
    assert differentiate(a * b, v) == differentiate(a, v) * b + a * differentiate(b, v)


@given(smooth, st.sampled_from(VARS), points)
def test_derivative_matches_central_difference(e, v, at):
    try:
        fd = finite_difference_check(e, v, at, h=1e-6)
    except (DomainError, OverflowError):
        return
    if not (math.isfinite(fd.symbolic) and abs(fd.symbolic) < 1e6):
        return
    assert fd.abs_diff <= max(1e-6, 1e-4 * abs(fd.symbolic))


# -- evaluation --------------------------------------------------------------


def test_evaluate_kg_at_running_point():
    assert evaluate(P(KG_SRC), {"y1": 1, "v1_1": 2, "v1_2": 1}) == 1.0


def test_evaluate_zero_and_square():
    assert evaluate(Rational(0), {}) == 0.0
    assert evaluate(Pow(Var("x1"), 2), {"x1": -3}) == 9.0


def test_missing_variable():
    with pytest.raises(MissingVariable):
        evaluate(P("x1 + y1"), {"x1": 1.0})


@pytest.mark.parametrize("src,at", [
    ("1/x1", {"x1": 0.0}),
    ("ln(x1)", {"x1": 0.0}),
    ("ln(x1)", {"x1": -1.0}),
    ("sqrt(x1)", {"x1": -0.5}),
    ("x1/(x1 - y1)", {"x1": 1.0, "y1": 1.0}),
])
def test_domain_errors(src, at):
    with pytest.raises(DomainError):
        evaluate(P(src), at)


def test_literal_division_by_zero_is_domain_error():
    e = P("x1/0")
    with pytest.raises(DomainError):
        evaluate(e, {"x1": 1.0})


# -- substitution ------------------------------------------------------------


def test_substitute_simple():
    e = parse_expr("p1_1^2", {"p1_1"})
    assert substitute(e, {"p1_1": Var("v1_1")}) == P("v1_1^2")


@given(polynomials)
def test_identity_substitution(e):
    assert substitute(e, {v: Var(v) for v in VARS}) == e


def test_substitute_kg_momenta():
    e = substitute(P(KG_SRC), {"v1_1": Var("p1_1"), "v1_2": -Var("p1_2")})
    expected = parse_expr("1/2*p1_1^2 - 1/2*p1_2^2 - 1/2*y1^2", {"p1_1", "p1_2", "y1"})
    assert e == expected


def test_substitution_is_simultaneous():
    e = P("x1 - 2*y1")
    swapped = substitute(e, {"x1": Var("y1"), "y1": Var("x1")})
    assert swapped == P("y1 - 2*x1")


@given(polynomials, polynomials, points)
def test_substitution_commutes_with_evaluation(e, g, at):
    s = substitute(e, {"x1": g})
    inner = dict(at, x1=evaluate(g, at))
    lhs, rhs = evaluate(s, at), evaluate(e, inner)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


# -- normalization -----------------------------------------------------------


def test_normalize_cancellation():
    x = Var("x1")
    assert normalize(Add([Mul([const(2), x]), Mul([const(-2), x])])) == const(0)


def test_normalize_square():
    x = Var("x1")
    assert normalize(Mul([x, x])) == Pow(x, 2)


def test_normalize_commutative():
    assert normalize(Add([Var("y1"), Var("x1")])) == normalize(Add([Var("x1"), Var("y1")]))
    assert normalize(Add([Var("y1"), Var("x1")])).key == normalize(Add([Var("x1"), Var("y1")])).key


def test_rationals_lowest_terms():
    r = Rational(6, -4)
    assert r.value == Fraction(-3, 2)
    assert r.value.denominator > 0


@settings(max_examples=1000)
@given(smooth)
def test_normalize_idempotent(e):
    once = normalize(raw_tree(e))
    assert normalize(raw_tree(once)) == once


@settings(max_examples=100)
@given(polynomials, points)
def test_normalize_preserves_value(e, at):
    raw = raw_tree(e)
    lhs = evaluate(normalize(raw), at)
    rhs = _naive_eval(raw, at)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def _naive_eval(e, at):
    """Tree-walking evaluation that never normalizes; the oracle."""
    if isinstance(e, Rational):
        return float(e.value)
    if isinstance(e, Var):
        return at[e.name]
    if isinstance(e, Pow):
        return _naive_eval(e.base, at) ** e.exp
    if isinstance(e, Add):
        return sum(_naive_eval(t, at) for t in e.terms)
    if isinstance(e, Mul):
        out = 1.0
        for f in e.factors:
            out *= _naive_eval(f, at)
        return out
    raise TypeError(type(e))


@given(polynomials)
def test_polynomial_fragment(e):
    assert is_polynomial(e)
    assert free_vars(e) <= set(VARS)


def test_expressions_are_immutable():
    e = P("x1 + y1")
    with pytest.raises(AttributeError):
        e.terms = ()


# -- equivalence -------------------------------------------------------------


def test_binomial_expansion_proved_equal():
    r = equivalence_check(P("(v1_1+y1)^2"), P("v1_1^2+2*v1_1*y1+y1^2"))
    assert r.verdict is Verdict.PROVED_EQUAL
    assert r.path == "symbolic"


def test_pythagoras_numerically_equal():
    r = equivalence_check(P("sin(x1)^2+cos(x1)^2"), const(1), samples=200, seed=3)
    assert r.verdict is Verdict.NUMERICALLY_EQUAL
    assert r.samples == 200 and r.seed == 3 and r.max_residual <= 1e-12
    assert r.prng == "numpy.PCG64"


def test_constant_offset_proved_unequal():
    r = equivalence_check(P("x1"), P("x1+1"))
    assert r.verdict is Verdict.PROVED_UNEQUAL
    assert r.witness is not None


def test_numerically_unequal_has_witness():
    r = equivalence_check(P("sin(x1)"), P("x1"))
    assert r.verdict is Verdict.NUMERICALLY_UNEQUAL
    a, b = evaluate(P("sin(x1)"), r.witness), evaluate(P("x1"), r.witness)
    assert abs(a - b) > 1e-9 * (1 + max(abs(a), abs(b)))


def test_equivalence_is_deterministic():
    a, b = P("exp(x1)*exp(y1)"), P("exp(x1+y1)")
    assert equivalence_check(a, b, seed=11) == equivalence_check(a, b, seed=11)


def test_domain_points_are_redrawn():
    # ln(x1) is undefined on half the default range
    r = equivalence_check(P("ln(x1^2)"), P("2*ln(sqrt(x1^2))"), samples=50)
    assert r.verdict is Verdict.NUMERICALLY_EQUAL


def test_domain_retry_budget_is_bounded():
    with pytest.raises(DomainError):
        equivalence_check(P("sqrt(-1 - x1^2)"), P("x1"), samples=5)


@pytest.mark.parametrize("samples,tol", [(0, 1e-9), (10, 0.0)])
def test_equivalence_preconditions(samples, tol):
    with pytest.raises(ValueError):
        equivalence_check(P("x1"), P("x1"), samples=samples, tol=tol)
