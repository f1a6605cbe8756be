import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distint.expr import (
    Chirp, Const, DomainError, Indicator, ParseError, Periodic, Power, Restrict, Scale, Smooth,
    SmoothProduct, StepSeq, Sum, differentiate, eval_at, evaluate, parse, singular_points, to_text,
)

# ---------------------------------------------------------------------------
# frozen examples


def test_parse_chirp_constructor():
    assert parse("chirp(a=0, alpha=-3, beta=1, sin)") == Chirp(-3.0, 1.0, "sin", 0.0, "both", False)


def test_indicator_is_a_restriction_not_a_second_factor():
    e = parse("pow(alpha=-0.5) * indicator(0,1)")
    assert e == Restrict(0.0, 1.0, Power(-0.5))


def test_two_general_factors_rejected_with_diagnostics():
    text = "chirp(alpha=1,beta=1,sin) * chirp(alpha=1,beta=1,cos)"
    with pytest.raises(ParseError) as info:
        parse(text)
    assert "two non-smooth factors" in info.value.diagnostics.message
    assert "^" in info.value.diagnostics.render(text)


def test_unknown_leaf_reports_offset_and_expectations():
    with pytest.raises(ParseError) as info:
        parse("1 + foo(x)")
    d = info.value.diagnostics
    assert d.position == 4
    assert "'chirp('" in d.expected


@pytest.mark.parametrize("text", ["chirp(alpha=1,beta=0,sin)", "indicator(1,0)", "periodic(0; 1)"])
def test_domain_errors_at_construction(text):
    with pytest.raises((DomainError, ParseError)):
        parse(text)


def test_eval_examples():
    assert eval_at(Chirp(1, 1, "sin"), 2 / math.pi) == pytest.approx(2 / math.pi, rel=1e-15)
    assert eval_at(Chirp(-3, 1, "sin"), 0.0) == 0.0
    assert eval_at(Power(-0.5), 0.0) is None


def test_differentiate_examples():
    assert differentiate(Const(5)) == Const(0.0)
    d = differentiate(Chirp(0, 1, "cos"))
    xs = np.array([0.3, 0.7, 1.9])
    assert np.allclose(evaluate(d, xs), np.sin(1 / xs) / xs**2, rtol=1e-13)
    g = parse("chirp(alpha=-1,beta=1,cos)")
    expect = -np.cos(1 / xs) / xs**2 + np.sin(1 / xs) / xs**3
    assert np.allclose(evaluate(differentiate(g), xs), expect, rtol=1e-12)


@pytest.mark.parametrize("e", [StepSeq("n"), Indicator(0, 1)])
def test_differentiate_unsupported(e):
    with pytest.raises(DomainError):
        differentiate(e)


def test_singular_points_examples():
    assert singular_points(Chirp(-3, 1, "sin", a=0.5), 0, 1) == [0.5]
    e = Sum((Chirp(-3, 1, "sin"), Indicator(0.2, 0.8)))
    assert singular_points(e, 0, 1) == [0.0, 0.2, 0.8]
    assert singular_points(Smooth("sin", (0.0, 1.0)), 0, 1) == []


def test_step_sequence_values_on_cells():
    e = parse("step(cn=(-1)^n*n*(n+1))")
    # x in [1/(n+1), 1/n) carries c_n
    assert evaluate(e, np.array([0.75]))[0] == -2.0
    assert evaluate(e, np.array([0.4]))[0] == 6.0
    assert evaluate(e, np.array([1.5]))[0] == 0.0


def test_periodic_repeats_its_base():
    e = parse("periodic(2; poly(0,1))")
    xs = np.array([0.25, 2.25, -1.75])
    assert np.allclose(evaluate(e, xs), 0.25)


# ---------------------------------------------------------------------------
# properties

nums = st.floats(-3, 3, allow_nan=False).map(lambda v: round(v, 3))
alphas = st.floats(-4, 2).map(lambda v: round(v, 2))
betas = st.sampled_from([0.5, 1.0, 2.0, 3.0])
sides = st.sampled_from(["both", "right", "left"])

general = st.one_of(
    st.builds(Power, alphas, nums, sides, st.booleans()),
    st.builds(Chirp, alphas, betas, st.sampled_from(["sin", "cos"]), nums, sides, st.booleans()),
    st.builds(StepSeq, st.sampled_from(["n", "(-1)^n", "(-1)^n*n*(n+1)", "1/n^2"]), nums),
)
smooth = st.one_of(
    st.builds(lambda cs: Smooth("poly", tuple(cs)), st.lists(nums, min_size=1, max_size=3)),
    st.builds(lambda k, c: Smooth(k, (0.0, c)), st.sampled_from(["sin", "cos", "exp"]), nums),
)


@st.composite
def exprs(draw):
    leaf = draw(general)
    shape = draw(st.integers(0, 4))
    if shape == 1:
        return SmoothProduct(draw(smooth), leaf)
    if shape == 2:
        lo = draw(nums)
        return Restrict(lo, lo + 1.0, leaf)
    if shape == 3:
        return Sum((leaf, draw(smooth), Const(draw(nums))))
    if shape == 4:
        return Scale(draw(nums.filter(lambda v: v != 0)), leaf)
    return leaf


@settings(max_examples=150, deadline=None)
@given(exprs())
def test_round_trip_parse_print(e):
    assert parse(to_text(e)) == e


@settings(max_examples=100, deadline=None)
@given(alphas.filter(lambda a: abs(a) <= 4), st.sampled_from([0.5, 1.0, 2.0]),
       st.sampled_from(["sin", "cos"]), st.floats(0.2, 2.0))
def test_derivative_matches_central_difference(alpha, beta, kind, x):
    e = Chirp(alpha, beta, kind)
    h = 1e-6 * (1 + abs(x))
    fd = (eval_at(e, x + h) - eval_at(e, x - h)) / (2 * h)
    d = eval_at(differentiate(e), x)
    # second-order difference error bound from the third derivative scale
    scale = max(1.0, abs(d), abs(eval_at(e, x)) / x) * x ** (-3 * beta)
    assert abs(fd - d) <= 1e-6 * max(abs(d), 1.0) + 1e-10 * scale


@settings(max_examples=50, deadline=None)
@given(exprs(), st.floats(-5, 5))
def test_eval_is_deterministic(e, x):
    a, b = eval_at(e, x), eval_at(e, x)
    assert (a is None and b is None) or a == b or (math.isnan(a) and math.isnan(b))
