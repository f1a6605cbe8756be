import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distint.expr import Chirp, Const, Smooth, differentiate, eval_at, evaluate, parse
from distint.reduce import EXISTS, INCONCLUSIVE, NOVALUE, chirp_reduce, lateral_value, point_value

XS = np.linspace(1e-3, 1.0, 1000)


def test_already_integrable_chirp_is_a_no_op():
    r = chirp_reduce(Chirp(0, 1, "sin"))
    assert r.steps == 0 and r.G == Const(0.0)
    assert np.allclose(evaluate(r.h, XS), np.sin(1 / XS), rtol=0, atol=1e-15)


def test_one_step_reduction_closed_form():
    r = chirp_reduce(Chirp(-1.5, 1, "sin"))
    assert r.steps == 1
    assert np.allclose(evaluate(r.G, XS), XS**0.5 * np.cos(1 / XS), atol=1e-14)
    assert np.allclose(evaluate(r.h, XS), -0.5 * XS**-0.5 * np.cos(1 / XS), atol=1e-12)


def test_two_step_reduction_reproduces_the_closed_form_integral():
    r = chirp_reduce(Chirp(-3, 1, "sin"))
    assert r.steps == 2
    # G(1) - G(0) plus the (absolutely convergent) h integral is cos 1 - sin 1
    assert eval_at(r.G, 0.0) == 0.0
    from distint.quadrature import integrate_abs

    total = eval_at(r.G, 1.0) + integrate_abs(r.h, 0.0, 1.0).value
    assert total == pytest.approx(math.cos(1) - math.sin(1), abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.floats(-4, 2), st.sampled_from([0.5, 1.0, 2.0]), st.sampled_from(["sin", "cos"]))
def test_reduction_identity(alpha, beta, kind):
    f = Chirp(alpha, beta, kind)
    r = chirp_reduce(f)
    xs = np.concatenate([XS, -XS])
    resid = evaluate(f, xs) - evaluate(differentiate(r.G), xs) - evaluate(r.h, xs)
    # local scale: size of the largest term appearing at x
    scale = np.abs(xs) ** (alpha - (r.steps + 1) * beta) + np.abs(xs) ** alpha + 1.0
    assert np.max(np.abs(resid) / scale) <= 1e-8


@settings(max_examples=100, deadline=None)
@given(st.floats(-4, 2), st.sampled_from([0.5, 1.0, 2.0]))
def test_primitive_vanishes_at_the_center(alpha, beta):
    assert eval_at(chirp_reduce(Chirp(alpha, beta, "sin")).G, 0.0) == 0.0


# ---------------------------------------------------------------------------
# point values


@pytest.mark.parametrize("alpha", [-0.5, -1.5, -3.0])
def test_chirp_family_has_value_zero_at_center(alpha):
    p = point_value(Chirp(alpha, 1, "sin"), 0.0)
    assert p.status == EXISTS and abs(p.value) <= 1e-4


@pytest.mark.parametrize("alpha", [-0.5, -1.5])
def test_numeric_path_confirms_chirp_value(alpha):
    p = point_value(Chirp(alpha, 1, "sin"), 0.0, closed_form=False)
    assert p.status == EXISTS and abs(p.value) <= 1e-4


def test_numeric_path_is_honest_for_the_strongest_singularity():
    p = point_value(Chirp(-3, 1, "sin"), 0.0, closed_form=False)
    assert p.status in (EXISTS, INCONCLUSIVE)
    if p.status == EXISTS:
        assert abs(p.value) <= 1e-4


def test_heaviside_has_no_value():
    p = point_value(parse("indicator(0,1)"), 0.0)
    assert p.status == NOVALUE
    assert p.laterals == pytest.approx((0.0, 1.0), abs=1e-8)


def test_laterals_of_indicator():
    e = parse("indicator(0,1)")
    assert lateral_value(e, 0.0, "right").value == pytest.approx(1.0, abs=1e-8)
    assert lateral_value(e, 0.0, "left").value == pytest.approx(0.0, abs=1e-8)


def test_smooth_point_value():
    p = point_value(Smooth("sin", (0.0, 1.0)), math.pi / 2)
    assert (p.status, p.order_n) == (EXISTS, 0)
    assert p.value == pytest.approx(1.0, abs=1e-15)


def test_step_lateral_against_window_averages():
    # oracle: (1/h) int_0^h f at h = 1/n from the cell structure
    n = np.arange(1, 2_000_001, dtype=float)
    cells = (-1.0) ** n * (1 / n - 1 / (n + 1))
    tails = np.cumsum(cells[::-1])[::-1]
    oracle = [tails[m - 1] * m for m in (1000, 10_000, 100_000)]
    assert max(abs(v) for v in oracle) <= 1e-3  # window averages tend to 0
    p = lateral_value(parse("step(cn=(-1)^n)"), 0.0, "right")
    assert p.status == EXISTS
    assert abs(p.value) <= 1e-6


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(["sin(x)", "exp(-x^2)", "poly(1,2,3)", "cos(3*x)", "2"]), st.floats(-3, 3))
def test_point_value_agrees_with_evaluation_on_smooth(text, x):
    e = parse(text)
    p = point_value(e, x)
    assert p.status == EXISTS and p.order_n == 0
    assert p.value == pytest.approx(eval_at(e, x), abs=1e-10)


@pytest.mark.parametrize("text,x0", [("pow(alpha=0.5)", 0.0), ("chirp(alpha=1,beta=1,sin)", 0.0),
                                     ("indicator(0,1)", 0.5)])
def test_point_value_equals_agreeing_laterals(text, x0):
    e = parse(text)
    p = point_value(e, x0)
    lo, hi = lateral_value(e, x0, "left"), lateral_value(e, x0, "right")
    assert lo.status == hi.status == EXISTS and abs(lo.value - hi.value) <= 1e-6
    assert p.status == EXISTS and p.value == pytest.approx(lo.value, abs=1e-6)
