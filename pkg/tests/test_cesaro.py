import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distint.cesaro import (
    CONVERGED, DIVERGED, INCONCLUSIVE, EvDisagreement, cesaro_limit_at_infinity, cesaro_means,
    cesaro_sum, local_cesaro_limit, pv_ev_evaluate,
)


def abel_sum(terms, xs=(0.99, 0.995, 0.999)):
    """Oracle: Abel means sum a_n x^n near x = 1, Richardson-extrapolated in (1 - x)."""
    n = np.arange(1, len(terms) + 1)
    vals = [float(np.sum(terms * x**n)) for x in xs]
    h = [1 - x for x in xs]
    # linear fit in h through the two closest points
    return vals[-1] - (vals[-1] - vals[-2]) * h[-1] / (h[-1] - h[-2])


def test_alternating_ones_k1():
    r = cesaro_sum("(-1)^n", k=1, N=100_000)
    assert r.status == CONVERGED
    assert r.value == pytest.approx(-0.5, abs=1e-4)


def test_inverse_squares_k0():
    r = cesaro_sum("1/n^2", k=0, N=1_000_000)
    assert r.status == CONVERGED
    assert r.value == pytest.approx(math.pi**2 / 6, abs=1e-5)


def test_alternating_linear_needs_order_two():
    assert cesaro_sum("(-1)^n*n", k=1, N=100_000).status == INCONCLUSIVE
    r = cesaro_sum("(-1)^n*n", k=2, N=100_000)
    assert r.status == CONVERGED
    oracle = abel_sum((-1.0) ** np.arange(1, 200_001) * np.arange(1, 200_001))
    assert oracle == pytest.approx(-0.25, abs=1e-3)
    assert r.value == pytest.approx(oracle, abs=1e-3)


def test_escalation_picks_lowest_order():
    r = cesaro_sum("(-1)^n*n", N=100_000)
    assert (r.order_k, r.status) == (2, CONVERGED)


def test_harmonic_diverges():
    assert cesaro_sum("1/n", N=100_000, k_max=3).status == DIVERGED


def test_means_of_constant_partial_sums():
    m = cesaro_means(np.array([3.0, 0.0, 0.0, 0.0]), 2)
    assert np.allclose(m[1:], 3.0 * np.array([1, 3, 6, 10]) / np.array([3, 6, 10, 15]))


def test_limit_at_infinity_examples():
    assert cesaro_limit_at_infinity(lambda x: 0 * x + 7.0, k=2).value == pytest.approx(7.0, abs=1e-12)
    r = cesaro_limit_at_infinity(np.sin, k=1, X=1e4)
    assert r.status == CONVERGED and abs(r.value) <= 1e-3
    r = cesaro_limit_at_infinity(lambda x: np.sin(x) + 2, k=1, X=1e4)
    assert r.value == pytest.approx(2.0, abs=1e-3)


def test_local_limit_examples():
    r = local_cesaro_limit(lambda c: c, a=0.0, b=1.0, n=0)
    assert r.status == CONVERGED and r.value == pytest.approx(1.0, abs=1e-8)
    assert local_cesaro_limit(lambda c: 1 / (1 - c), a=0.0, b=1.0).status == DIVERGED


def test_local_limit_of_oscillation_is_not_claimed_wrongly():
    # window averages shrink like 2h, so any Converged answer must be 0
    r = local_cesaro_limit(lambda c: np.sin(1 / (1 - c)), a=0.0, b=1.0, n=1)
    assert r.status in (CONVERGED, INCONCLUSIVE)
    if r.status == CONVERGED:
        assert abs(r.value) <= 1e-3


def test_pv_and_ev():
    assert pv_ev_evaluate(np.arctan, "pv", k=0).value == pytest.approx(math.pi, abs=1e-3)
    assert abs(pv_ev_evaluate(lambda x: x**2, "pv").value) <= 1e-12
    with pytest.raises(EvDisagreement):
        pv_ev_evaluate(lambda x: x, "ev")
    r = pv_ev_evaluate(lambda x: 1.5 + np.sin(x) / np.where(x == 0, 1, x), "ev", k=1, ratios=(1, 2))
    assert abs(r.value) <= 1e-3


# ---------------------------------------------------------------------------
# properties

def _series(kind, cs, r, N):
    n = np.arange(1, N + 1, dtype=float)
    c = np.array(cs)[np.arange(N) % len(cs)]
    if kind == "geometric":
        return c * r**n
    if kind == "cubic":
        return c / n**3
    return c * (-1.0) ** n / n**2.5


series = st.tuples(
    st.sampled_from(["geometric", "cubic", "alternating"]),
    st.lists(st.floats(-1, 1), min_size=1, max_size=5),
    st.floats(-0.95, 0.95),
)


@settings(max_examples=200, deadline=None)
@given(series, st.sampled_from([1, 2, 3]))
def test_regularity(data, k):
    kind, cs, r = data
    N = 20_000
    t = _series(kind, cs, r, N)
    # reference: the same series summed far past N (tails below 2e-9); numpy's
    # pairwise summation is accurate to ~1e-15 relative at this length
    exact = float(np.sum(_series(kind, cs, r, 400_000)))
    got = cesaro_sum(t, k=k, N=N)
    assert got.status == CONVERGED
    assert abs(got.value - exact) <= 1e-6


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["(-1)^n", "(-1)^n*n", "1/n^2", "(-1)^n/n", "(-1)^n*n^2"]))
def test_consistency_k_to_k_plus_one(seq):
    r = cesaro_sum(seq, N=100_000, k_max=4)
    assert r.status == CONVERGED
    up = cesaro_sum(seq, k=r.order_k + 1, N=100_000)
    assert up.status == CONVERGED
    assert abs(up.value - r.value) <= 2 * 1e-4 * max(1.0, abs(r.value))


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(alpha, beta):
    a = cesaro_sum("(-1)^n", k=1, N=50_000)
    b = cesaro_sum("1/n^2", k=1, N=50_000)
    n = np.arange(1, 50_001, dtype=float)
    combo = cesaro_sum(alpha * (-1.0) ** n + beta / n**2, k=1, N=50_000)
    assert combo.status == CONVERGED
    assert combo.value == pytest.approx(alpha * a.value + beta * b.value, abs=1e-4 * (1 + abs(alpha) + abs(beta)))


@settings(max_examples=50, deadline=None)
@given(st.floats(-2, 2), st.floats(0.2, 3), st.floats(0.5, 2.0))
def test_local_limit_reproduces_ordinary_limits(c0, c1, b):
    f = lambda c: c0 + c1 * np.cos(c) * (b - c) + np.exp(-c)
    r = local_cesaro_limit(f, a=b - 1.0, b=b, n=0, tol=1e-9)
    assert r.status == CONVERGED
    assert r.value == pytest.approx(c0 + math.exp(-b), abs=1e-8)
