"""Acceptance suite: one test per criterion, each at its stated tolerance and time budget.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary lists one
PASS/FAIL line per criterion with its runtime.
"""

import cmath
import math

import numpy as np
import pytest

import test_cesaro
import test_integrate
from distint.cesaro import CONVERGED, cesaro_sum
from distint.expr import Chirp, Const, Power, parse
from distint.fourier import cesaro_partial_sum, fourier_coeffs, recover_value
from distint.integrate import FINITE, dist_integrate
from distint.phitransform import (
    DistRep, MeasureConsistent, ViolationAt, bump, measure_verdict, phi_field, poisson, poisson_boundary,
    radial_extremes,
)
from distint.quadrature import integrate_abs
from distint.reduce import EXISTS, NOVALUE, point_value

CHIRP_EXACT = math.cos(1) - math.sin(1)


def abel_oracle(eps=(4e-3, 2e-3, 1e-3)):
    """int_1^inf t sin t e^{-eps t} dt in closed form, Richardson-extrapolated to eps = 0.

    The damped integral is Im[e^{-z} (1/z + 1/z^2)] with z = eps - i; it is
    smooth in eps, so two Richardson steps on a halving sequence remove the
    O(eps) and O(eps^2) terms.
    """
    v = [(cmath.exp(-z) * (1 / z + 1 / z**2)).imag for z in (e - 1j for e in eps)]
    r1 = [2 * v[1] - v[0], 2 * v[2] - v[1]]
    return (4 * r1[1] - r1[0]) / 3


def test_criterion_1_step_series(criterion):
    with criterion(1, "step series (-1)^n n(n+1) integrates to -0.5", 5):
        r = dist_integrate(parse("step(cn=(-1)^n*n*(n+1))"), 0, 1)
        assert r.status == FINITE
        assert abs(r.value + 0.5) <= 1e-4
        assert r.trace[0].strategy == "series"
        terms = int(r.trace[0].diagnostics.split("terms=")[1])
        assert terms <= 10**6


def test_criterion_2_chirp_dual_oracle(criterion):
    with criterion(2, "x^-3 sin(1/x) on [0,1] = cos 1 - sin 1 (reduce, Abel, Hake)", 10):
        oracle = abel_oracle()
        assert abs(oracle - CHIRP_EXACT) <= 1e-5
        r = dist_integrate(Chirp(-3, 1, "sin"), 0, 1)
        assert r.status == FINITE and r.trace[0].strategy == "reduce"
        assert abs(r.value - CHIRP_EXACT) <= 1e-6
        assert abs(r.value - oracle) <= 1e-5
        h = dist_integrate(Chirp(-3, 1, "sin"), 0, 1, force="hake")
        assert h.status == FINITE and h.trace[0].strategy == "hake"
        assert abs(h.value - CHIRP_EXACT) <= 1e-5


def test_criterion_3_point_values(criterion):
    with criterion(3, "chirp point values exist and vanish; Heaviside has none", 30):
        for alpha in (-0.5, -1.5, -3.0):
            p = point_value(Chirp(alpha, 1, "sin", signed=True), 0.0)
            assert p.status == EXISTS and abs(p.value) <= 1e-4
        h = point_value(parse("indicator(0,1)"), 0.0)
        assert h.status == NOVALUE
        assert abs(h.laterals[0]) <= 1e-8 and abs(h.laterals[1] - 1.0) <= 1e-8


def classical_fixtures(n=50, seed=20261019):
    """Random absolutely integrable integrands: polynomials, x^-1/2, Gaussians and bounded chirps."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        kind = ("poly", "root", "gauss", "chirp")[i % 4]
        lo = float(np.round(rng.uniform(-2, 0), 3))
        hi = float(np.round(lo + rng.uniform(0.5, 3), 3))
        if kind == "poly":
            text = "poly(" + ",".join(f"{c:.3f}" for c in rng.uniform(-2, 2, rng.integers(1, 5))) + ")"
        elif kind == "root":
            c = float(np.round(rng.uniform(lo, hi), 3))
            text = f"{rng.uniform(0.5, 2):.3f}*pow(alpha=-0.5,a={c})*exp({rng.uniform(-1, 1):.3f}*x)"
        elif kind == "gauss":
            text = f"exp(-x^2)*poly({rng.uniform(-1, 1):.3f},{rng.uniform(-1, 1):.3f})"
        else:
            c = float(np.round(rng.uniform(lo, hi), 3))
            alpha = float(np.round(rng.uniform(0, 2), 2))
            text = (f"chirp(alpha={alpha},beta={(0.5, 1.0, 2.0)[i % 3]},{('sin', 'cos')[i % 2]},a={c})"
                    f"*cos({rng.uniform(0, 2):.3f}*x)")
        out.append((text, lo, hi))
    return out


def test_criterion_4_classical_agreement(criterion):
    with criterion(4, "50 absolutely integrable fixtures agree with quadrature to 1e-9 rel", 30):
        fx = classical_fixtures()
        assert len(fx) == 50
        for text, lo, hi in fx:
            e = parse(text)
            exact = integrate_abs(e, lo, hi).value
            got = dist_integrate(e, lo, hi)
            assert got.status == FINITE, text
            assert abs(got.value - exact) <= 1e-9 * abs(exact), (text, lo, hi)


def test_criterion_5_identity_suites(criterion):
    ti = test_integrate
    with criterion(5, "linearity, additivity, by-parts, substitutions, MVT, convergence theorems", 60):
        ti.test_linearity()
        ti.test_additivity_at_random_split()
        assert len(ti.PARTS_FIXTURES) == 20
        for case in ti.PARTS_FIXTURES:
            ti.test_integration_by_parts_residual(*case)
        ti.test_power_substitution()
        for g in (0.5, 3.0):
            ti.test_power_substitution_other_exponents(g)
        ti.test_inverse_substitution_matches_improper_integral()
        for case in ti.MVT_CASES:
            ti.test_mean_value_residuals(*case)
        ti.test_mean_value_hypotheses_are_checked()
        ti.test_bounded_convergence()
        ti.test_monotone_convergence()
        ti.test_fatou_inequality()


def test_criterion_6_cesaro_engine(criterion):
    tc = test_cesaro
    with criterion(6, "Cesaro regularity, (-1)^n, (-1)^n n against Abel, consistency", 10):
        tc.test_regularity()
        r = cesaro_sum("(-1)^n", k=1, N=100_000)
        assert r.status == CONVERGED and abs(r.value + 0.5) <= 1e-4
        n = np.arange(1, 200_001, dtype=float)
        abel = tc.abel_sum((-1.0) ** n * n)
        assert abs(abel + 0.25) <= 1e-3
        r = cesaro_sum("(-1)^n*n", k=2, N=100_000)
        assert r.status == CONVERGED and abs(r.value - abel) <= 1e-3
        tc.test_consistency_k_to_k_plus_one()


def test_criterion_7_phi_transform(criterion):
    with criterion(7, "phi-transform normalization, measure verdicts, Poisson boundary values", 30):
        for k in (poisson(), bump(1.0)):
            f = phi_field(DistRep(Const(2.5)), k, np.linspace(-2, 2, 5), [1.0, 0.1, 1e-3])
            assert np.max(np.abs(f.values - 2.5)) <= 1e-10
        delta = DistRep(None, ((1.0, 0, 0.0),))
        assert isinstance(measure_verdict(delta, poisson(), (-1.0, 1.0)), MeasureConsistent)
        neg = DistRep(None, ((-1.0, 0, 0.0),))
        assert isinstance(measure_verdict(neg, poisson(), (-1.0, 1.0)), ViolationAt)
        assert radial_extremes(neg, poisson(), 0.0)[1] == -math.inf
        neg_d1 = DistRep(None, ((-1.0, 1, 0.0),))
        assert isinstance(measure_verdict(neg_d1, bump(1.0, 0.5), (-1.0, 1.0)), ViolationAt)
        box = poisson_boundary(parse("indicator(-1,1)"), 0.3)
        assert box.status == EXISTS and abs(box.value - 1.0) <= 1e-3
        sgn = poisson_boundary(parse("pow(alpha=0,signed=true)"), 0.0)
        assert sgn.status == EXISTS and abs(sgn.value) <= 1e-6


def test_criterion_8_fourier(criterion):
    with criterion(8, "sawtooth coefficients, recovery at pi/2, midpoint and no value at the jump", 60):
        fd = fourier_coeffs(parse("periodic(2*pi; poly(1.5707963267948966,-0.5))"), 10_000)
        n = np.arange(1, 10_001)
        assert np.max(np.abs(fd.values[fd.n_max + 1:] - 1 / (2j * n))) <= 1e-8
        assert np.max(np.abs(fd.values[:fd.n_max][::-1] + 1 / (2j * n))) <= 1e-8
        r = cesaro_partial_sum(fd, math.pi / 2, k=1, a=1.0)
        assert r.status == CONVERGED and r.order_k == 1 and abs(r.value - math.pi / 4) <= 1e-3
        p = recover_value(fd, math.pi / 2)
        assert p.status == EXISTS and abs(p.value - math.pi / 4) <= 1e-3
        sym = cesaro_partial_sum(fd, 0.0, k=1, a=1.0)
        assert abs(sym.value) <= 1e-3
        assert recover_value(fd, 0.0).status == NOVALUE
