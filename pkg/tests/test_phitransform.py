import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distint.expr import Const, eval_at, parse
from distint.phitransform import (
    DistRep, MeasureConsistent, ViolationAt, bump, field_value, measure_verdict, phi_field, poisson,
    poisson_boundary, radial_extremes,
)
from distint.reduce import EXISTS

GRID_X = np.linspace(-2, 2, 5)
GRID_T = np.array([1.0, 0.1, 1e-3])


@pytest.mark.parametrize("kernel", [poisson(), bump(1.0), bump(0.5, 0.3)])
def test_constant_field_is_exact(kernel):
    f = phi_field(DistRep(Const(3.0)), kernel, GRID_X, GRID_T)
    assert np.all(f.status == "Finite")
    assert np.max(np.abs(f.values - 3.0)) <= 1e-10


def test_delta_field_closed_form():
    x, t = 0.3, 0.2
    v, _ = field_value(DistRep(None, ((1.0, 0, 0.0),)), poisson(), x, t)
    # <delta(x + t y), phi(y)> = phi(-x/t)/t for the Poisson kernel
    assert v == pytest.approx(1 / (math.pi * (1 + (x / t) ** 2)) / t, rel=1e-12)


def test_kernel_classes():
    for k in (poisson(), bump(1.0), bump(0.5, 0.3)):
        assert k.in_T0 and k.in_T1 and k.normalized


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-1, 1), st.floats(0.01, 1))
def test_linearity_in_the_distribution(a, b, x, t):
    k = bump(1.0)
    d1 = DistRep(parse("indicator(0,1)"), ((1.0, 1, 0.2),))
    d2 = DistRep(parse("chirp(alpha=-3,beta=1,sin)"), ((2.0, 0, -0.1),))
    combo = DistRep(parse(f"{a}*indicator(0,1) + {b}*chirp(alpha=-3,beta=1,sin)"),
                    ((a, 1, 0.2), (2.0 * b, 0, -0.1)))
    v1, v2, vc = (field_value(d, k, x, t)[0] for d in (d1, d2, combo))
    assert abs(vc - (a * v1 + b * v2)) <= 1e-9 * max(1.0, abs(vc), abs(a * v1), abs(b * v2))


@pytest.mark.parametrize("m", [0, 1, 2])
def test_atom_derivative_formula(m):
    # the x-derivative of the field of d is the field of d'
    k = bump(1.0)
    t, h = 0.5, 1e-5
    for x in (-0.3, 0.1, 0.4):
        lo = field_value(DistRep(None, ((1.0, m, 0.0),)), k, x - h, t)[0]
        hi = field_value(DistRep(None, ((1.0, m, 0.0),)), k, x + h, t)[0]
        nxt = field_value(DistRep(None, ((1.0, m + 1, 0.0),)), k, x, t)[0]
        assert (hi - lo) / (2 * h) == pytest.approx(nxt, abs=1e-5 * max(1.0, abs(nxt)))


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["sin(x)", "exp(-x^2)", "poly(1,2,3)"]), st.floats(-2, 2))
def test_radial_convergence_at_continuity_points(text, w):
    e = parse(text)
    d = DistRep(e)
    k = bump(1.0)
    errs = [abs(field_value(d, k, w, t)[0] - eval_at(e, w)) for t in (1e-2, 5e-3)]
    # even kernel: the error is O(t^2), in particular halving t at least halves it
    assert errs[1] <= 0.5 * errs[0] + 1e-12
    assert errs[0] <= 1e-2


def test_radial_extremes_examples():
    upper, lower = radial_extremes(DistRep(parse("indicator(0,1)")), poisson(), 0.0)
    assert upper == pytest.approx(0.5, abs=1e-6) and lower == pytest.approx(0.5, abs=1e-6)
    upper, lower = radial_extremes(DistRep(None, ((1.0, 0, 0.0),)), poisson(), 0.0)
    assert upper == math.inf and lower > 0


def test_delta_is_measure_consistent():
    v = measure_verdict(DistRep(None, ((1.0, 0, 0.0),)), poisson(), (-1.0, 1.0))
    assert isinstance(v, MeasureConsistent)


def test_negative_delta_violates():
    v = measure_verdict(DistRep(None, ((-1.0, 0, 0.0),)), poisson(), (-1.0, 1.0))
    assert isinstance(v, ViolationAt) and v.value < 0 and abs(v.x) <= 1e-6


def test_negative_delta_derivative_violates():
    v = measure_verdict(DistRep(None, ((-1.0, 1, 0.0),)), bump(1.0, 0.5), (-1.0, 1.0))
    assert isinstance(v, ViolationAt) and v.value < 0


def test_poisson_boundary_of_box():
    p = poisson_boundary(parse("indicator(-1,1)"), 0.3)
    assert p.status == EXISTS and p.value == pytest.approx(1.0, abs=1e-3)


def test_poisson_boundary_of_sign_at_zero():
    p = poisson_boundary(parse("pow(alpha=0,signed=true)"), 0.0)
    assert p.status == EXISTS and abs(p.value) <= 1e-6


def test_poisson_boundary_of_chirp_matches_point_values():
    e = parse("chirp(alpha=0,beta=1,sin)")
    assert abs(poisson_boundary(e, 0.0).value) <= 1e-3
    assert poisson_boundary(e, 0.2).value == pytest.approx(math.sin(5.0), abs=1e-3)


def test_csv_and_json_exports():
    f = phi_field(DistRep(Const(1.0)), poisson(), [0.0], [1.0, 0.5])
    assert f.to_csv().splitlines()[0] == "x,t,F,status"
    assert '"kernel"' in f.to_json()
