import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from poa_lab import latency as L
from poa_lab.latency import Custom, LatencyError, Polynomial

coeff = st.floats(min_value=0.0, max_value=5.0, allow_nan=False)
point = st.floats(min_value=0.0, max_value=50.0, allow_nan=False)


def test_polynomial_eval_and_integral():
    f = Polynomial([1.0, 2.0, 3.0])
    assert f.eval(2.0) == pytest.approx(1 + 4 + 12)
    assert f.integral(2.0) == pytest.approx(2 + 4 + 8)
    assert f.degree == 2
    assert L.evaluate(f, 2.0) == f(2.0)


def test_monomial_and_linear():
    assert L.monomial(3).eval(2.0) == 8.0
    assert L.linear().eval(5.0) == 5.0
    assert Polynomial.monomial(0).is_constant


def test_polynomial_rejects_negative_coefficients():
    with pytest.raises(LatencyError):
        Polynomial([1.0, -1.0])


def test_negative_argument_rejected():
    with pytest.raises(LatencyError):
        L.linear().eval(-1.0)


def test_polynomial_is_immutable():
    f = Polynomial([1.0])
    with pytest.raises(AttributeError):
        f.coeffs = (2.0,)


def test_marginal_matches_definition():
    f = Polynomial([0.0, 1.0])
    assert L.marginal(f, 2.0, 1.0) == pytest.approx(3 * 3 - 2 * 2)
    with pytest.raises(LatencyError):
        f.marginal(1.0, 0.0)


def test_scaling_polynomial():
    f = Polynomial([1.0, 1.0, 1.0])
    assert L.scale_ordinate(f, 3.0).eval(2.0) == pytest.approx(3 * f.eval(2.0))
    assert L.scale_abscissa(f, 3.0).eval(2.0) == pytest.approx(f.eval(6.0))
    with pytest.raises(LatencyError):
        f.scale_ordinate(0.0)


def test_semi_convex_examples():
    grid = np.arange(0, 10.05, 0.1)
    for d in range(5):
        assert L.is_semi_convex(Polynomial.monomial(d), grid)
    assert Polynomial([1, 1, 1]).is_semi_convex(grid)
    saturating = Custom(lambda x: 1 - math.exp(-x))
    assert not saturating.is_semi_convex(grid)
    assert Custom(math.sqrt).is_semi_convex(grid)


def test_semi_convex_grid_validation():
    with pytest.raises(LatencyError):
        L.linear().is_semi_convex([0.0, 1.0])
    with pytest.raises(LatencyError):
        L.linear().is_semi_convex([0.0, 2.0, 1.0])


def test_custom_probe_rejects_decreasing_and_nonpositive():
    with pytest.raises(LatencyError):
        Custom(lambda x: 1 / math.sqrt(1 + x))
    with pytest.raises(LatencyError):
        Custom(lambda x: -1.0)


def test_custom_integral_by_quadrature_and_scaling():
    f = Custom(math.exp)
    assert f.integral(1.0) == pytest.approx(math.e - 1, rel=1e-9)
    g = f.scale_abscissa(2.0)
    assert g.integral(1.0) == pytest.approx((math.exp(2) - 1) / 2, rel=1e-9)
    assert f.scale_ordinate(2.0).eval(1.0) == pytest.approx(2 * math.e)


def test_json_round_trip():
    f = Polynomial([0.5, 0.0, 2.0])
    assert L.from_json(f.to_json()) == f
    c = L.register_custom("exp-test", math.exp)
    assert L.from_json(c.to_json()) is c
    with pytest.raises(LatencyError):
        Custom(math.exp).to_json()
    with pytest.raises(LatencyError):
        L.from_json({"kind": "spline"})


@given(st.lists(coeff, min_size=1, max_size=4), point, st.floats(min_value=0.01, max_value=5.0))
@settings(max_examples=100, deadline=None)
def test_supergradient_property(coeffs, k, w):
    assume(any(c > 0 for c in coeffs))
    f = Polynomial(coeffs)
    assert f.marginal(k, w) >= w * f.eval(k) - 1e-9 * (1 + abs(w * f.eval(k)))


@given(st.lists(coeff, min_size=1, max_size=4), point, st.floats(min_value=0.1, max_value=10.0))
@settings(max_examples=100, deadline=None)
def test_abscissa_scaling_identity(coeffs, x, a):
    assume(any(c > 0 for c in coeffs))
    f = Polynomial(coeffs)
    assert f.scale_abscissa(a).eval(x) == pytest.approx(f.eval(a * x), rel=1e-9, abs=1e-12)


@given(st.lists(coeff, min_size=1, max_size=4), point)
@settings(max_examples=60, deadline=None)
def test_integral_agrees_with_quadrature(coeffs, k):
    assume(any(c > 0 for c in coeffs))
    f = Polynomial(coeffs)
    g = Custom(lambda t: f.eval(t) + 1e-12, _probe=False)
    assert f.integral(k) == pytest.approx(g.integral(k), rel=1e-7, abs=1e-8)
