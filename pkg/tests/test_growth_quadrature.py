import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from tmexact import GSpec
from tmexact.errors import ConditionFailed
from tmexact.growth import (log_expm1, require_boundedness, satisfies_boundedness,
                            satisfies_compactness, tail_at_infinity, tail_at_zero)
from tmexact.quadrature import integrate, integrate_log


def test_log_expm1_matches_direct():
    x = np.array([1e-12, 1e-3, 0.5, 10.0, 29.0, 31.0, 700.0])
    direct = np.log(np.expm1(x))
    assert np.allclose(log_expm1(x), direct, rtol=1e-13, atol=0)
    assert np.isfinite(log_expm1(np.array([5000.0]))[0])


def test_gspec_values():
    u = np.array([0.3, 1.0, 2.5])
    g = GSpec.exact_growth(1.0, 2.0)
    assert np.allclose(g.g(u), np.expm1(2 * u * u) / (1 + u) ** 2, rtol=1e-13)
    g = GSpec.theorem_form(0.8)
    assert np.allclose(g.g(u), np.minimum(u ** 2, u ** -2.0) * np.exp(2 * u * u / 0.8), rtol=1e-13)
    g = GSpec.exp_minus_one(3.0)
    assert np.allclose(g.g(-u), np.expm1(3 * u * u), rtol=1e-13)


def test_overflow_is_guarded():
    g = GSpec.exp_minus_one(4 * math.pi)
    assert g.g(np.array([40.0]))[0] == np.inf
    assert np.isfinite(g.log_g(np.array([40.0]))[0])


def test_constructor_validation():
    with pytest.raises(ValueError):
        GSpec.exact_growth(-1.0)
    with pytest.raises(ValueError):
        GSpec.exp_minus_one(0.0)
    with pytest.raises(ValueError):
        GSpec.custom([1.0, 0.5], [0.0, 0.0])


def test_custom_table_interpolates_power_laws():
    u = np.geomspace(1e-3, 10, 20)
    g = GSpec.custom(u, 3.0 * np.log(u))
    x = np.array([2e-4, 0.01, 0.7, 5.0])
    assert np.allclose(g.g(x), x ** 3, rtol=1e-12)


def test_truncated_freezes_above_level():
    g = GSpec.exp_minus_one(1.0).truncated(2.0)
    assert g.g(np.array([3.0]))[0] == pytest.approx(math.expm1(4.0))
    assert g.g(np.array([1.0]))[0] == pytest.approx(math.expm1(1.0))


def test_tail_classification():
    K = 1.0
    assert tail_at_infinity(GSpec.exact_growth(K, 2.0), K).verdict == "finite"
    assert tail_at_infinity(GSpec.exact_growth(K, 1.5), K).verdict == "infinite"
    assert tail_at_infinity(GSpec.exact_growth(K, 3.0), K).verdict == "zero"
    assert tail_at_infinity(GSpec.theorem_form(K), K).verdict == "finite"
    assert tail_at_zero(GSpec.exp_minus_one(1.0)).verdict == "finite"
    assert satisfies_boundedness(GSpec.theorem_form(K), K)
    assert not satisfies_compactness(GSpec.theorem_form(K), K)
    # g(u)/u^2 -> 2 at the origin, so compactness fails there even with a small tail
    assert not satisfies_compactness(GSpec.exact_growth(K, 3.0), K)
    def log_quartic(u):
        x = u * u
        lx = log_expm1(x)
        big = lx + np.log1p(-x * np.exp(-lx))
        return np.where(x < 1e-2, np.log(0.5 * x * x * (1 + x / 3 + x * x / 12)), big)
    quartic_at_zero = GSpec.from_function(log_quartic)
    assert tail_at_zero(quartic_at_zero).verdict == "zero"
    assert satisfies_compactness(quartic_at_zero, K)
    with pytest.raises(ConditionFailed):
        require_boundedness(GSpec.exact_growth(K, 1.0), K)


def test_larger_budget_breaks_boundedness():
    g = GSpec.theorem_form(1.0)
    assert not satisfies_boundedness(g, 1.1)
    assert tail_at_infinity(g, 0.9).verdict == "zero"


# -- quadrature -------------------------------------------------------------------

@pytest.mark.parametrize("f,a,b", [
    (np.sin, 0.0, math.pi),
    (lambda x: np.exp(-x * x), -3.0, 2.0),
    (lambda x: 1.0 / (1.0 + x * x), -10.0, 10.0),
    (lambda x: np.sqrt(np.abs(x)), 0.0, 2.0),
])
def test_integrate_matches_scipy(f, a, b):
    ref, _ = quad(f, a, b, epsabs=0, epsrel=1e-13, limit=200)
    assert integrate(f, a, b) == pytest.approx(ref, rel=1e-10)


def test_log_domain_handles_huge_integrands():
    # int_0^1 exp(2000 t^2) dt computed in log form against the asymptotic e^{2000}/4000
    val, err = integrate_log(lambda t: 2000.0 * t * t, np.array([0.0]), np.array([1.0]))
    approx = 2000.0 - math.log(4000.0)
    assert abs(val - approx) < 2e-3


@settings(max_examples=40, deadline=None)
@given(st.floats(-50, 50), st.floats(0.1, 30.0), st.floats(-3.0, 3.0))
def test_log_integral_of_exponential(c, width, slope):
    # int exp(c + slope t) over [0, width], closed form
    val, _ = integrate_log(lambda t: c + slope * t, np.array([0.0]), np.array([width]))
    if abs(slope) < 1e-12:
        exact = c + math.log(width)
    elif slope > 0:
        exact = c + slope * width + math.log(-math.expm1(-slope * width)) - math.log(slope)
    else:
        exact = c + math.log(-math.expm1(slope * width)) - math.log(-slope)
    assert val == pytest.approx(exact, abs=1e-9 * max(1.0, abs(exact)))


def test_edge_spike_is_found():
    # mass concentrated against an endpoint where the log-integrand is -inf
    def lf(t):
        with np.errstate(divide="ignore"):
            return 2 * t * t * 40.0 + np.log(np.clip(1.0 - t, 0.0, None))
    val, _ = integrate_log(lf, np.array([0.0]), np.array([1.0]))
    ref, _ = quad(lambda t: math.exp(80 * t * t - 80) * (1 - t), 0.0, 1.0, epsabs=0, epsrel=1e-13,
                  points=[0.9, 0.99], limit=400)
    assert val == pytest.approx(math.log(ref) + 80.0, abs=1e-8)
