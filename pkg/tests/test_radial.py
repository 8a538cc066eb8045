import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from tmexact import GSpec, RadialProfile
from tmexact.errors import InfiniteMass, InvalidProfile, ProfileOverflow, ZeroProfile
from tmexact.radial import (TWO_PI, dirichlet_energy, energy_between, g_functional,
                            log_g_functional, log_linear_replacement, mass, mass_between,
                            normalized, pointwise_radial_bound)
from tmexact.witnesses import make_log_cap, make_moser, make_plateau, moser_mass

SQUARE = GSpec.custom(np.geomspace(1e-8, 1e4, 64), 2.0 * np.log(np.geomspace(1e-8, 1e4, 64)))


def mass_oracle(p, pts=()):
    """2 pi int phi(r)^2 r dr by scipy's adaptive quadrature in r."""
    brk = sorted(set(list(np.exp(p.knots)) + list(pts)))
    total = 0.0
    edges = [0.0] + brk
    for a, b in zip(edges[:-1], edges[1:]):
        v, _ = quad(lambda r: float(p(r)) ** 2 * r, a, b, epsabs=0, epsrel=1e-13, limit=500)
        total += v
    return TWO_PI * total


# -- construction --------------------------------------------------------------

def test_rejects_bad_profiles():
    with pytest.raises(InvalidProfile):
        RadialProfile([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(InvalidProfile):
        RadialProfile([0.0, 1.0], [1.0, 0.5])  # right=zero needs a final 0
    with pytest.raises(InvalidProfile):
        RadialProfile([0.0], [0.0])
    with pytest.raises(InvalidProfile):
        RadialProfile([0.0, 1.0], [np.inf, 0.0])
    with pytest.raises(InvalidProfile):
        RadialProfile([0.0, 1.0], [1.0, 0.0], left="bogus")


def test_json_round_trip_is_exact():
    rng = np.random.default_rng(3)
    t = np.sort(rng.uniform(-5, 5, 12))
    v = np.concatenate([np.sort(rng.random(11))[::-1] * math.pi, [0.0]])
    p = RadialProfile(t, v)
    q = RadialProfile.from_json(p.to_json())
    assert q == p
    assert json.loads(p.to_json())["left"] == "constant"


# -- energy ----------------------------------------------------------------------

def test_moser_energy_is_one():
    assert dirichlet_energy(make_moser(1.0)) == pytest.approx(1.0, abs=1e-12)


def test_log_cap_energy_two_pi():
    p = make_log_cap(1.0, log_radius=-1.0)
    assert dirichlet_energy(p) == pytest.approx(TWO_PI, rel=1e-14)


def test_zero_profile():
    z = RadialProfile([0.0, 1.0], [0.0, 0.0])
    assert dirichlet_energy(z) == 0.0
    assert mass(z) == 0.0
    assert g_functional(z, GSpec.theorem_form(1.0)) == 0.0
    with pytest.raises(ZeroProfile):
        pointwise_radial_bound(z, 1.0)


def test_energy_between_adds_up():
    p = make_moser(3.0)
    total = dirichlet_energy(p)
    assert energy_between(p, -np.inf, -1.3) + energy_between(p, -1.3) == pytest.approx(total, rel=1e-14)


# -- mass --------------------------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 5.0])
def test_moser_mass_closed_form(alpha):
    assert mass(make_moser(alpha)) == pytest.approx(moser_mass(alpha), rel=1e-12)


def test_moser_mass_alpha_one_value():
    assert mass(make_moser(1.0)) == pytest.approx(0.25 * (1 - math.exp(-2)) - 0.5 * math.exp(-2), rel=1e-12)
    assert moser_mass(1.0) == pytest.approx(0.148499, abs=5e-7)


def test_plateau_mass_matches_oracle():
    p = make_plateau(0.1, 10.0)
    assert mass(p) == pytest.approx(mass_oracle(p), rel=1e-10)


def test_mass_requires_decay():
    p = RadialProfile([0.0, 1.0], [2.0, 1.0], right="constant")
    with pytest.raises(InfiniteMass):
        mass(p)


def test_mass_between_splits():
    p = make_moser(2.0)
    assert mass_between(p, -np.inf, -0.7) + mass_between(p, -0.7) == pytest.approx(mass(p), rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.lists(st.floats(0.05, 3.0), min_size=1, max_size=6),
       st.lists(st.floats(0.0, 2.0), min_size=6, max_size=6))
def test_mass_matches_oracle_random(t0, gaps, drops):
    t = t0 + np.concatenate([[0.0], np.cumsum(gaps)])
    v = np.concatenate([np.cumsum(drops[:len(gaps)][::-1])[::-1], [0.0]])
    p = RadialProfile(t, v)
    assert mass(p) == pytest.approx(mass_oracle(p), rel=1e-9, abs=1e-300)


# -- scaling and refinement invariants --------------------------------------------

@st.composite
def profiles(draw, max_knots=8):
    n = draw(st.integers(2, max_knots))
    t0 = draw(st.floats(-4, 4))
    gaps = draw(st.lists(st.floats(0.05, 4.0), min_size=n - 1, max_size=n - 1))
    drops = draw(st.lists(st.floats(0.0, 3.0), min_size=n - 1, max_size=n - 1))
    if sum(drops) == 0.0:
        drops[0] = 1.0
    t = t0 + np.concatenate([[0.0], np.cumsum(gaps)])
    v = np.concatenate([np.cumsum(drops[::-1])[::-1], [0.0]])
    return RadialProfile(t, v)


@settings(max_examples=80, deadline=None)
@given(profiles(), st.floats(1e-3, 1e3))
def test_dilation_scaling(p, s):
    q = p.dilated(s)
    assert dirichlet_energy(q) == pytest.approx(dirichlet_energy(p), rel=1e-12)
    assert mass(q) == pytest.approx(s * s * mass(p), rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(profiles(), st.lists(st.floats(-10, 10), min_size=1, max_size=10))
def test_refinement_is_exact(p, extra):
    q = p.refined(extra)
    assert dirichlet_energy(q) == pytest.approx(dirichlet_energy(p), rel=1e-12)
    assert mass(q) == pytest.approx(mass(p), rel=1e-11)


@settings(max_examples=80, deadline=None)
@given(profiles(), st.floats(0, 1), st.floats(0, 1))
def test_replacement_never_raises_energy(p, a, b):
    lo, hi = sorted((a, b))
    t0, tn = p.knots[0], p.knots[-1]
    t_lo, t_hi = t0 + lo * (tn - t0), t0 + hi * (tn - t0)
    if t_hi - t_lo < 1e-6:
        return
    q = log_linear_replacement(p, t_lo, t_hi)
    assert dirichlet_energy(q) <= dirichlet_energy(p) * (1 + 1e-12)
    assert float(q.at_log(t_lo)) == pytest.approx(float(p.at_log(t_lo)), abs=1e-13)
    assert float(q.at_log(t_hi)) == pytest.approx(float(p.at_log(t_hi)), abs=1e-13)


@settings(max_examples=40, deadline=None)
@given(profiles())
def test_square_growth_gives_mass(p):
    assert g_functional(p, SQUARE) == pytest.approx(mass(p), rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(profiles(max_knots=5), st.floats(0.2, 3.0))
def test_g_functional_monotone_in_g(p, alpha):
    small = g_functional(p, GSpec.exp_minus_one(alpha))
    big = g_functional(p, GSpec.exp_minus_one(alpha * 1.5))
    assert small <= big * (1 + 1e-10)


# -- G(phi) ----------------------------------------------------------------------

def test_plateau_g_lower_bound():
    g = GSpec.exp_minus_one(1.0)
    a, R = 0.7, 5.0
    p = make_plateau(a, R)
    assert g_functional(p, g) >= math.pi * R * R * float(g.g(np.array([a]))[0])


def test_log_cap_g_lower_bound():
    g = GSpec.theorem_form(1.0)
    b, K_k = 2.0, 0.9
    p = make_log_cap(b, K_k)
    R = math.exp(-b * b / K_k)
    G = g_functional(p, g)
    assert G >= math.pi * R * R * float(g.g(np.array([b]))[0])


def test_g_functional_matches_scipy_oracle():
    g = GSpec.exp_minus_one(4.0)
    p = RadialProfile([-2.0, -0.5, 1.0], [1.3, 0.6, 0.0])

    def f(r):
        u = float(p(r))
        return math.expm1(4.0 * u * u) * r
    pts = list(np.exp(p.knots))
    v1, _ = quad(f, 0.0, pts[0], epsrel=1e-13, epsabs=0)
    v2, _ = quad(f, pts[0], pts[1], epsrel=1e-13, epsabs=0)
    v3, _ = quad(f, pts[1], pts[2], epsrel=1e-13, epsabs=0)
    assert g_functional(p, g) == pytest.approx(TWO_PI * (v1 + v2 + v3), rel=1e-10)


def test_large_amplitude_goes_log_domain():
    g = GSpec.theorem_form(1.0)
    p = make_log_cap(100.0, 1.05)  # exponent 2 b^2 (1 - 1/1.05) > 900
    lg = log_g_functional(p, g)
    assert np.isfinite(lg) and lg > 709
    with pytest.raises(ProfileOverflow):
        g_functional(p, g)


def test_log_cap_mass_near_extremal_quadrature():
    # deep caps put nearly all of G at the plateau edge; compare with the area term
    g = GSpec.theorem_form(1.0)
    for b in (3.0, 5.0, 8.0):
        p = make_log_cap(b, 0.9)
        lg = log_g_functional(p, g)
        lower = math.log(math.pi) - 2 * b * b / 0.9 + float(g.log_g(np.array([b]))[0])
        assert lg >= lower


# -- pointwise decay -------------------------------------------------------------

def test_tent_pointwise_ratio_finite():
    # max(0, 1 - r) sampled as a log-linear profile on a fine grid
    r = np.linspace(0.01, 1.0, 400)
    p = RadialProfile.from_radii(r, np.maximum(0.0, 1.0 - r))
    v = pointwise_radial_bound(p, 0.5)
    assert 0 < v < 10


def test_pointwise_bound_uniform_over_family():
    from tmexact.sampling import random_family
    from tmexact.verify import radial_decay_sweep
    sup = radial_decay_sweep(random_family(5, 40))
    assert np.isfinite(sup) and sup < 5.0


def test_moser_pointwise_finite():
    p = make_moser(2.0)
    assert np.isfinite(pointwise_radial_bound(p, math.exp(-2.0)))


def test_normalized_sets_energy():
    p = RadialProfile([0.0, 1.0, 3.0], [5.0, 1.0, 0.0])
    assert dirichlet_energy(normalized(p, 7.0)) == pytest.approx(7.0, rel=1e-14)
    with pytest.raises(ZeroProfile):
        normalized(RadialProfile([0.0, 1.0], [0.0, 0.0]), 1.0)
