import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tmexact.errors import (EnergyBudgetExceeded, Infeasible, NotMonotone, ZeroBoundaryValue)
from tmexact.extremal import (DiscreteSequence, boundary_drop_check, brute_force_mu_d,
                              constant_sequence_bound, mu_d_asymptotic_ratio, near_extremizer,
                              radial_tm_check, radial_tm_survey, rebuild_profile,
                              reduce_profile_to_sequence, reduction_report, solutions_to_csv,
                              solve_mu_d, solve_mu_lattice)
from tmexact.radial import TWO_PI, RadialProfile, energy_between
from tmexact.sampling import random_tail_family


def test_norms_exact():
    s = DiscreteSequence([0.5, 0.5, 0.5, 0.5])
    assert s.l1 == 2.0 and s.l2 == 1.0
    assert s.e_norm ** 2 == pytest.approx(0.25 * sum(math.exp(2 * n) for n in range(4)), rel=1e-14)
    assert np.array_equal(s.heights(), [2.0, 1.5, 1.0, 0.5, 0.0])


def test_constant_candidate_upper_bound():
    assert 0.25 * (1 + math.e ** 2 + math.e ** 4 + math.e ** 6) == pytest.approx(116.604, abs=5e-4)
    for N in (3, 5, 10):
        sol = solve_mu_d(2.0, N)
        assert sol.objective ** 2 <= 116.604


def test_equality_case_is_exact():
    sol = solve_mu_d(2.0, 3)
    assert np.array_equal(sol.sequence.a, np.full(4, 0.5))
    assert sol.active_ball


def test_infeasible():
    with pytest.raises(Infeasible):
        solve_mu_d(2.5, 3)
    with pytest.raises(ValueError):
        solve_mu_d(-1.0, 3)


def test_kkt_invariants():
    for h, N in [(1.2, 2), (1.7, 4), (3.0, 30), (math.sqrt(8), 28)]:
        sol = solve_mu_d(h, N)
        assert sol.kkt_residual < 1e-9
        assert abs(sol.sequence.l1 - h) < 1e-9
        assert sol.sequence.l2 <= 1 + 1e-12
        assert np.all(sol.sequence.a >= 0)
        assert sol.multipliers[1] >= 0


def test_brute_force_small():
    for h, N in [(1.2, 2), (1.05, 1), (1.5, 3), (1.7, 4)]:
        kkt = solve_mu_d(h, N).objective
        bf = brute_force_mu_d(h, N, step=1e-3)
        assert abs(kkt - bf) <= 1e-3 * max(1.0, kkt)
        assert kkt <= bf + 1e-12


def test_unconstrained_branch():
    # h <= 1 with the ball inactive: optimum puts weight proportional to e^{-2n}
    sol = solve_mu_d(0.5, 4)
    assert not sol.active_ball
    w = np.exp(-2.0 * np.arange(5))
    assert np.allclose(sol.sequence.a, 0.5 * w / w.sum(), rtol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3.3), st.floats(0.1, 3.3))
def test_mu_d_monotone(h1, h2):
    lo, hi = sorted((h1, h2))
    N = 12
    assert solve_mu_d(lo, N).objective <= solve_mu_d(hi, N).objective * (1 + 1e-12)


def test_asymptotic_band():
    rows = mu_d_asymptotic_ratio(range(2, 13))
    r = np.array([v for _, v in rows])
    assert r.min() > 0 and r.max() / r.min() <= 10.0
    for n, v in rows:
        assert v <= constant_sequence_bound(n) * (1 + 1e-12)


def test_moving_mass_out_raises_objective():
    n = 5
    sol = solve_mu_d(math.sqrt(n), n + 20)
    a = sol.sequence.a.copy()
    eps = 1e-3 * a[0]
    a[0] -= eps
    a[n + 5] += eps
    assert DiscreteSequence(a).e_norm > sol.objective


def test_csv_and_json():
    sol = solve_mu_d(1.2, 2)
    assert solutions_to_csv([sol]).splitlines()[0] == "h,N,objective,active_ball,kkt_residual"
    assert '"lambda_ball"' in sol.to_json()


# -- lattice and reduction ----------------------------------------------------------

def test_lattice_comparable_to_discrete():
    for n in (2, 4, 6):
        h = math.sqrt(n)
        lat = solve_mu_lattice(h, n + 10)
        dis = solve_mu_d(h, n + 10)
        assert np.all(lat.sequence.a >= 0)
        assert 0.1 <= lat.objective / dis.objective <= 10.0


def test_log_cap_reduces_to_constant_sequence():
    p = RadialProfile([0.0, 4.0], [2.0, 0.0])
    a = reduce_profile_to_sequence(p).a
    assert np.allclose(a, 0.5, rtol=1e-14)


def test_reduction_on_random_tails():
    for p in random_tail_family(11, 30):
        rep = reduction_report(p)
        s = rep.sequence
        assert s.l2 ** 2 <= rep.energy_tail / TWO_PI + 1e-12
        assert s.l1 == pytest.approx(float(p.at_log(0.0)), rel=1e-12)
        assert rep.rebuilt_energy_tail <= rep.energy_tail * (1 + 1e-12)
        assert 0.05 <= rep.mass_ratio <= 20.0
        assert rep.boundary_drop <= rep.boundary_drop_bound + 1e-15


def test_rebuild_round_trip():
    s = DiscreteSequence([0.3, 0.2, 0.1])
    assert np.allclose(reduce_profile_to_sequence(rebuild_profile(s)).a, s.a, rtol=1e-14)


def test_reduction_rejects_increasing():
    p = RadialProfile([0.0, 1.0, 2.0], [1.0, 1.5, 0.0])
    with pytest.raises(NotMonotone):
        reduce_profile_to_sequence(p)


def test_boundary_drop_at_most_half():
    p = near_extremizer(3.0)
    drop, bound = boundary_drop_check(p)
    assert drop <= bound <= 0.5 + 1e-15


# -- radial exponential bound ---------------------------------------------------------

def test_radial_tm_errors():
    with pytest.raises(ZeroBoundaryValue):
        radial_tm_check(RadialProfile([0.0, 1.0], [0.9, 0.0]), 1.0, 1.0)
    with pytest.raises(EnergyBudgetExceeded):
        radial_tm_check(RadialProfile([0.0, 1.0], [3.0, 0.0]), 1.0, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.1, 4.0), st.floats(1e-3, 1e3), st.floats(0.3, 3.0))
def test_radial_tm_scaling_invariance(h, s, K):
    p = near_extremizer(h * math.sqrt(K), K, 1.0)
    a = radial_tm_check(p, 1.0, K)
    b = radial_tm_check(p.dilated(s), s, K)
    assert b == pytest.approx(a, rel=1e-10)


def test_near_extremizer_energy():
    p = near_extremizer(2.0, 0.7, 3.0)
    assert energy_between(p, math.log(3.0)) == pytest.approx(TWO_PI * 0.7, rel=1e-14)


def test_sweep_within_factor_four_of_family_max():
    s = radial_tm_survey(1, n_samples=200)
    assert np.isfinite(s.max_ratio)
    assert np.all(s.sweep_ratios >= s.max_ratio / 4.0)
    assert s.random_max <= s.max_ratio
