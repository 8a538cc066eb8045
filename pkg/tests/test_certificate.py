import json
import math

import numpy as np
import pytest

from tmexact import GSpec
from tmexact.certificate import (build_certificate, empirical_red_sum_constant, explicit_delta,
                                 red_sum_ratios, subcritical_tail_ratio, tail_split_radius,
                                 truncation_split)
from tmexact.errors import NotMonotone, NotNormalized
from tmexact.radial import TWO_PI, RadialProfile, energy_between, normalized
from tmexact.sampling import certificate_family, random_family
from tmexact.witnesses import make_moser


@pytest.mark.parametrize("alpha", [1.0, 4.0, 20.0])
def test_moser_certificate_passes(alpha):
    c = build_certificate(normalized(make_moser(alpha), TWO_PI))
    assert c.passed, [ch.name for ch in c.failed()]
    assert c.N >= 1
    assert np.all(np.diff(c.Kj) >= 0)
    assert np.all(c.hj <= c.Hj + 1e-12)
    assert np.all(np.diff(c.log_etaj) <= 1e-12)


def test_split_radius_exact():
    p = normalized(make_moser(6.0), TWO_PI)
    t0 = tail_split_radius(p, 0.9)
    assert energy_between(p, t0) / TWO_PI == pytest.approx(0.9, rel=1e-13)


def test_not_normalized():
    with pytest.raises(NotNormalized):
        build_certificate(make_moser(2.0))


def test_other_preconditions():
    with pytest.raises(ValueError):
        build_certificate(normalized(make_moser(2.0), TWO_PI), kappa=0.5)
    with pytest.raises(NotMonotone):
        build_certificate(normalized(RadialProfile([0.0, 1.0, 2.0], [1.0, 2.0, 0.0]), TWO_PI))


def test_plateau_gives_young_slack_K():
    p = normalized(RadialProfile([-12.0, -6.0, 0.0], [3.0, 3.0, 0.0]), TWO_PI)
    c = build_certificate(p)
    assert c.passed
    flat = [j for j in range(1, c.N + 1) if c.aj[j] == 0.0]
    assert flat
    young = {ch.name: ch for ch in c.checks}
    for j in flat:
        assert young[f"young[{j}]"].slack == pytest.approx(c.Kj[j], rel=1e-12)


def test_family_all_pass_and_delta_margin():
    for p in certificate_family(3, 40):
        c = build_certificate(p)
        assert c.passed, [ch.name for ch in c.failed()]
        assert c.delta + c.kappa - 1.0 >= c.delta / 2.0
        if c.B:
            assert c.delta_obs + c.kappa - 1.0 > 0


def test_explicit_delta():
    assert explicit_delta(0.9) == pytest.approx((1 - 1 / 2.7) ** 2 * 0.9, rel=1e-15)


def test_red_sum_constant_positive_and_deterministic():
    fam = certificate_family(1, 30)
    r1 = red_sum_ratios(fam)
    r2 = red_sum_ratios(certificate_family(1, 30))
    assert np.all(r1 > 0) and np.array_equal(r1, r2)
    assert empirical_red_sum_constant(fam) == r1.max()


def test_tent_ratio_positive():
    r = np.linspace(0.01, 1.0, 200)
    p = normalized(RadialProfile.from_radii(r, np.maximum(0.0, 1.0 - r)), TWO_PI)
    assert build_certificate(p).red_sum_constant > 0


def test_subcritical_tail_finite():
    g = GSpec.theorem_form(1.0)
    for p in random_family(4, 10):
        v = subcritical_tail_ratio(p, g)
        assert np.isfinite(v) and v > 0


def test_truncation_split():
    g = GSpec.exp_minus_one(1.0)
    fam = random_family(9, 10)
    s = truncation_split(fam, g, 0.05)
    assert np.isfinite(s.L) and np.isfinite(s.log_R)
    assert np.all(s.level_fraction <= 0.05) and np.all(s.radius_fraction <= 0.05)


def test_outputs():
    c = build_certificate(normalized(make_moser(3.0), TWO_PI))
    d = json.loads(c.to_json())
    assert d["passed"] is True and d["N"] == c.N
    txt = c.to_text()
    assert f"{len(c.checks)}/{len(c.checks)} checks passed" in txt
    assert math.isfinite(d["red_sum_constant"])
