"""Seeded random families of admissible radial profiles."""

from __future__ import annotations

import math

import numpy as np

from .radial import TWO_PI, RadialProfile, energy_between, normalized

KNOT_RANGE = (3, 40)
LOG_RADIUS_RANGE = (-12.0, 6.0)


def random_decreasing_profile(rng: np.random.Generator, energy: float = TWO_PI,
                              knot_range=KNOT_RANGE, t_range=LOG_RADIUS_RANGE) -> RadialProfile:
    """Nonnegative nonincreasing profile with random knots, scaled to ``energy``.

    Knot count uniform on ``knot_range``, log-radii uniform on ``t_range``,
    values from a decreasing random walk ending at 0.
    """
    n = int(rng.integers(knot_range[0], knot_range[1] + 1))
    while True:
        t = np.sort(rng.uniform(t_range[0], t_range[1], n))
        if np.all(np.diff(t) > 1e-9):
            break
    steps = rng.exponential(1.0, n - 1)
    # occasional flat stretches keep plateaus in the family
    steps[rng.random(n - 1) < 0.15] = 0.0
    if steps.sum() == 0.0:
        steps[-1] = 1.0
    values = np.concatenate([np.cumsum(steps[::-1])[::-1], [0.0]])
    return normalized(RadialProfile(t, values, "constant", "zero"), energy)


def random_family(seed: int, n: int, energy: float = TWO_PI, **kw) -> list:
    rng = np.random.default_rng(seed)
    return [random_decreasing_profile(rng, energy, **kw) for _ in range(n)]


def random_tail_profile(rng: np.random.Generator, K: float = 1.0, R: float = 1.0,
                        max_tries: int = 1000) -> RadialProfile:
    """Random decreasing profile with phi(R)^2 > K and tail energy 2 pi K s, s in [0.5, 1].

    Knots beyond R only (the profile is constant inside R), log-length of the
    support uniform in [1, 6] times the minimal length phi(R)^2 / K.
    """
    t0 = math.log(R)
    for _ in range(max_tries):
        n = int(rng.integers(2, 25))
        frac = rng.uniform(0.5, 1.0)
        h2 = K * rng.uniform(1.1, 30.0)
        length = h2 / (K * frac) * rng.uniform(1.0, 6.0)
        inner = np.sort(rng.uniform(0.0, length, n - 1))
        t = np.concatenate([[0.0], inner, [length]])
        if np.any(np.diff(t) <= 1e-9):
            continue
        steps = rng.exponential(1.0, n)
        values = np.concatenate([np.cumsum(steps[::-1])[::-1], [0.0]])
        p = RadialProfile(t0 + t, values)
        e = energy_between(p, t0)
        p = p.scaled(math.sqrt(TWO_PI * K * frac / e))
        if p.values[0] ** 2 > K:
            return p
    raise RuntimeError("could not draw an admissible tail profile")


def random_tail_family(seed: int, n: int, K: float = 1.0, R: float = 1.0) -> list:
    rng = np.random.default_rng(seed)
    return [random_tail_profile(rng, K, R) for _ in range(n)]


def near_extremal_profile(rng: np.random.Generator, energy: float = TWO_PI,
                          alpha_range=(0.5, 12.0), glue_prob: float = 0.5) -> RadialProfile:
    """Normalized Moser-type cap, optionally glued to a mass-carrying tail.

    The cap drops log-linearly over depth alpha (log-uniform on
    ``alpha_range``); a glued tail keeps a fraction eps of the height out to
    log-radius T before vanishing.
    """
    alpha = math.exp(rng.uniform(math.log(alpha_range[0]), math.log(alpha_range[1])))
    if rng.random() < glue_prob:
        eps = rng.uniform(0.02, 0.3)
        T = rng.uniform(1.0, 6.0)
        p = RadialProfile([-alpha, 0.0, T], [1.0, eps, 0.0])
    else:
        p = RadialProfile([-alpha, 0.0], [1.0, 0.0])
    return normalized(p, energy)


def certificate_family(seed: int, n: int, near_fraction: float = 0.3,
                       energy: float = TWO_PI) -> list:
    """Seeded mixture of random decreasing profiles and near-extremal caps."""
    rng = np.random.default_rng(seed)
    n_near = int(round(near_fraction * n))
    out = [random_decreasing_profile(rng, energy) for _ in range(n - n_near)]
    out += [near_extremal_profile(rng, energy) for _ in range(n_near)]
    return out
