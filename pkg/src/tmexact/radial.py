"""Radial profiles piecewise linear in log-radius, and the three functionals.

A profile is phi(r) with t = log r; between knots phi is linear in t.  In
these coordinates

    ||grad phi||^2 = 2 pi  int phi_t^2 dt,        ||phi||^2 = 2 pi int phi^2 e^{2t} dt,

so the Dirichlet energy is an exact finite sum and the mass of each interval
is a polynomial times an exponential, integrated in closed form.  All norms
here are on the whole plane (the 2 pi is included).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, logsumexp

from .errors import InfiniteMass, InvalidProfile, NotMonotone, ProfileOverflow, ZeroProfile
from .growth import GSpec
from .quadrature import integrate_log

TWO_PI = 2.0 * math.pi
LOG_TWO_PI = math.log(TWO_PI)
LOG_PI = math.log(math.pi)
_MAX_LOG_FLOAT = 709.0

LEFT_MODES = ("constant", "zero")
RIGHT_MODES = ("zero", "constant")


@dataclass(frozen=True, eq=False)
class RadialProfile:
    knots: np.ndarray
    values: np.ndarray
    left: str = "constant"
    right: str = "zero"

    def __post_init__(self):
        t = np.array(self.knots, dtype=float)
        v = np.array(self.values, dtype=float)
        if t.ndim != 1 or t.size < 2 or v.shape != t.shape:
            raise InvalidProfile("need matching 1-D knots/values with at least two entries")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise InvalidProfile("knots and values must be finite")
        if np.any(np.diff(t) <= 0):
            raise InvalidProfile("knots must be strictly increasing")
        if self.left not in LEFT_MODES:
            raise InvalidProfile(f"left extension must be one of {LEFT_MODES}")
        if self.right not in RIGHT_MODES:
            raise InvalidProfile(f"right extension must be one of {RIGHT_MODES}")
        if self.right == "zero" and v[-1] != 0.0:
            raise InvalidProfile("zero right extension requires the last value to be 0")
        if self.left == "zero" and v[0] != 0.0:
            raise InvalidProfile("zero left extension requires the first value to be 0")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "knots", t)
        object.__setattr__(self, "values", v)

    def __eq__(self, other):
        if not isinstance(other, RadialProfile):
            return NotImplemented
        return (self.left == other.left and self.right == other.right
                and np.array_equal(self.knots, other.knots)
                and np.array_equal(self.values, other.values))

    def __repr__(self):
        return (f"RadialProfile(n_knots={self.knots.size}, t=[{self.knots[0]:.4g}, "
                f"{self.knots[-1]:.4g}], max|phi|={np.abs(self.values).max():.4g})")

    @classmethod
    def from_radii(cls, radii, values, left="constant", right="zero"):
        return cls(np.log(np.asarray(radii, dtype=float)), values, left, right)

    @property
    def radii(self) -> np.ndarray:
        return np.exp(self.knots)

    @property
    def amplitude(self) -> float:
        return float(np.abs(self.values).max())

    def at_log(self, t):
        """phi at log-radius ``t`` (vectorized)."""
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.knots, self.values)
        if self.left == "zero":
            out = np.where(t < self.knots[0], 0.0, out)
        if self.right == "zero":
            out = np.where(t > self.knots[-1], 0.0, out)
        return out

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return self.at_log(np.log(r))

    # -- transformations -------------------------------------------------
    def dilated(self, s: float) -> "RadialProfile":
        """The profile x -> phi(x / s)."""
        if s <= 0:
            raise ValueError("dilation factor must be positive")
        return RadialProfile(self.knots + math.log(s), self.values, self.left, self.right)

    def scaled(self, c: float) -> "RadialProfile":
        """The profile c * phi."""
        return RadialProfile(self.knots, c * self.values, self.left, self.right)

    def refined(self, new_knots) -> "RadialProfile":
        """Insert knots (values interpolated); the function is unchanged."""
        extra = np.asarray(new_knots, dtype=float).ravel()
        t = np.union1d(self.knots, extra[np.isfinite(extra)])
        return RadialProfile(t, self.at_log(t), self.left, self.right)

    def is_nonincreasing(self) -> bool:
        return bool(np.all(np.diff(self.values) <= 0.0) and self.values[-1] >= 0.0)

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {"knots": self.knots.tolist(), "values": self.values.tolist(),
                "left": self.left, "right": self.right}

    @classmethod
    def from_dict(cls, d: dict) -> "RadialProfile":
        return cls(d["knots"], d["values"], d.get("left", "constant"), d.get("right", "zero"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "RadialProfile":
        return cls.from_dict(json.loads(s))


def _clip_segments(p: RadialProfile, t_lo=-np.inf, t_hi=np.inf):
    """Segments (ta, tb, phi_a, phi_b) of the knot range intersected with [t_lo, t_hi]."""
    ta = np.maximum(p.knots[:-1], t_lo)
    tb = np.minimum(p.knots[1:], t_hi)
    keep = tb > ta
    ta, tb = ta[keep], tb[keep]
    return ta, tb, p.at_log(ta), p.at_log(tb)


# -- energy ---------------------------------------------------------------

def dirichlet_energy(p: RadialProfile) -> float:
    """||grad phi||^2_{L^2(R^2)}, exact for the representation."""
    return energy_between(p)


def energy_between(p: RadialProfile, t_lo=-np.inf, t_hi=np.inf) -> float:
    """Dirichlet energy of the annulus e^{t_lo} < r < e^{t_hi}."""
    ta, tb, fa, fb = _clip_segments(p, t_lo, t_hi)
    if ta.size == 0:
        return 0.0
    return float(TWO_PI * np.sum((fb - fa) ** 2 / (tb - ta)))


# -- mass -----------------------------------------------------------------

def _segment_mass_log_scale(ta, tb, fa, fb):
    """int_{ta}^{tb} phi^2 e^{2t} dt = e^{2 tb} * I, returned as I (vectorized).

    Measured from the right end w = tb - t:  phi = fb + D w / L,
    I = fb^2 J0 + 2 fb D J1/L + D^2 J2/L^2 with J_k = int_0^L w^k e^{-2w} dw,
    written through the regularized incomplete gamma so small L is accurate.
    """
    L = tb - ta
    x = 2.0 * L
    D = fa - fb
    j0 = 0.5 * gammainc(1.0, x)
    # P(k, x) ~ x^k / k! for tiny x; dividing by L^2 there would underflow
    small = x < 1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        j1_over_L = np.where(small, 0.5 * L * (1.0 - 2.0 * x / 3.0), gammainc(2.0, x) / (4.0 * L))
        j2_over_L2 = np.where(small, L / 3.0 * (1.0 - 0.75 * x), gammainc(3.0, x) / (4.0 * L * L))
    return fb * fb * j0 + 2.0 * fb * D * j1_over_L + D * D * j2_over_L2


def mass(p: RadialProfile) -> float:
    """||phi||^2_{L^2(R^2)} in closed form."""
    return mass_between(p)


def mass_between(p: RadialProfile, t_lo=-np.inf, t_hi=np.inf) -> float:
    """int_{e^{t_lo} < |x| < e^{t_hi}} phi^2 dx."""
    t0, tn = p.knots[0], p.knots[-1]
    total = 0.0
    if t_hi > tn and p.right == "constant" and p.values[-1] != 0.0:
        raise InfiniteMass("profile does not vanish at infinity")
    if t_lo < t0 and p.left == "constant":
        top = min(t0, t_hi)
        if top > t_lo:
            area = math.pi * math.exp(2.0 * top) * (-math.expm1(2.0 * (t_lo - top)) if np.isfinite(t_lo) else 1.0)
            total += area * p.values[0] ** 2
    ta, tb, fa, fb = _clip_segments(p, t_lo, t_hi)
    if ta.size:
        total += float(TWO_PI * np.sum(np.exp(2.0 * tb) * _segment_mass_log_scale(ta, tb, fa, fb)))
    return total


# -- the nonlinear functional ---------------------------------------------

def _initial_pieces(ta, tb, fa, fb, exp_coef, max_per_segment=4096):
    """Split each segment so the exponent a*phi^2 moves by <= 0.5 and t by <= 0.5."""
    los, his = [], []
    for a, b, u, v in zip(ta, tb, fa, fb):
        n_t = math.ceil((b - a) / 0.5)
        n_e = math.ceil(exp_coef * abs(u * u - v * v) / 0.5) if exp_coef > 0 else 1
        n = int(min(max(n_t, n_e, 1), max_per_segment))
        edges = np.linspace(a, b, n + 1)
        if n_e > 1 and n_e >= n_t and u != v:
            # equal steps in phi^2 on each monotone branch of |phi|
            s = np.linspace(0.0, 1.0, n + 1)
            if u * v >= 0:
                sq = np.sqrt(u * u + s * (v * v - u * u)) * np.sign(u + v)
                edges = a + (sq - u) / (v - u) * (b - a)
            edges[0], edges[-1] = a, b
            edges = np.maximum.accumulate(edges)
        # geometric refinement toward both ends, where a log-convex integrand
        # puts its mass
        w = b - a
        off = w * np.geomspace(1e-12, 0.25, 48)
        off = off[off > 1e-3]
        edges = np.unique(np.concatenate([edges, a + off, b - off]))
        los.append(edges[:-1])
        his.append(edges[1:])
    if not los:
        return np.empty(0), np.empty(0)
    return np.concatenate(los), np.concatenate(his)


def _split_at_level(ta, tb, fa, fb, level):
    """Keep the parts of each segment where |phi| >= level (exact crossings)."""
    out = []
    for a, b, u, v in zip(ta, tb, fa, fb):
        cuts = [a, b]
        for c in (level, -level):
            if (u - c) * (v - c) < 0:
                cuts.append(a + (c - u) / (v - u) * (b - a))
        cuts = sorted(cuts)
        for x, y in zip(cuts[:-1], cuts[1:]):
            if y <= x:
                continue
            m = 0.5 * (x + y)
            phi_m = u + (m - a) / (b - a) * (v - u)
            if abs(phi_m) >= level:
                out.append((x, y, u + (x - a) / (b - a) * (v - u), u + (y - a) / (b - a) * (v - u)))
    if not out:
        e = np.empty(0)
        return e, e, e, e
    arr = np.array(out)
    return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]


def log_integral(p: RadialProfile, log_g, exp_coef=0.0, t_lo=-np.inf, t_hi=np.inf,
                 min_abs=None, rtol=1e-10) -> float:
    """log of int g(phi(x)) dx over e^{t_lo} < |x| < e^{t_hi} (and |phi| >= min_abs).

    ``log_g`` is any vectorized log-growth function with log_g(0) = -inf unless
    the region is bounded.
    """
    t0, tn = p.knots[0], p.knots[-1]
    parts = []

    def lg_scalar(u):
        return float(np.asarray(log_g(np.array([u], dtype=float)))[0])

    def admitted(u):
        return min_abs is None or abs(u) >= min_abs

    # r > last knot
    if t_hi > tn:
        u_tail = p.values[-1] if p.right == "constant" else 0.0
        if admitted(u_tail) and lg_scalar(u_tail) > -np.inf:
            if not np.isfinite(t_hi):
                raise InfiniteMass("g does not vanish on the unbounded outer tail")
            bottom = max(tn, t_lo)
            log_area = LOG_PI + 2.0 * t_hi + math.log(-math.expm1(2.0 * (bottom - t_hi)))
            parts.append(log_area + lg_scalar(u_tail))
    # r < first knot
    if t_lo < t0:
        u_core = p.values[0] if p.left == "constant" else 0.0
        top = min(t0, t_hi)
        if top > t_lo and admitted(u_core):
            log_area = LOG_PI + 2.0 * top
            if np.isfinite(t_lo):
                log_area += math.log(-math.expm1(2.0 * (t_lo - top)))
            parts.append(log_area + lg_scalar(u_core))

    ta, tb, fa, fb = _clip_segments(p, t_lo, t_hi)
    if min_abs is not None and ta.size:
        ta, tb, fa, fb = _split_at_level(ta, tb, fa, fb, min_abs)
    if ta.size:
        lo, hi = _initial_pieces(ta, tb, fa, fb, exp_coef)

        def log_f(t):
            return LOG_TWO_PI + 2.0 * t + log_g(p.at_log(t))

        val, _ = integrate_log(log_f, lo, hi, rtol=rtol)
        parts.append(val)
    if not parts:
        return -np.inf
    out = float(logsumexp(parts))
    if np.isnan(out) or out == np.inf:
        raise ProfileOverflow("log-domain accumulation exceeded the representable range")
    return out


def log_g_functional(p: RadialProfile, g: GSpec, **kw) -> float:
    """log G(phi) = log int g(phi(x)) dx, safe for any amplitude."""
    return log_integral(p, g.log_g, g.exp_coef, **kw)


def g_functional(p: RadialProfile, g: GSpec, **kw) -> float:
    """G(phi) = int_{R^2} g(phi(x)) dx.

    Raises ProfileOverflow when the value itself is not representable; use
    ``log_g_functional`` for such profiles.
    """
    lv = log_g_functional(p, g, **kw)
    if lv > _MAX_LOG_FLOAT:
        raise ProfileOverflow(f"G(phi) = exp({lv:.6g}) is not representable; use log_g_functional")
    return float(math.exp(lv))


# -- pointwise decay and the optimal replacement -------------------------

def pointwise_radial_bound(p: RadialProfile, r: float) -> float:
    """|phi(r)|^2 r / (||phi||_2 ||phi_r||_2), bounded by the radial Sobolev inequality."""
    m = mass(p)
    e = dirichlet_energy(p)
    if m == 0.0 or e == 0.0:
        raise ZeroProfile("profile is identically zero")
    v = float(p(r))
    return v * v * r / math.sqrt(m * e)


def log_linear_replacement(p: RadialProfile, t_lo: float, t_hi: float) -> RadialProfile:
    """Replace phi on [t_lo, t_hi] by the log-linear interpolant of its end values.

    By Cauchy-Schwarz this never increases the Dirichlet energy of the interval.
    """
    if not t_hi > t_lo:
        raise ValueError("need t_lo < t_hi")
    q = p.refined([t_lo, t_hi])
    keep = (q.knots <= t_lo) | (q.knots >= t_hi)
    return RadialProfile(q.knots[keep], q.values[keep], q.left, q.right)


def require_nonincreasing(p: RadialProfile) -> None:
    if not p.is_nonincreasing():
        raise NotMonotone("profile must be nonnegative and nonincreasing in r")


def normalized(p: RadialProfile, energy: float) -> RadialProfile:
    """Amplitude-rescale so that the Dirichlet energy equals ``energy``."""
    e = dirichlet_energy(p)
    if e == 0.0:
        raise ZeroProfile("cannot normalize a constant profile")
    return p.scaled(math.sqrt(energy / e))
