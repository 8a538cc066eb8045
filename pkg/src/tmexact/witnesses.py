"""Sharpness witnesses: plateau sequences, Moser functions and log caps.

Each witness is a :class:`RadialProfile`; the sequence generators return
:class:`WitnessReport` rows carrying norms, the value of G and the elementary
lower bound for G coming from the central plateau alone.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import RegimeMismatch
from .growth import GSpec, tail_at_infinity, tail_at_zero
from .radial import (LOG_PI, RadialProfile, dirichlet_energy, log_g_functional, mass)

REGIMES = ("compactness_fail", "boundedness_fail")


@dataclass(frozen=True)
class WitnessParams:
    family: str  # plateau | moser | log_cap | rescaled
    values: dict = field(default_factory=dict)


@dataclass
class WitnessReport:
    params: WitnessParams
    k: int
    energy: float
    mass: float
    g_lower_bound: float
    g_value: float
    ratio: float
    budget: float = math.inf
    c_k: float = math.nan
    log_g_value: float = math.nan
    profile: Optional[RadialProfile] = field(default=None, repr=False)

    def row(self) -> dict:
        return {"family": self.params.family, "k": self.k, "energy": self.energy,
                "mass": self.mass, "g_value": self.g_value, "ratio": self.ratio}


CSV_COLUMNS = ("family", "k", "energy", "mass", "g_value", "ratio")


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.row().items()})
    return buf.getvalue()


# -- single witnesses -------------------------------------------------------

def make_plateau(a: float, R: float) -> RadialProfile:
    """Height ``a`` on |x| < R, dropping to 0 across R < |x| < R + 1.

    The ramp is log-linear (the class is closed under that choice); its
    energy is 2 pi a^2 / log(1 + 1/R) = 2 pi a^2 (R + 1/2 + O(1/R)).
    """
    if not (a > 0 and R > 1):
        raise ValueError("plateau needs a > 0 and R > 1")
    return RadialProfile([math.log(R), math.log(R + 1.0)], [a, 0.0])


def make_moser(alpha: float) -> RadialProfile:
    """f_alpha = sqrt(alpha / 2pi) L(-log|x| / alpha); gradient norm exactly 1."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return RadialProfile([-alpha, 0.0], [math.sqrt(alpha / (2.0 * math.pi)), 0.0])


def moser_mass(alpha: float) -> float:
    e = math.exp(-2.0 * alpha)
    return (1.0 - e) / (4.0 * alpha) - 0.5 * e


def make_log_cap(b: float, K_k: float = None, log_radius: float = None) -> RadialProfile:
    """psi = b on r < R_k, b |log r| / |log R_k| on R_k <= r < 1, 0 beyond.

    R_k = exp(-b^2 / K_k); pass ``log_radius`` = log R_k directly when it is
    known more accurately than through K_k.  Energy 2 pi K_k.
    """
    if b <= 0:
        raise ValueError("b must be positive")
    if log_radius is None:
        if K_k is None or K_k <= 0:
            raise ValueError("need K_k > 0 or log_radius")
        log_radius = -b * b / K_k
    if log_radius >= 0:
        raise ValueError("log cap radius must be below 1")
    return RadialProfile([log_radius, 0.0], [b, 0.0])


def make_rescaled(b: float, K_k: float, S: float) -> RadialProfile:
    return make_log_cap(b, K_k).dilated(S)


# -- sequences for the large-amplitude condition --------------------------------

def default_b_schedule(k: int) -> float:
    return math.exp(k)


def default_log_radius(k: int, b: float, K: float) -> float:
    """log R_k with 2 b^2 (1/K_k - 1/K) = 1/(k+1), so K_k increases to K."""
    return -(b * b / K + 0.5 / (k + 1))


def make_concentration_sequence(K: float, g: GSpec, n_terms: int, regime: str,
                                b_schedule: Callable[[int], float] = None,
                                K_schedule: Callable[[int], float] = None,
                                check_regime: bool = True,
                                k_start: int = 1) -> list[WitnessReport]:
    """Rescaled log caps phi_k = psi_k(x / S_k) for k = k_start .. k_start+n_terms-1.

    ``compactness_fail`` takes S_k = b_k; ``boundedness_fail`` takes
    S_k = b_k c_k^{-1/4}, so S_k = o(b_k) and S_k^2 c_k / b_k^2 = c_k^{1/2}.
    """
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}")
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    if check_regime:
        tail = tail_at_infinity(g, K)
        if regime == "boundedness_fail" and tail.verdict != "infinite":
            raise RegimeMismatch(
                f"limsup exp(-2u^2/K) u^2 g(u) looks finite (slope {tail.slope:.3g}); "
                "no blow-up witness exists")
        if regime == "compactness_fail" and tail.verdict == "zero":
            raise RegimeMismatch("limsup exp(-2u^2/K) u^2 g(u) looks like 0; condition (3) holds")
    b_schedule = b_schedule or default_b_schedule
    reports = []
    for k in range(k_start, k_start + n_terms):
        b = float(b_schedule(k))
        if K_schedule is None:
            log_R = default_log_radius(k, b, K)
        else:
            log_R = -b * b / float(K_schedule(k))
        K_k = -b * b / log_R
        log_gb = float(g.log_g(np.array([b]))[0])
        log_c = 2.0 * log_R + 2.0 * math.log(b) + log_gb
        if regime == "compactness_fail":
            log_S = math.log(b)
        else:
            log_S = math.log(b) - 0.25 * max(log_c, 0.0)
        S = math.exp(log_S)
        psi = make_log_cap(b, log_radius=log_R)
        phi = psi.dilated(S)
        energy = dirichlet_energy(phi)
        m = mass(phi)
        log_G = log_g_functional(phi, g)
        log_lower = LOG_PI + 2.0 * (log_S + log_R) + log_gb
        reports.append(WitnessReport(
            params=WitnessParams("rescaled", {"b": b, "K_k": K_k, "S": S, "log_R": log_R}),
            k=k, energy=energy, mass=m,
            g_lower_bound=_safe_exp(log_lower), g_value=_safe_exp(log_G),
            ratio=_safe_exp(log_G - math.log(m)), budget=2.0 * math.pi * K,
            c_k=_safe_exp(log_c), log_g_value=log_G, profile=phi))
    return reports


def _safe_exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


# -- sequences for the small-amplitude condition ------------------------------

def plateau_sequence(g: GSpec, n_terms: int, regime: str) -> list[WitnessReport]:
    """Plateau witnesses for a failure of the condition at u -> 0.

    boundedness_fail: g(a_n) >= n a_n^2, R_n = a_n^{-1/2} + a_n^{-1} n^{-1/4},
    giving mass -> 0 and G -> oo.  compactness_fail: g(a_n) >= delta a_n^2,
    R_n = 1/a_n, giving G >= delta pi while a_n^2 R_n -> 0.
    """
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}")
    tail = tail_at_zero(g)
    if regime == "boundedness_fail" and tail.verdict != "infinite":
        raise RegimeMismatch("limsup u^-2 g(u) at 0 looks finite")
    if regime == "compactness_fail" and tail.verdict == "zero":
        raise RegimeMismatch("u^-2 g(u) -> 0 at 0; condition (3) holds there")
    delta = None if regime == "boundedness_fail" else 0.5 * tail.limsup
    grid = np.logspace(-1.0, -100.0, 4000)
    log_q = g.log_g(grid) - 2.0 * np.log(grid)
    reports = []
    a_prev = 1.0
    for n in range(1, n_terms + 1):
        need = math.log(n) if delta is None else math.log(delta)
        ok = (grid < 0.5 * a_prev) & (log_q >= need)
        if not ok.any():
            raise RegimeMismatch(f"no amplitude with g(a) >= {math.exp(need):.3g} a^2 on the grid")
        a = float(grid[np.argmax(ok)])
        if delta is None:
            R = a ** -0.5 + n ** -0.25 / a
        else:
            R = 1.0 / a
        phi = make_plateau(a, R)
        m = mass(phi)
        log_G = log_g_functional(phi, g)
        lower = math.pi * R * R * float(g.g(np.array([a]))[0])
        reports.append(WitnessReport(
            params=WitnessParams("plateau", {"a": a, "R": R}), k=n,
            energy=dirichlet_energy(phi), mass=m, g_lower_bound=lower,
            g_value=_safe_exp(log_G), ratio=_safe_exp(log_G - math.log(m)),
            log_g_value=log_G, profile=phi))
        a_prev = a
    return reports


def pointwise_values(reports, radii=(0.1, 1.0, 10.0)) -> np.ndarray:
    """phi_k(r) for each report (rows) and radius (columns)."""
    return np.array([[float(r.profile(x)) for x in radii] for r in reports])
