"""Dyadic bookkeeping for the critical-growth bound, checked inequality by inequality.

Conventions (energy normalized to 2 pi, i.e. K = 1):

    R_j = R_0 e^{-j},  h_j = phi(R_j),  a_j^2 = int_{R_j}^{R_{j-1}} phi_r^2 r dr,
    K_j = int_{R_j}^oo phi_r^2 r dr = K_{j-1} + a_j^2,  K_0 = kappa,
    H_0 = h_0,  H_j = H_{j-1} + a_j,  xi_j = H_j^2 / K_j,
    eta_j = e^{2 H_j^2 / K_j} R_j^2 = e^{2 (xi_j - j)} R_0^2,
    M_0 = int_{R_0}^oo phi^2 r dr.

j runs inward, so K_j is nondecreasing in j.  Exponentially large quantities
are carried as logarithms; inequalities between them are compared in log form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import NoPlateau, NotMonotone, NotNormalized
from .growth import GSpec
from .radial import (LOG_TWO_PI, TWO_PI, RadialProfile, dirichlet_energy, energy_between,
                     log_g_functional, log_integral, mass, mass_between)

DEFAULT_KAPPA = 0.9
REL_TOL = 1e-10
NORMALIZATION_TOL = 1e-9
A_STEP = 8.0 / 9.0


@dataclass(frozen=True)
class Check:
    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    log_form: bool = False  # lhs/rhs are logarithms; slack = 1 - exp(lhs - rhs)

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack,
                "pass": self.passed, "log_form": self.log_form}


def _check(name, lhs, rhs) -> Check:
    slack = rhs - lhs
    return Check(name, float(lhs), float(rhs), float(slack), bool(slack >= -REL_TOL * abs(rhs)))


def _check_log(name, log_lhs, log_rhs) -> Check:
    if log_lhs == -np.inf:
        return Check(name, log_lhs, log_rhs, 1.0, True, True)
    slack = -math.expm1(log_lhs - log_rhs)
    return Check(name, float(log_lhs), float(log_rhs), float(slack), bool(slack >= -REL_TOL), True)


@dataclass
class DyadicCertificate:
    kappa: float
    R0: float
    log_R0: float
    N: int
    Rj: np.ndarray
    hj: np.ndarray
    aj: np.ndarray  # aj[0] is unused (0)
    Kj: np.ndarray
    Hj: np.ndarray
    xij: np.ndarray
    log_etaj: np.ndarray
    A: list
    B: list
    runs: list  # maximal runs (a, b) of consecutive indices in B
    zetaj: dict  # run start a -> [zeta_a, ..., zeta_b]
    M0: float
    delta: float  # explicit constant (1 - 1/(3 kappa))^2 kappa
    delta_obs: float  # min over B of a_j^2 (xi_0 + j - 1)
    total_mass: float = math.nan  # int_0^oo phi^2 r dr
    profile: RadialProfile = field(repr=False, default=None)
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def red_sum_log(self) -> float:
        """log sum_{j=0}^N e^{2 h_j^2} R_j^2 / h_j^2."""
        h = self.hj
        return float(logsumexp(2.0 * h * h + 2.0 * np.log(self.Rj) - 2.0 * np.log(h)))

    @property
    def g_sum_log(self) -> float:
        """log sum_j g(h_j) R_j^2 with g(u) = min(u^2, u^-2) e^{2u^2}.

        Same terms as the reduced sum wherever h_j >= 1.
        """
        h = self.hj
        lw = 2.0 * h * h - 2.0 * np.abs(np.log(h))
        return float(logsumexp(lw + 2.0 * np.log(self.Rj)))

    @property
    def red_sum_over_M0(self) -> float:
        """Reduced sum / M_0; bounded only while h_0 stays above 1."""
        return math.exp(self.red_sum_log - math.log(self.M0))

    @property
    def red_sum_constant(self) -> float:
        """g-weighted dyadic sum / int_0^oo phi^2 r dr."""
        return math.exp(self.g_sum_log - math.log(self.total_mass))

    def failed(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa, "R0": self.R0, "N": self.N,
            "Rj": self.Rj.tolist(), "hj": self.hj.tolist(), "aj": self.aj.tolist(),
            "Kj": self.Kj.tolist(), "Hj": self.Hj.tolist(), "xij": self.xij.tolist(),
            "log_etaj": self.log_etaj.tolist(), "A": list(self.A), "B": list(self.B),
            "runs": [list(r) for r in self.runs],
            "zetaj": {str(k): list(v) for k, v in self.zetaj.items()},
            "M0": self.M0, "delta": self.delta, "delta_obs": self.delta_obs,
            "total_mass": self.total_mass, "red_sum_over_M0": self.red_sum_over_M0,
            "red_sum_constant": self.red_sum_constant, "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "profile": self.profile.to_dict() if self.profile is not None else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_json_default)

    def to_text(self) -> str:
        lines = [f"kappa={self.kappa}  R0={self.R0:.6g}  N={self.N}  M0={self.M0:.6g}",
                 f"|A|={len(self.A)}  |B|={len(self.B)}  runs={self.runs}",
                 f"delta={self.delta:.6g}  delta_obs={self.delta_obs:.6g}",
                 f"reduced sum / M0 = {self.red_sum_over_M0:.6g}",
                 f"g-weighted sum / mass = {self.red_sum_constant:.6g}", ""]
        width = max((len(c.name) for c in self.checks), default=4)
        for c in self.checks:
            tag = "ok  " if c.passed else "FAIL"
            lines.append(f"{tag} {c.name:<{width}}  slack={c.slack: .3e}")
        lines.append("")
        lines.append(f"{sum(c.passed for c in self.checks)}/{len(self.checks)} checks passed")
        return "\n".join(lines)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(type(o))


# -- construction ----------------------------------------------------------------

def explicit_delta(kappa: float) -> float:
    """On B, a_j^2 > delta / xi_{j-1} with this delta (uses K_{j-1} >= kappa, K_j <= 1)."""
    return (1.0 - 1.0 / (3.0 * kappa)) ** 2 * kappa


def tail_split_radius(p: RadialProfile, kappa: float) -> float:
    """log R_0 with int_{R_0}^oo phi_r^2 r dr = kappa, by exact inversion.

    The tail energy is piecewise linear in t = log r; on flat stretches the
    largest admissible R_0 is returned.
    """
    t, v = p.knots, p.values
    seg = (np.diff(v) ** 2) / np.diff(t)  # energy / 2 pi of each segment
    acc = 0.0
    for i in range(seg.size - 1, -1, -1):
        if acc + seg[i] >= kappa:
            slope_sq = seg[i] / (t[i + 1] - t[i])
            return float(t[i + 1] - (kappa - acc) / slope_sq)
        acc += seg[i]
    raise NotNormalized("tail energy never reaches kappa")


def build_certificate(p: RadialProfile, kappa: float = DEFAULT_KAPPA) -> DyadicCertificate:
    """All dyadic quantities for a nonincreasing profile with energy 2 pi."""
    if not (2.0 / 3.0 < kappa < 1.0):
        raise ValueError("kappa must lie in (2/3, 1)")
    e = dirichlet_energy(p)
    if abs(e - TWO_PI) > NORMALIZATION_TOL * TWO_PI:
        raise NotNormalized(f"energy {e:.12g} differs from 2 pi")
    if not p.is_nonincreasing():
        raise NotMonotone("profile must be nonnegative and nonincreasing")
    if p.left != "constant":
        raise NoPlateau("profile must be constant near the center")
    if p.right == "constant" and p.values[-1] != 0.0:
        raise NotNormalized("profile must vanish at infinity")

    log_R0 = tail_split_radius(p, kappa)
    N = max(1, int(math.ceil(log_R0 - p.knots[0])))
    j = np.arange(N + 1, dtype=float)
    tj = log_R0 - j
    Rj = np.exp(tj)
    hj = p.at_log(tj)
    seg_e = np.array([energy_between(p, tj[k], tj[k - 1]) / TWO_PI for k in range(1, N + 1)])
    aj = np.concatenate([[0.0], np.sqrt(seg_e)])
    Kj = kappa + np.concatenate([[0.0], np.cumsum(seg_e)])
    Hj = hj[0] + np.concatenate([[0.0], np.cumsum(aj[1:])])
    xij = Hj * Hj / Kj
    log_etaj = 2.0 * xij + 2.0 * tj

    A, B = [], []
    for k in range(1, N + 1):
        if aj[k] * Hj[k - 1] <= Kj[k - 1] - Kj[k] / 3.0:
            A.append(k)
        else:
            B.append(k)
    runs = []
    for k in B:
        if runs and runs[-1][1] == k - 1:
            runs[-1][1] = k
        else:
            runs.append([k, k])
    runs = [tuple(r) for r in runs]
    zetaj = {}
    for a, b in runs:
        zetaj[a] = [float(Kj[k] * (xij[a] + k - a) - k) for k in range(a, b + 1)]
    delta_obs = min((aj[k] ** 2 * (xij[0] + k - 1) for k in B), default=math.inf)
    M0 = mass_between(p, log_R0) / TWO_PI

    cert = DyadicCertificate(
        kappa=kappa, R0=math.exp(log_R0), log_R0=log_R0, N=N, Rj=Rj, hj=hj, aj=aj, Kj=Kj,
        Hj=Hj, xij=xij, log_etaj=log_etaj, A=A, B=B, runs=runs, zetaj=zetaj, M0=M0,
        delta=explicit_delta(kappa), delta_obs=float(delta_obs), total_mass=mass(p) / TWO_PI,
        profile=p)
    cert.checks = check_chain(cert)
    return cert


# -- the checks --------------------------------------------------------------------

def check_chain(c: DyadicCertificate) -> list:
    """Every inequality of the dyadic argument, evaluated on the certificate."""
    out = []
    h, a, K, H, xi, leta = c.hj, c.aj, c.Kj, c.Hj, c.xij, c.log_etaj
    kappa, delta = c.kappa, c.delta
    out.append(_check("K_total<=1", K[-1], 1.0))
    for j in range(1, c.N + 1):
        out.append(_check(f"K_monotone[{j}]", K[j - 1], K[j]))
        out.append(_check(f"schwarz[{j}]", h[j] - h[j - 1], a[j]))
        out.append(_check(f"young[{j}]", h[j] ** 2, K[j] * h[j - 1] ** 2 / K[j - 1] + K[j]))
        out.append(_check(f"ratio_step[{j}]", h[j] ** 2 / K[j], h[j - 1] ** 2 / K[j - 1] + 1.0))
        out.append(_check(f"h_le_H[{j}]", h[j], H[j]))
        out.append(_check(f"xi_step[{j}]", xi[j], xi[j - 1] + 1.0))
        out.append(_check_log(f"eta_monotone[{j}]", leta[j], leta[j - 1]))
    for j in c.A:
        out.append(_check(f"xi_step_A[{j}]", xi[j], xi[j - 1] + A_STEP))
    for j in c.B:
        out.append(_check(f"B_lower[{j}]", delta / xi[j - 1], a[j] ** 2))

    # geometric domination over A
    A = np.array(c.A, dtype=int)
    log_geo_A = (float(logsumexp(-2.0 * np.arange(1, A.size + 1) / 9.0)) if A.size else -np.inf)
    if A.size:
        out.append(_check_log("A_geometric", float(logsumexp(leta[A])), log_geo_A + leta[0]))
        # h_j >= h_0 lets h_0^2 replace h_j^2 in the denominators
        out.append(_check_log("bound_over_A", float(logsumexp(leta[A] - 2.0 * np.log(h[A]))),
                              log_geo_A + leta[0] - 2.0 * math.log(h[0])))

    # B runs
    out.append(_check("kappa_margin", delta / 2.0, delta + kappa - 1.0))
    log_geo_B = -math.log(-math.expm1(-delta)) if delta > 0 else math.inf
    for a_, b_ in c.runs:
        z = c.zetaj[a_]
        for k in range(a_, b_ + 1):
            out.append(_check(f"xi_run[{a_}..{b_}][{k}]", xi[k], xi[a_] + k - a_))
            out.append(_check(f"zeta_dominates[{a_}..{b_}][{k}]", H[k] ** 2 - k, z[k - a_]))
        for k in range(a_ + 1, b_ + 1):
            out.append(_check(f"zeta_increment[{a_}..{b_}][{k}]", delta + kappa - 1.0,
                              z[k - a_] - z[k - a_ - 1]))
        ks = np.arange(a_, b_ + 1)
        log_lhs = float(logsumexp(2.0 * (H[ks] ** 2 - ks)))
        log_rhs = float(logsumexp(2.0 * z[-1] - delta * np.arange(b_ - a_ + 1)))
        out.append(_check_log(f"run_geometric[{a_}..{b_}]", log_lhs, log_rhs))
        out.append(_check_log(f"run_endpoint[{a_}..{b_}]", 2.0 * z[-1] + 2.0 * c.log_R0, leta[a_]))

    # the reduced sum against eta_0 / h_0^2 with the constant the chain produces
    chain = (1.0 + math.exp(log_geo_A)) * (1.0 + math.exp(log_geo_B)) if c.B else 1.0 + math.exp(log_geo_A)
    log_target = math.log(chain) + leta[0] - 2.0 * math.log(h[0])
    out.append(_check_log("red_sum", c.red_sum_log, log_target))
    out.append(_check_log("g_sum_le_red_sum", c.g_sum_log, c.red_sum_log))
    out.extend(tail_checks(c))
    return out


def tail_checks(c: DyadicCertificate) -> list:
    """The subcritical region r > R_0: Schwarz bound and the (R/r)^{2K'} comparison."""
    p = c.profile
    if p is None:
        return []
    out = []
    K0 = c.kappa
    # phi(R) = 1 crossing, if phi exceeds 2 somewhere beyond R_0
    if float(p.at_log(c.log_R0)) <= 2.0:
        return out
    t_R = _level_crossing(p, 1.0, c.log_R0)
    Kp = 0.5 * (1.0 + K0)
    ts = np.concatenate([p.knots[(p.knots > c.log_R0) & (p.knots < t_R)],
                         np.linspace(c.log_R0, t_R, 9)[:-1]])
    phi = p.at_log(ts)
    lhs = phi - 1.0
    rhs = np.sqrt(K0 * (t_R - ts))
    worst = int(np.argmax(lhs - rhs))
    out.append(_check("tail_schwarz", lhs[worst], rhs[worst]))
    lhs2 = phi ** 2 / Kp
    rhs2 = (t_R - ts) + 2.0 / (1.0 - K0)
    worst = int(np.argmax(lhs2 - rhs2))
    out.append(_check("tail_kprime", lhs2[worst], rhs2[worst]))
    # int_{R_0}^{R} e^{2 phi^2} dx  <=  e^{4K'/(1-K0)} int_{R_0}^{R} (R/r)^{2K'} dx
    log_lhs = log_integral(p, lambda u: 2.0 * u * u, 2.0, t_lo=c.log_R0, t_hi=t_R)
    s = 2.0 - 2.0 * Kp
    log_rhs = (4.0 * Kp / (1.0 - K0) + LOG_TWO_PI + 2.0 * Kp * t_R
               + s * t_R + math.log(-math.expm1(-s * (t_R - c.log_R0))) - math.log(s))
    out.append(_check_log("tail_comparison", log_lhs, log_rhs))
    return out


def _level_crossing(p: RadialProfile, level: float, t_from: float) -> float:
    """Smallest t >= t_from with phi(t) = level (phi nonincreasing)."""
    t = np.concatenate([[t_from], p.knots[p.knots > t_from]])
    v = p.at_log(t)
    i = int(np.argmax(v <= level))
    if i == 0:
        return t_from
    t0, t1, v0, v1 = t[i - 1], t[i], v[i - 1], v[i]
    return float(t0 + (v0 - level) / (v0 - v1) * (t1 - t0))


# -- family-level diagnostics -----------------------------------------------------

def red_sum_ratios(family, kappa: float = DEFAULT_KAPPA) -> np.ndarray:
    return np.array([build_certificate(p, kappa).red_sum_constant for p in family])


def empirical_red_sum_constant(family, kappa: float = DEFAULT_KAPPA) -> float:
    """max over the family of the g-weighted dyadic sum / mass."""
    r = red_sum_ratios(family, kappa)
    if r.size == 0:
        raise ValueError("empty family")
    return float(r.max())


def subcritical_tail_ratio(p: RadialProfile, g: GSpec, kappa: float = DEFAULT_KAPPA) -> float:
    """int_{r > R_0} g(phi) dx / ||phi||^2_{L^2(r > R_0)}."""
    t0 = tail_split_radius(p, kappa)
    return math.exp(log_g_functional(p, g, t_lo=t0) - math.log(mass_between(p, t0)))


@dataclass
class TruncationSplit:
    eps: float
    L: float
    log_R: float
    level_fraction: np.ndarray  # per member: int_{|phi|>L} g / mass
    radius_fraction: np.ndarray  # per member: int_{r>R} g / mass


def truncation_split(family, g: GSpec, eps: float, L_grid=None, log_R_grid=None) -> TruncationSplit:
    """Smallest grid L and R with int_{|phi|>L} g <= eps mass and int_{r>R} g <= eps mass
    for every member of the family."""
    L_grid = np.linspace(1.0, 12.0, 45) if L_grid is None else np.asarray(L_grid)
    log_R_grid = np.linspace(0.0, 20.0, 41) if log_R_grid is None else np.asarray(log_R_grid)
    masses = np.array([mass(p) for p in family])

    def level_part(p, L):
        return math.exp(log_integral(p, g.log_g, g.exp_coef, min_abs=L))

    def radius_part(p, tR):
        return math.exp(log_g_functional(p, g, t_lo=tR))

    L_sel, lf = math.inf, None
    for L in L_grid:
        f = np.array([level_part(p, L) for p in family]) / masses
        if np.all(f <= eps):
            L_sel, lf = float(L), f
            break
    R_sel, rf = math.inf, None
    for tR in log_R_grid:
        f = np.array([radius_part(p, tR) for p in family]) / masses
        if np.all(f <= eps):
            R_sel, rf = float(tR), f
            break
    nan = np.full(len(family), np.nan)
    return TruncationSplit(eps, L_sel, R_sel, nan if lf is None else lf, nan if rf is None else rf)
