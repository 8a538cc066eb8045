"""Discrete and lattice extremal problems, and the radial exponential bound.

mu_d(h) = inf { ||a||_(e) : ||a||_1 = h, ||a||_2 <= 1 },  ||a||_(e)^2 = sum e^{2n} a_n^2.

Stationarity of the Lagrangian gives a_n = c / (e^{2n} + mu) with mu >= 0 the
ball multiplier; c is eliminated by the l1 constraint and mu is found by
bisection on log mu so that ||a||_2 = 1.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve

from .errors import (EnergyBudgetExceeded, Infeasible, InvalidProfile, NoConvergence,
                     NotMonotone, ZeroBoundaryValue)
from .radial import (TWO_PI, RadialProfile, _segment_mass_log_scale, energy_between,
                     mass_between)

MAX_BISECTION = 200


@dataclass(frozen=True, eq=False)
class DiscreteSequence:
    a: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=float).ravel()
        if a.size == 0 or not np.all(np.isfinite(a)):
            raise ValueError("sequence must be nonempty and finite")
        a.flags.writeable = False
        object.__setattr__(self, "a", a)

    @property
    def N(self) -> int:
        return self.a.size - 1

    @property
    def l1(self) -> float:
        return float(np.abs(self.a).sum())

    @property
    def l2(self) -> float:
        return float(math.sqrt(np.dot(self.a, self.a)))

    @property
    def e_norm(self) -> float:
        """||a||_(e), summed with the largest terms scaled out."""
        n = np.arange(self.a.size)
        nz = self.a != 0
        if not nz.any():
            return 0.0
        top = n[nz].max()
        s = np.sum(np.exp(2.0 * (n - top)) * self.a ** 2)
        return float(math.exp(top) * math.sqrt(s))

    def heights(self) -> np.ndarray:
        """h_k = sum_{j >= k} a_j for k = 0..N+1 (h_{N+1} = 0)."""
        return np.concatenate([np.cumsum(self.a[::-1])[::-1], [0.0]])

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "l1": self.l1, "l2": self.l2, "e_norm": self.e_norm}


@dataclass
class ExtremalSolution:
    sequence: DiscreteSequence
    objective: float
    multipliers: tuple  # (lambda_sum, lambda_ball) for the squared objective
    active_ball: bool
    h: float
    N: int
    kkt_residual: float = 0.0
    problem: str = "discrete"

    def to_dict(self) -> dict:
        return {"problem": self.problem, "h": self.h, "N": self.N, "objective": self.objective,
                "lambda_sum": self.multipliers[0], "lambda_ball": self.multipliers[1],
                "active_ball": self.active_ball, "kkt_residual": self.kkt_residual,
                "sequence": self.sequence.to_dict()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


SOLUTION_CSV_COLUMNS = ("h", "N", "objective", "active_ball", "kkt_residual")


def solutions_to_csv(solutions) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SOLUTION_CSV_COLUMNS)
    for s in solutions:
        w.writerow([repr(s.h), s.N, repr(s.objective), s.active_ball, repr(s.kkt_residual)])
    return buf.getvalue()


# -- the ball-multiplier bisection shared by both problems -------------------

def _bisect_ball(direction, h, log_mu_lo, log_mu_hi):
    """Find mu with h^2 |x|^2 / (sum x)^2 = 1 where x = direction(mu).

    The ratio decreases in mu.  Returns (mu, x) on the side with |a|_2 <= 1.
    """
    def excess(log_mu):
        x = direction(math.exp(log_mu))
        return h * h * np.dot(x, x) / x.sum() ** 2 - 1.0, x

    lo, hi = log_mu_lo, log_mu_hi
    e_hi, x_hi = excess(hi)
    if e_hi > 0:
        raise NoConvergence("ball constraint not reachable inside the multiplier bracket")
    for _ in range(MAX_BISECTION):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        e_mid, x_mid = excess(mid)
        if e_mid > 0:
            lo = mid
        else:
            hi, e_hi, x_hi = mid, e_mid, x_mid
    if abs(e_hi) > 1e-9:
        raise NoConvergence(f"bisection stalled with ||a||_2^2 - 1 = {e_hi:.3g}")
    return math.exp(hi), x_hi


def solve_mu_d(h: float, N: int) -> ExtremalSolution:
    """Minimize ||a||_(e) over a in R^{N+1} with ||a||_1 = h and ||a||_2 <= 1.

    The optimum has a_n > 0 for every n (c > 0 and e^{2n} + mu > 0), so the
    sign constraint never binds.  Multipliers refer to the squared objective:
    2 (e^{2n} + lambda_ball) a_n = lambda_sum.
    """
    if N < 0 or int(N) != N:
        raise ValueError("N must be a nonnegative integer")
    N = int(N)
    if not h > 0:
        raise ValueError("h must be positive")
    cap = math.sqrt(N + 1)
    if h > cap * (1.0 + 1e-15):
        raise Infeasible(f"h = {h} exceeds sqrt(N+1) = {cap}: no sequence has ||a||_1 = h, ||a||_2 <= 1")
    n = np.arange(N + 1, dtype=float)
    w = np.exp(2.0 * n)
    if h >= cap:
        # Cauchy-Schwarz equality: the feasible set is one point
        a = np.full(N + 1, 1.0 / cap)
        seq = DiscreteSequence(a)
        return ExtremalSolution(seq, seq.e_norm, (math.nan, math.inf), True, float(h), N, 0.0)

    x0 = 1.0 / w
    if h * h * np.dot(x0, x0) / x0.sum() ** 2 <= 1.0:
        mu, x = 0.0, x0
        active = False
    else:
        mu, x = _bisect_ball(lambda m: 1.0 / (w + m), h, -60.0, 2.0 * N + 60.0)
        active = True
    c = h / x.sum()
    a = c * x
    seq = DiscreteSequence(a)
    lam_sum = 2.0 * c
    stat = np.max(np.abs(2.0 * (w + mu) * a - lam_sum)) / lam_sum
    eq = abs(a.sum() - h) / h
    sq = float(np.dot(a, a))
    viol = max(0.0, sq - 1.0)
    obj = seq.e_norm
    compl = mu * abs(1.0 - sq) / (obj * obj + mu)
    return ExtremalSolution(seq, obj, (lam_sum, mu), active, float(h), N,
                            float(max(stat, eq, viol, compl)))


def constant_sequence_bound(n: int) -> float:
    """sqrt(n) e^{-n} ||(1,..,1)/sqrt(n)||_(e) = sqrt((1 - e^{-2n}) / (e^2 - 1))."""
    return math.sqrt(-math.expm1(-2.0 * n) / math.expm1(2.0))


def mu_d_asymptotic_ratio(n_range, extra: int = 20) -> list:
    """[(n, mu_d(sqrt n) sqrt(n) e^{-n})] with N = n + extra."""
    out = []
    for n in n_range:
        n = int(n)
        if n < 2:
            raise ValueError("n must be >= 2")
        sol = solve_mu_d(math.sqrt(n), n + extra)
        out.append((n, sol.objective * math.sqrt(n) * math.exp(-n)))
    return out


def brute_force_mu_d(h: float, N: int, step: float = 1e-4) -> float:
    """Grid search over (a_1..a_N) with a_0 = h - sum, refined in stages.

    The problem is convex, so each stage searches a window of a few coarse
    steps around the previous optimum; the last stage uses ``step``.
    """
    if N < 1:
        return float(h) if h <= 1 else math.inf
    w = np.exp(2.0 * np.arange(N + 1))
    top = min(1.0, h)
    steps = [0.05]
    while steps[-1] / 5.0 > step:
        steps.append(steps[-1] / 5.0)
    steps.append(step)
    center = None
    best = math.inf
    for i, st in enumerate(steps):
        if center is None:
            axes = [np.arange(0.0, top + st / 2, st)] * N
        else:
            win = 2.0 * steps[i - 1]
            axes = [np.clip(np.arange(c - win, c + win + st / 2, st), 0.0, None) for c in center]
        grids = np.meshgrid(*axes, indexing="ij")
        F = np.stack([g.ravel() for g in grids], axis=1)
        a0 = h - F.sum(axis=1)
        A = np.column_stack([a0, F])
        ok = (a0 >= 0) & (np.einsum("ij,ij->i", A, A) <= 1.0)
        if not ok.any():
            continue
        A = A[ok]
        obj = np.sqrt(A * A @ w)
        j = int(np.argmin(obj))
        if obj[j] <= best:
            best = float(obj[j])
            center = A[j, 1:]
    return best


# -- the lattice version of the continuous problem ---------------------------

def _lattice_mass_form(N: int):
    """Scaled mass matrix: mass(h) = h^T D M~ D h with D = diag(e^k), k = 0..N."""
    q_uu = float(_segment_mass_log_scale(0.0, 1.0, 1.0, 0.0))
    q_vv = float(_segment_mass_log_scale(0.0, 1.0, 0.0, 1.0))
    q_uv = 0.5 * (float(_segment_mass_log_scale(0.0, 1.0, 1.0, 1.0)) - q_uu - q_vv)
    # segment k runs over [k, k+1] and contributes 2 pi e^{2(k+1)} Q(h_k, h_{k+1});
    # after scaling h_k by e^k the coefficients no longer depend on k
    M = np.zeros((N + 1, N + 1))
    e2 = math.exp(2.0)
    for k in range(N + 1):
        M[k, k] += TWO_PI * e2 * q_uu
        if k + 1 <= N:
            M[k + 1, k + 1] += TWO_PI * q_vv
            M[k, k + 1] += TWO_PI * math.e * q_uv
            M[k + 1, k] += TWO_PI * math.e * q_uv
    return M


def solve_mu_lattice(h: float, N: int) -> ExtremalSolution:
    """mu(h) restricted to profiles log-linear on each [e^k, e^{k+1}], k <= N.

    phi(e^k) = h_k = sum_{j >= k} a_j, phi = 0 beyond e^{N+1}, energy on r > 1
    equal to 2 pi ||a||_2^2, and a_j >= 0.  Minimizes ||phi||_{L^2(r>1)}; an
    upper bound for mu(h) that the optimal replacement shows to be comparable
    to it.  The unconstrained optimum oscillates in sign along its tail; the
    support is cut before the first negative entry and the problem re-solved.
    """
    N = int(N)
    cap = math.sqrt(N + 1)
    if h > cap * (1.0 + 1e-15):
        raise Infeasible(f"h = {h} exceeds sqrt(N+1) = {cap}")
    n_eff = N
    while True:
        a, mu, active, res = _lattice_kkt(h, n_eff)
        if a.min() >= 0.0 or n_eff == 0 or h > math.sqrt(n_eff) * (1.0 + 1e-15):
            break
        n_eff = int(np.flatnonzero(a < 0.0)[0]) - 1
        if n_eff < 0:
            raise NoConvergence("lattice optimum starts with a negative entry")
    full = np.zeros(N + 1)
    full[:n_eff + 1] = np.maximum(a, 0.0)
    k = np.arange(N + 1, dtype=float)
    b = np.exp(k - k[-1]) * full
    Bt = _lattice_b_form(N)
    obj = math.exp(k[-1]) * math.sqrt(max(float(b @ Bt @ b), 0.0))
    return ExtremalSolution(DiscreteSequence(full), obj, (res[0], mu), active,
                            float(h), N, res[1], "lattice")


def _lattice_b_form(N: int) -> np.ndarray:
    """Mass form in the variables b_j = e^j a_j."""
    k = np.arange(N + 1, dtype=float)
    # e^k h_k = sum_{j>=k} e^{k-j} b_j
    U = np.triu(np.exp(k[:, None] - k[None, :]))
    return U.T @ _lattice_mass_form(N) @ U


def _lattice_kkt(h, N):
    cap = math.sqrt(N + 1)
    k = np.arange(N + 1, dtype=float)
    Bt = _lattice_b_form(N)
    d_inv = np.exp(-k)

    def direction(mu):
        A = Bt + mu * np.diag(d_inv ** 2)
        s = 1.0 / np.sqrt(np.diag(A))  # equilibrate before the Cholesky solve
        y = s * solve(A * s[:, None] * s[None, :], s * d_inv, assume_a="pos")
        return d_inv * y

    if h >= cap:
        return np.full(N + 1, 1.0 / cap), math.inf, True, (math.nan, 0.0)
    x0 = direction(0.0)
    if h * h * np.dot(x0, x0) / x0.sum() ** 2 <= 1.0:
        mu, x, active = 0.0, x0, False
    else:
        mu, x = _bisect_ball(direction, h, -60.0, 2.0 * N + 60.0)
        active = True
    c = h / x.sum()
    a = c * x
    sq = float(np.dot(a, a))
    res = max(abs(a.sum() - h) / h, max(0.0, sq - 1.0))
    return a, mu, active, (2.0 * c, float(res))


# -- reduction of a profile to the lattice sequence ---------------------------

def reduce_profile_to_sequence(p: RadialProfile, R: float = 1.0) -> DiscreteSequence:
    """a_k = phi(R e^k) - phi(R e^{k+1}) on the region r > R.

    Requires phi nonincreasing and nonnegative on r >= R and vanishing at
    infinity.  The last index N is the first with phi(R e^{N+1}) = 0.
    """
    t0 = math.log(R)
    if p.right == "constant" and p.values[-1] != 0.0:
        raise InvalidProfile("profile must vanish at infinity")
    inside = p.knots > t0
    vals = np.concatenate([[float(p.at_log(t0))], p.values[inside]])
    if np.any(np.diff(vals) > 0.0) or vals.min() < 0.0:
        raise NotMonotone("profile must be nonnegative and nonincreasing on r > R")
    N = max(int(math.ceil(p.knots[-1] - t0)) - 1, 0)
    h = p.at_log(t0 + np.arange(N + 2, dtype=float))
    h[-1] = 0.0
    return DiscreteSequence(-np.diff(h))


def rebuild_profile(seq: DiscreteSequence, R: float = 1.0) -> RadialProfile:
    """The log-linear lattice profile with values h_k at R e^k (constant inside R)."""
    h = seq.heights()
    t = math.log(R) + np.arange(h.size, dtype=float)
    return RadialProfile(t, h, "constant", "zero")


@dataclass
class ReductionReport:
    sequence: DiscreteSequence
    energy_tail: float
    rebuilt_energy_tail: float
    mass_tail: float
    rebuilt_mass_tail: float
    e_norm_sq: float
    boundary_drop: float
    boundary_drop_bound: float

    @property
    def mass_ratio(self) -> float:
        """rebuilt mass / original mass on r > R."""
        return self.rebuilt_mass_tail / self.mass_tail if self.mass_tail > 0 else math.nan

    @property
    def lattice_ratio(self) -> float:
        """rebuilt mass / ||a||_(e)^2."""
        return self.rebuilt_mass_tail / self.e_norm_sq if self.e_norm_sq > 0 else math.nan


def boundary_drop_check(p: RadialProfile, R: float = 1.0) -> tuple[float, float]:
    """(phi(R) - phi(R e^{1/4}), sqrt(E/(2 pi) / 4)) with E the energy of that annulus.

    The first never exceeds the second (Cauchy-Schwarz); with tail energy at
    most 2 pi the bound is at most 1/2.
    """
    t0 = math.log(R)
    drop = float(p.at_log(t0) - p.at_log(t0 + 0.25))
    e = energy_between(p, t0, t0 + 0.25)
    return drop, math.sqrt(e / TWO_PI * 0.25)


def reduction_report(p: RadialProfile, R: float = 1.0) -> ReductionReport:
    t0 = math.log(R)
    seq = reduce_profile_to_sequence(p, R)
    psi = rebuild_profile(seq, R)
    drop, bound = boundary_drop_check(p, R)
    return ReductionReport(
        sequence=seq, energy_tail=energy_between(p, t0), rebuilt_energy_tail=energy_between(psi, t0),
        mass_tail=mass_between(p, t0), rebuilt_mass_tail=mass_between(psi, t0),
        e_norm_sq=(seq.e_norm * R) ** 2, boundary_drop=drop, boundary_drop_bound=bound)


# -- the radial exponential bound ----------------------------------------------

def log_radial_tm_ratio(p: RadialProfile, R: float, K: float) -> float:
    """log of e^{2h^2/K} / (h^2/K^2) / ||phi/R||^2_{L^2(r>R)}, h = phi(R)."""
    if not (R > 0 and K > 0):
        raise ValueError("R and K must be positive")
    t0 = math.log(R)
    tail_e = energy_between(p, t0)
    if tail_e > TWO_PI * K * (1.0 + 1e-12):
        raise EnergyBudgetExceeded(f"tail energy {tail_e:.12g} exceeds 2 pi K = {TWO_PI * K:.12g}")
    h = abs(float(p.at_log(t0)))
    if h * h <= K:
        raise ZeroBoundaryValue(f"phi(R)^2 = {h * h:.6g} <= K; the bound is only stated for phi(R)^2 > K")
    m = mass_between(p, t0)
    if m <= 0.0:
        raise ZeroBoundaryValue("no mass outside R")
    return 2.0 * h * h / K - math.log(h * h / (K * K)) - (math.log(m) - 2.0 * t0)


def radial_tm_check(p: RadialProfile, R: float, K: float) -> float:
    """The ratio LHS / ||phi/R||^2_{L^2(r>R)}; ``inf`` if not representable."""
    lr = log_radial_tm_ratio(p, R, K)
    return math.exp(lr) if lr < 709.0 else math.inf


def near_extremizer(h: float, K: float = 1.0, R: float = 1.0) -> RadialProfile:
    """phi = h on r < R, falling log-linearly to 0 at R e^{h^2/K}; tail energy 2 pi K."""
    if h <= 0:
        raise ValueError("h must be positive")
    t0 = math.log(R)
    return RadialProfile([t0, t0 + h * h / K], [h, 0.0])


@dataclass
class RadialTMSurvey:
    K: float
    R: float
    seed: int
    random_ratios: np.ndarray = field(repr=False)
    sweep_h: np.ndarray = field(repr=False)
    sweep_ratios: np.ndarray = field(repr=False)

    @property
    def random_max(self) -> float:
        return float(self.random_ratios.max()) if self.random_ratios.size else math.nan

    @property
    def sweep_max(self) -> float:
        return float(self.sweep_ratios.max())

    @property
    def max_ratio(self) -> float:
        return float(np.nanmax([self.random_max, self.sweep_max]))

    def to_dict(self) -> dict:
        return {"K": self.K, "R": self.R, "seed": self.seed, "n_random": int(self.random_ratios.size),
                "random_max": self.random_max, "sweep_max": self.sweep_max,
                "max_ratio": self.max_ratio,
                "sweep": [{"h": float(h), "ratio": float(r)}
                          for h, r in zip(self.sweep_h, self.sweep_ratios)]}


def radial_tm_survey(seed: int, n_samples: int = 500, K: float = 1.0, R: float = 1.0,
                     h_grid=None) -> RadialTMSurvey:
    """radial_tm_check over seeded tail profiles and the near-extremizer sweep.

    ``h_grid`` is in units of sqrt(K), so every sweep member has phi(R)^2 > K.
    """
    from .sampling import random_tail_family
    fam = random_tail_family(seed, n_samples, K, R)
    rr = np.array([radial_tm_check(p, R, K) for p in fam])
    if h_grid is None:
        h_grid = np.linspace(1.5, 6.0, 19)
    hs = np.asarray(h_grid, dtype=float)
    sw = np.array([radial_tm_check(near_extremizer(h * math.sqrt(K), K, R), R, K)
                   for h in hs])
    return RadialTMSurvey(float(K), float(R), int(seed), rr, hs, sw)
