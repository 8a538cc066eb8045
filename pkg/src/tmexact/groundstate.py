"""Positive radial solutions of -Delta Q + c Q = f'(Q) on the plane, by shooting.

Radial form: Q'' + Q'/r - c Q + f'(Q) = 0, Q'(0) = 0.  A shot from Q(0) = Q0
either crosses zero (overshoot) or turns up while still positive (undershoot);
the ground state sits at the boundary and is found by bisection on Q0.

Along each shot the quadratures int Q^2 r, int Q'^2 r, int Q f'(Q) r and
int f(Q) r are integrated with the solution, so the Nehari identity
||grad Q||^2 + c ||Q||^2 = int Q f'(Q) and the two-dimensional Pohozaev identity
c ||Q||^2 = 2 int f(Q) are checked without resampling.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NoSignChange, StiffnessFailure
from .radial import TWO_PI, RadialProfile

EPS0 = 1e-6
RTOL = 1e-12
ATOL = 1e-12
AMPLITUDE_CAP = 50.0
BISECTION_RTOL = 1e-12


@dataclass(frozen=True)
class NonlinearityF:
    """f with f(u) = o(u^2) at 0, its derivative, and the critical coefficient kappa0."""

    name: str
    f: Callable
    f_prime: Callable
    kappa0: float = 0.0
    eps_coercivity: float = 1.0

    def D(self, u):
        """(Df)(u) = u f'(u)."""
        return u * self.f_prime(u)

    @property
    def amplitude_cap(self) -> float:
        if self.kappa0 > 0:
            return min(AMPLITUDE_CAP, math.sqrt(700.0 / self.kappa0))
        return AMPLITUDE_CAP

    def check_hypotheses(self, u_max: float = None, n: int = 400) -> bool:
        """f >= 0 and (D - 2) f >= eps f on a sample grid of (0, u_max]."""
        u_max = u_max or min(10.0, self.amplitude_cap)
        u = np.geomspace(1e-3, u_max, n)
        fu = self.f(u)
        dm2 = self.D(u) - 2.0 * fu
        return bool(np.all(fu >= 0) and np.all(dm2 >= self.eps_coercivity * fu * (1 - 1e-9) - 1e-300))

    # -- builtins --------------------------------------------------------
    @classmethod
    def cubic(cls) -> "NonlinearityF":
        """f(u) = u^4 / 4."""
        return cls("cubic", lambda u: 0.25 * u ** 4, lambda u: u ** 3, 0.0, 2.0)

    @classmethod
    def exp_subcritical(cls, kappa0: float = 1.0) -> "NonlinearityF":
        """f(u) = e^{kappa0 u^2} - 1 - kappa0 u^2, critical exponent kappa0."""
        k = float(kappa0)

        def f(u):
            x = k * u * u
            return np.expm1(x) - x

        def fp(u):
            return 2.0 * k * u * np.expm1(k * u * u)

        return cls(f"exp_subcritical(kappa0={k:g})", f, fp, k, 1.0)

    @classmethod
    def exp_damped(cls, kappa0: float = 1.0, power: float = 1.0) -> "NonlinearityF":
        """f(u) = (e^{k u^2} - 1 - k u^2) / (1 + k u^2)^power.

        power = 1 gives the e^{k u^2}/u^2 tail; power > 1 a smaller one.
        """
        k, q = float(kappa0), float(power)

        def f(u):
            x = k * u * u
            return (np.expm1(x) - x) / (1.0 + x) ** q

        def fp(u):
            x = k * u * u
            num = np.expm1(x) - x
            dnum = 2.0 * k * u * np.expm1(x)
            return dnum / (1.0 + x) ** q - q * num * 2.0 * k * u / (1.0 + x) ** (q + 1.0)

        return cls(f"exp_damped(kappa0={k:g},power={q:g})", f, fp, k, 0.5 if q <= 1 else 0.25)

    @classmethod
    def custom(cls, f, f_prime, kappa0=0.0, eps_coercivity=1.0, name="custom") -> "NonlinearityF":
        return cls(name, f, f_prime, float(kappa0), float(eps_coercivity))


@dataclass
class Shot:
    outcome: str  # "crosses_zero" | "blows_up" | "decays"
    Q0: float
    r_end: float
    Q_end: float
    dQ_end: float
    integrals: np.ndarray  # int_0^r_end of Q^2 r, Q'^2 r, Q f'(Q) r, f(Q) r
    sol: object = field(default=None, repr=False)
    r_start: float = 0.0

    @property
    def undershoot(self) -> bool:
        return self.outcome != "crosses_zero"


def _rhs(f: NonlinearityF, c: float):
    def rhs(r, y):
        Q, P = y[0], y[1]
        fp = f.f_prime(Q)
        return [P, -P / r + c * Q - fp, Q * Q * r, P * P * r, Q * fp * r, f.f(Q) * r]
    return rhs


def shoot(f: NonlinearityF, c: float, Q0: float, r_max: float = None) -> Shot:
    """Integrate from the regular center until a zero crossing, a turning point or r_max."""
    if c <= 0 or Q0 <= 0:
        raise ValueError("c and Q0 must be positive")
    r_max = r_max or 60.0 / math.sqrt(c)
    lap = c * Q0 - float(f.f_prime(Q0))  # Q''(0) * 2, since Delta Q = 2 Q''(0) at the center
    if lap >= 0:
        return Shot("blows_up", Q0, 0.0, Q0, 0.0, np.zeros(4))
    # start inside the central curvature scale
    eps0 = EPS0 * min(1.0, math.sqrt(Q0 / abs(lap)))
    Q_e = Q0 + lap * eps0 ** 2 / 4.0
    P_e = lap * eps0 / 2.0
    fp0 = float(f.f_prime(Q0))
    y0 = [Q_e, P_e, Q0 ** 2 * eps0 ** 2 / 2, 0.0, Q0 * fp0 * eps0 ** 2 / 2,
          float(f.f(Q0)) * eps0 ** 2 / 2]

    def cross(r, y):
        return y[0]
    cross.terminal, cross.direction = True, -1

    def turn(r, y):
        return y[1]
    turn.terminal, turn.direction = True, 1

    def runaway(r, y):
        return y[0] - 2.0 * Q0
    runaway.terminal, runaway.direction = True, 1

    sol = solve_ivp(_rhs(f, c), (eps0, r_max), y0, method="DOP853", rtol=RTOL, atol=ATOL, first_step=eps0,
                    events=(cross, turn, runaway), dense_output=True)
    if sol.status == -1:
        raise StiffnessFailure(f"integration failed at Q0={Q0!r}: {sol.message}")
    y_end = sol.y[:, -1]
    if sol.status == 1:
        if sol.t_events[0].size:
            outcome, r_end, y_end = "crosses_zero", sol.t_events[0][0], sol.y_events[0][0]
        elif sol.t_events[1].size:
            outcome, r_end, y_end = "blows_up", sol.t_events[1][0], sol.y_events[1][0]
        else:
            outcome, r_end, y_end = "blows_up", sol.t_events[2][0], sol.y_events[2][0]
    else:
        outcome, r_end = "decays", sol.t[-1]
    return Shot(outcome, Q0, float(r_end), float(y_end[0]), float(y_end[1]),
                np.array(y_end[2:6], dtype=float), sol, eps0)


@dataclass
class GroundStateResult:
    c: float
    Q0: float
    profile: RadialProfile = field(repr=False)
    grad_norm_sq: float
    mass_sq: float
    ode_residual: float
    nehari_residual: float
    pohozaev_residual: float
    kappa0: float = 0.0
    r_cut: float = math.nan
    tail_band: tuple = (math.nan, math.nan)
    bracket: tuple = (math.nan, math.nan)
    f_name: str = ""

    @property
    def kappa0_grad(self) -> float:
        return self.kappa0 * self.grad_norm_sq

    def row(self, status: str = "ok") -> list:
        return [self.c, self.Q0, self.grad_norm_sq, self.mass_sq, self.kappa0_grad,
                self.nehari_residual, self.pohozaev_residual, status]


SCAN_CSV_COLUMNS = ("c", "Q0", "grad2", "mass2", "kappa0_grad2", "nehari_res", "pohozaev_res", "status")


def _bracket(f: NonlinearityF, c: float):
    """Undershoot / overshoot pair of amplitudes, scanning upward geometrically."""
    cap = f.amplitude_cap
    lo = None
    q = min(1e-2 * max(1.0, math.sqrt(c)), 0.5 * cap)
    while q <= cap:
        s = shoot(f, c, q)
        if s.undershoot:
            lo = s
        else:
            if lo is None:
                # overshoot already at the smallest amplitude: search downward
                q_dn = q
                while q_dn > 1e-8:
                    q_dn /= 2.0
                    s_dn = shoot(f, c, q_dn)
                    if s_dn.undershoot:
                        return s_dn, s
                    s = s_dn
                raise NoSignChange("no undershooting amplitude found")
            return lo, s
        q *= 1.25
    raise NoSignChange(f"no overshoot below the amplitude cap {cap:.4g} (c={c}); c may exceed c_*")


def find_ground_state(f: NonlinearityF, c: float, n_samples: int = 400) -> GroundStateResult:
    """Bisection on Q0 between undershoot and overshoot to BISECTION_RTOL."""
    lo, hi = _bracket(f, c)
    for _ in range(200):
        if hi.Q0 - lo.Q0 <= BISECTION_RTOL * hi.Q0:
            break
        mid = 0.5 * (lo.Q0 + hi.Q0)
        if mid in (lo.Q0, hi.Q0):
            break
        s = shoot(f, c, mid)
        if s.undershoot:
            lo = s
        else:
            hi = s
    return _result_from_shot(f, c, lo, hi, n_samples)


def _result_from_shot(f, c, shot: Shot, other: Shot, n_samples) -> GroundStateResult:
    # the undershoot is cut at its turning point, where Q' = 0 and the
    # boundary terms of both identities vanish up to O(r^2 Q^2)
    I = TWO_PI * shot.integrals
    mass_sq, grad_sq, qfp, F = I
    nehari = abs(grad_sq + c * mass_sq - qfp) / max(qfp, 1e-300)
    pohozaev = abs(c * mass_sq - 2.0 * F) / max(c * mass_sq, 1e-300)
    r_cut = shot.r_end
    sol = shot.sol
    r = np.geomspace(max(shot.r_start, 1e-6), r_cut, n_samples)
    Q = sol.sol(r)[0]
    ode_res = _ode_residual(sol, f, c, 0.5 * r_cut)
    tail = _tail_band(sol, c, r_cut)
    t = np.concatenate([np.log(r), [math.log(r_cut) + 1e-3]])
    v = np.concatenate([Q, [0.0]])
    v[-2] = max(v[-2], 0.0)
    prof = RadialProfile(t, v, "constant", "zero")
    return GroundStateResult(c=c, Q0=shot.Q0, profile=prof, grad_norm_sq=float(grad_sq),
                             mass_sq=float(mass_sq), ode_residual=ode_res,
                             nehari_residual=float(nehari), pohozaev_residual=float(pohozaev),
                             kappa0=f.kappa0, r_cut=r_cut, tail_band=tail,
                             bracket=(shot.Q0, other.Q0), f_name=f.name)


def _ode_residual(sol, f, c, r_hi, n=4001) -> float:
    """max |Q'' + Q'/r - cQ + f'(Q)| by three-point differences on a geometric grid, over max |f'(Q)|."""
    # start at a tenth of the curvature scale sqrt(Q0 / |Q''(0)|): closer in,
    # roundoff in the second difference dominates
    Q0 = float(sol.sol(sol.t[0])[0])
    lap = abs(c * Q0 - float(f.f_prime(Q0)))
    r_lo = max(sol.t[0], 0.1 * math.sqrt(Q0 / lap) if lap > 0 else 0.1)
    r = np.geomspace(r_lo, r_hi, n)
    Q = sol.sol(r)[0]
    h0, h1 = np.diff(r)[:-1], np.diff(r)[1:]
    q0, q1, q2 = Q[:-2], Q[1:-1], Q[2:]
    d1 = (q2 * h0 ** 2 - q0 * h1 ** 2 + q1 * (h1 ** 2 - h0 ** 2)) / (h0 * h1 * (h0 + h1))
    d2 = 2.0 * (q2 * h0 + q0 * h1 - q1 * (h0 + h1)) / (h0 * h1 * (h0 + h1))
    res = d2 + d1 / r[1:-1] - c * q1 + f.f_prime(q1)
    return float(np.max(np.abs(res)) / np.max(np.abs(f.f_prime(Q))))


def _tail_band(sol, c, r_cut):
    """min and max of Q e^{sqrt(c) r} sqrt(r) over the last resolved decade."""
    sc = math.sqrt(c)
    r_hi = 0.6 * r_cut
    r_lo = max(r_hi - 10.0 / sc, 0.3 * r_cut)
    r = np.linspace(r_lo, r_hi, 200)
    Q = sol.sol(r)[0]
    v = Q * np.exp(sc * r) * np.sqrt(r)
    return float(v.min()), float(v.max())


@dataclass
class ScanRow:
    c: float
    status: str  # "ok" | "no_sign_change" | "error"
    result: Optional[GroundStateResult] = None
    message: str = ""

    def row(self) -> list:
        if self.result is not None:
            return self.result.row(self.status)
        return [self.c] + [math.nan] * 6 + [self.status]


def critical_mass_scan(f: NonlinearityF, c_grid, threads: int = 1) -> list:
    """find_ground_state over a sorted grid; failures are recorded per point."""
    c_grid = [float(c) for c in c_grid]
    if any(b <= a for a, b in zip(c_grid, c_grid[1:])):
        raise ValueError("c_grid must be strictly increasing")

    def one(c):
        try:
            return ScanRow(c, "ok", find_ground_state(f, c))
        except NoSignChange as e:
            return ScanRow(c, "no_sign_change", None, str(e))
        except StiffnessFailure as e:
            return ScanRow(c, "error", None, str(e))

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(one, c_grid))
    return [one(c) for c in c_grid]


def empirical_threshold(rows) -> float:
    """Largest c of the leading solvable run (inf if all solvable)."""
    last = math.nan
    for r in rows:
        if r.status != "ok":
            return last
        last = r.c
    return math.inf


def scan_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCAN_CSV_COLUMNS)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r.row()])
    return buf.getvalue()
