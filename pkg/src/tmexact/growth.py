"""Growth functions g(u) and numerical tail diagnostics.

Every g is represented through ``log_g`` so that arbitrarily large amplitudes
stay finite; ``g`` itself returns ``inf`` once the exponent passes
``overflow_cap``.  ``exp_coef`` is the coefficient ``a`` in ``g(u) ~ exp(a u^2)``
and drives the quadrature subdivision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConditionFailed

DEFAULT_OVERFLOW_CAP = 648.0  # 2 * 18**2, below the binary64 exp limit of ~709


def log_expm1(x):
    """log(exp(x) - 1) for x >= 0 without overflow or cancellation."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    big = x > 30.0
    small = ~big
    out[big] = x[big] + np.log1p(-np.exp(-x[big]))
    with np.errstate(divide="ignore"):
        out[small] = np.log(np.expm1(x[small]))
    return out


@dataclass(frozen=True)
class GSpec:
    """A nonnegative growth function, evaluated in the log domain.

    Build instances through the classmethods; ``kind`` is one of
    ``exact_growth``, ``exp_minus_one``, ``theorem_form``, ``custom`` or
    ``truncated``.
    """

    kind: str
    params: dict = field(default_factory=dict)
    overflow_cap: float = DEFAULT_OVERFLOW_CAP

    # -- constructors -----------------------------------------------------
    @classmethod
    def exact_growth(cls, K: float = 1.0, p: float = 2.0, **kw) -> "GSpec":
        """g(u) = (exp(2u^2/K) - 1) / (1+|u|)^p; K = 1/(2 pi) gives the 4 pi form."""
        if K <= 0 or p < 0:
            raise ValueError("exact_growth needs K > 0 and p >= 0")
        return cls("exact_growth", {"K": float(K), "p": float(p)}, **kw)

    @classmethod
    def exp_minus_one(cls, alpha: float, **kw) -> "GSpec":
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        return cls("exp_minus_one", {"alpha": float(alpha)}, **kw)

    @classmethod
    def theorem_form(cls, K: float = 1.0, **kw) -> "GSpec":
        """g(u) = min(u^2, u^-2) exp(2u^2/K)."""
        if K <= 0:
            raise ValueError("K must be positive")
        return cls("theorem_form", {"K": float(K)}, **kw)

    @classmethod
    def custom(cls, u, log_g, **kw) -> "GSpec":
        """Tabulated g from samples ``(u_i, log g(u_i))`` with ``u_i > 0``.

        Between samples log g is interpolated linearly in log u (exact for
        power laws).  Below the table g is extended as a power law, above it
        log g is extended linearly in u^2 (exponential type).
        """
        u = np.asarray(u, dtype=float)
        lg = np.asarray(log_g, dtype=float)
        if u.ndim != 1 or u.size < 2 or u.shape != lg.shape:
            raise ValueError("custom table needs matching 1-D arrays of length >= 2")
        if np.any(u <= 0) or np.any(np.diff(u) <= 0):
            raise ValueError("custom table abscissae must be positive and increasing")
        if not np.all(np.isfinite(lg)):
            raise ValueError("custom table log-values must be finite")
        return cls("custom", {"u": tuple(u.tolist()), "log_g": tuple(lg.tolist())}, **kw)

    @classmethod
    def from_function(cls, log_fn, u_min=1e-6, u_max=40.0, n=2048, **kw) -> "GSpec":
        u = np.geomspace(u_min, u_max, n)
        return cls.custom(u, log_fn(u), **kw)

    def truncated(self, L: float) -> "GSpec":
        """g^L(u) = g(u) for |u| <= L and g(L sign u) beyond."""
        if L <= 0:
            raise ValueError("truncation level must be positive")
        return GSpec("truncated", {"base": self, "L": float(L)}, self.overflow_cap)

    # -- evaluation -------------------------------------------------------
    @property
    def exp_coef(self) -> float:
        k, p = self.kind, self.params
        if k in ("exact_growth", "theorem_form"):
            return 2.0 / p["K"]
        if k == "exp_minus_one":
            return p["alpha"]
        if k == "custom":
            u = np.asarray(p["u"])
            lg = np.asarray(p["log_g"])
            return max(0.0, (lg[-1] - lg[-2]) / (u[-1] ** 2 - u[-2] ** 2))
        return 0.0

    def log_g(self, u) -> np.ndarray:
        a = np.abs(np.asarray(u, dtype=float))
        k, p = self.kind, self.params
        with np.errstate(divide="ignore"):
            if k == "exact_growth":
                return log_expm1(2.0 * a * a / p["K"]) - p["p"] * np.log1p(a)
            if k == "exp_minus_one":
                return log_expm1(p["alpha"] * a * a)
            if k == "theorem_form":
                return -2.0 * np.abs(np.log(a)) + 2.0 * a * a / p["K"]
            if k == "custom":
                return self._custom_log_g(a)
            if k == "truncated":
                return p["base"].log_g(np.minimum(a, p["L"]))
        raise ValueError(f"unknown g kind {k!r}")

    def _custom_log_g(self, a):
        u = np.asarray(self.params["u"])
        lg = np.asarray(self.params["log_g"])
        out = np.full(a.shape, -np.inf)
        pos = a > 0
        la = np.log(a[pos])
        lu = np.log(u)
        val = np.interp(la, lu, lg)
        lo_slope = (lg[1] - lg[0]) / (lu[1] - lu[0])
        below = la < lu[0]
        val[below] = lg[0] + lo_slope * (la[below] - lu[0])
        hi_slope = (lg[-1] - lg[-2]) / (u[-1] ** 2 - u[-2] ** 2)
        above = la > lu[-1]
        val[above] = lg[-1] + hi_slope * (a[pos][above] ** 2 - u[-1] ** 2)
        out[pos] = val
        return out

    def g(self, u) -> np.ndarray:
        """Direct evaluation; ``inf`` beyond the overflow cap (use ``log_g``)."""
        lg = self.log_g(u)
        with np.errstate(over="ignore"):
            out = np.exp(lg)
        return np.where(lg > self.overflow_cap, np.inf, out)

    def to_dict(self) -> dict[str, Any]:
        params = dict(self.params)
        if self.kind == "truncated":
            params["base"] = params["base"].to_dict()
        return {"kind": self.kind, "params": params, "overflow_cap": self.overflow_cap}


# -- tail diagnostics -------------------------------------------------------

POINTS_PER_DECADE = 64
SLOPE_TOL = 0.02


@dataclass(frozen=True)
class TailEstimate:
    """Log-log slope and sup of a limit quantity over one sampled decade."""

    slope: float
    log_sup: float
    verdict: str  # "infinite" | "finite" | "zero"

    @property
    def limsup(self) -> float:
        if self.verdict == "infinite":
            return np.inf
        if self.verdict == "zero":
            return 0.0
        return float(np.exp(self.log_sup))


def _classify(log_u, log_q) -> TailEstimate:
    finite = np.isfinite(log_q)
    if not finite.any():
        return TailEstimate(-np.inf, -np.inf, "zero")
    slope = float(np.polyfit(log_u[finite], log_q[finite], 1)[0]) if finite.all() else -np.inf
    log_sup = float(np.max(log_q[finite]))
    if slope > SLOPE_TOL:
        verdict = "infinite"
    elif slope < -SLOPE_TOL:
        verdict = "zero"
    else:
        verdict = "finite"
    return TailEstimate(slope, log_sup, verdict)


def tail_at_infinity(g: GSpec, K: float) -> TailEstimate:
    """Estimate limsup_{|u|->oo} exp(-2u^2/K) u^2 g(u).

    Sampled on the decade u in [1e3, 1e4] sqrt(K) in the log domain; an
    estimate, not a proof.
    """
    u = np.sqrt(K) * np.logspace(3.0, 4.0, POINTS_PER_DECADE + 1)
    log_q = g.log_g(u) - 2.0 * u * u / K + 2.0 * np.log(u)
    return _classify(np.log(u), log_q)


def tail_at_zero(g: GSpec) -> TailEstimate:
    """Estimate limsup_{u->0} u^-2 g(u) on the decade [1e-4, 1e-3]."""
    u = np.logspace(-4.0, -3.0, POINTS_PER_DECADE + 1)
    log_q = g.log_g(u) - 2.0 * np.log(u)
    # the slope is taken toward u -> 0, hence the reversal of the sign
    est = _classify(-np.log(u), log_q)
    return est


def satisfies_boundedness(g: GSpec, K: float) -> bool:
    """Condition (1): both limsups finite."""
    return (tail_at_infinity(g, K).verdict != "infinite"
            and tail_at_zero(g).verdict != "infinite")


def satisfies_compactness(g: GSpec, K: float) -> bool:
    """Condition (3): both limits vanish."""
    return tail_at_infinity(g, K).verdict == "zero" and tail_at_zero(g).verdict == "zero"


def require_boundedness(g: GSpec, K: float) -> None:
    if not satisfies_boundedness(g, K):
        raise ConditionFailed(
            f"g={g.kind}{g.params} grows too fast for budget K={K}; "
            "use the witness generators instead"
        )
