"""Adaptive Gauss-Kronrod quadrature carried out in the log domain.

The integrands met in this package look like ``exp(2 u(t)^2 / K + 2 t)`` and
span hundreds of orders of magnitude along one knot interval, so every piece
is evaluated relative to its own maximum and the pieces are combined with
log-sum-exp.  Nothing here ever exponentiates a raw log-integrand.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

# 15-point Kronrod nodes on [0, 1] (symmetric half) and weights; the 7-point
# Gauss rule lives on the odd-indexed Kronrod nodes.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[1:7:2] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]
GAUSS_WEIGHTS[9:15:2] = _WG[:3][::-1]

# an end of the piece this far (in log units) above every interior node means
# the nodes cannot see the mass near that end
_ENDPOINT_GAP = 1.0


def _extrapolation_weights():
    x = -_XGK[:3]  # three outermost nodes on the left, outward first
    lin = np.array([1.0 + (1.0 - _XGK[0]) / (_XGK[0] - _XGK[1]), -(1.0 - _XGK[0]) / (_XGK[0] - _XGK[1]), 0.0])
    # Lagrange weights at x = -1
    quad = np.array([np.prod([(-1.0 - x[j]) / (x[i] - x[j]) for j in range(3) if j != i])
                     for i in range(3)])
    return lin, quad


_EXTRAP = _extrapolation_weights()


def _evaluate(log_f, lo, hi):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = mid[:, None] + half[:, None] * NODES[None, :]
    ell = np.asarray(log_f(t.ravel()), dtype=float).reshape(t.shape)
    ends = np.asarray(log_f(np.concatenate([lo, hi])), dtype=float).reshape(2, -1).T
    node_max = ell.max(axis=1)
    # upper estimate of the log-integrand between the outermost nodes and the
    # piece ends: the end values themselves, or a linear extrapolation
    # piece ends: the end values themselves, or a linear or quadratic
    # extrapolation from the outermost nodes
    with np.errstate(invalid="ignore"):
        ext = [ell[:, :3] @ w for w in _EXTRAP] + [ell[:, :-4:-1] @ w for w in _EXTRAP]
    edge = np.nanmax(np.column_stack([ends] + ext + [np.full(lo.shape, -np.inf)]), axis=1)
    m = np.maximum(node_max, np.where(np.isfinite(ends), ends, -np.inf).max(axis=1))
    finite = np.isfinite(m)
    m_safe = np.where(finite, m, 0.0)
    with np.errstate(invalid="ignore", over="ignore"):
        scaled = np.exp(ell - m_safe[:, None])
    scaled[~finite] = 0.0
    kron = scaled @ KRONROD_WEIGHTS * half
    gauss = scaled @ GAUSS_WEIGHTS * half
    err = np.abs(kron - gauss)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_val = np.where(finite & (kron > 0), m_safe + np.log(np.where(kron > 0, kron, 1.0)), -np.inf)
        log_err = np.where(finite & (err > 0), m_safe + np.log(np.where(err > 0, err, 1.0)), -np.inf)
        blind = np.isfinite(edge) & (edge - np.where(np.isfinite(node_max), node_max, -np.inf) > _ENDPOINT_GAP)
        log_blind = edge + np.log(hi - lo)
    log_err = np.where(blind, np.maximum(log_err, log_blind), log_err)
    return log_val, log_err


def integrate_log(log_f, breakpoints_lo, breakpoints_hi, rtol=1e-10, max_rounds=90,
                  max_pieces=400_000):
    """Integrate ``exp(log_f(t))`` over the union of the given pieces.

    ``log_f`` must accept a 1-D array and may return ``-inf``.  Returns
    ``(log_integral, log_error_estimate)``; an identically zero integrand gives
    ``(-inf, -inf)``.
    """
    lo = np.asarray(breakpoints_lo, dtype=float).ravel()
    hi = np.asarray(breakpoints_hi, dtype=float).ravel()
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    if lo.size == 0:
        return -np.inf, -np.inf

    done_val = []
    done_err = []
    cur_val, cur_err = _evaluate(log_f, lo, hi)
    for _ in range(max_rounds):
        log_total = logsumexp(np.concatenate(done_val + [cur_val]))
        log_err_total = logsumexp(np.concatenate(done_err + [cur_err]))
        if log_total == np.inf:
            return log_total, log_err_total
        if log_err_total == -np.inf or log_err_total <= np.log(rtol) + log_total:
            return log_total, log_err_total
        n_pieces = sum(v.size for v in done_val) + cur_val.size
        # an all-underflow total falls back to the error mass as the scale
        scale = max(log_total, log_err_total)
        threshold = np.log(rtol) + scale - np.log(n_pieces)
        width = hi - lo
        tiny = width <= 1e-13 * np.maximum(1.0, np.abs(lo))
        split = (cur_err > threshold) & ~tiny
        done_val.append(cur_val[~split])
        done_err.append(cur_err[~split])
        if not split.any():
            cur_val, cur_err = cur_val[:0], cur_err[:0]
            break
        lo_s, hi_s = lo[split], hi[split]
        mid = 0.5 * (lo_s + hi_s)
        lo = np.concatenate([lo_s, mid])
        hi = np.concatenate([mid, hi_s])
        cur_val, cur_err = _evaluate(log_f, lo, hi)
        if n_pieces + lo.size > max_pieces:
            break
    all_val = np.concatenate(done_val + [cur_val])
    all_err = np.concatenate(done_err + [cur_err])
    return logsumexp(all_val), logsumexp(all_err)


def integrate(f, a, b, rtol=1e-10):
    """Plain-valued convenience wrapper for a positive integrand on [a, b]."""

    def log_f(t):
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(f(t), dtype=float))

    log_val, _ = integrate_log(log_f, [a], [b], rtol=rtol)
    return float(np.exp(log_val))
