"""Grid-evaluation kernels, in matched numpy and numba forms.

The optimizer evaluates the rate over every point of a transmittance grid
(a vector for the single-intensity protocol, a pair matrix for the decoy
protocols). Both backends implement the same arithmetic; infeasible cells
come back as -inf so a flat argmax lands on the first (smallest-lambda)
maximizer. The two paths agree to ~1e-10 relative (they differ only in
elementary-function rounding), which the benchmark asserts.

All inputs are plain float64 scalars/arrays precomputed by the optimizer:
per-lambda envelope values at the two window edges, per-lambda channel
observables, and the window/protocol scalars.
"""

from __future__ import annotations

import math

import numpy as np

from .accel import NUMBA_BACKEND, numba_available, resolve_backend

_LOG_SNAP = math.log(1e-30)

# ---------------------------------------------------------------------------
# numpy path


def _h2_vec(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    inner = (x > 0.0) & (x < 1.0)
    xs = np.where(inner, x, 0.5)
    out = -(xs * np.log2(xs) + (1.0 - xs) * np.log2(1.0 - xs))
    return np.where(inner, out, 0.0)


def _gllp_numpy(q_e, e_e, p0l, p1u, de, w, f, q):
    ql = np.maximum(0.0, (q_e - de) / w)
    q_omega = ql + p0l + p1u - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = np.where(q_omega > 0.0, q_e * e_e / np.where(q_omega > 0.0, q_omega, 1.0), 0.0)
    arg = np.clip(arg, 0.0, 0.5)
    pa = np.where(q_omega > 0.0, q_omega * (1.0 - _h2_vec(arg)), 0.0)
    ec = -q_e * f * _h2_vec(e_e)
    return q * (ec + pa)


def _decoy_numpy(
    one_decoy,
    lam,
    q_e,
    e_e,
    p0l_s,
    p0u_d,
    p1l_s,
    p1u_d,
    p2l_s,
    p2u_d,
    log_p2l_s,
    log1m_lam,
    qv,
    ev,
    de,
    w,
    f,
    q,
    cond2,
    c0,
    c1,
):
    col = np.newaxis
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = lam[:, col] / lam[col, :]
        den = p1u_d[col, :] * p2l_s[:, col] - p1l_s[:, col] * p2u_d[col, :]
        feas = (ratio > cond2) & (den > 0.0)
        safe_den = np.where(feas, den, 1.0)

        a0 = p0l_s[:, col] * p2u_d[col, :] - p0u_d[col, :] * p2l_s[:, col]
        log_a3 = c0 + c1 * log1m_lam[col, :] + log_p2l_s[:, col]
        keep_a3 = log_a3 >= _LOG_SNAP + np.log(safe_den)
        a3 = np.where(keep_a3, -np.exp(np.where(keep_a3, log_a3, 0.0)), 0.0)

        ql_d = np.maximum(0.0, (q_e[col, :] - de) / w)
        qu_s = np.minimum(1.0, q_e[:, col] / w)
        eq_u_s = np.minimum(1.0, (q_e * e_e)[:, col] / w)
        if one_decoy:
            qu_v = eq_u_s / (p0l_s[:, col] * 0.5)
            eq_l_v = 0.0
        else:
            qu_v = min(1.0, qv / w)
            eq_l_v = max(0.0, (qv * ev - de) / w)

        numer = (
            ql_d * p2l_s[:, col]
            - qu_s * p2u_d[col, :]
            + a0 * qu_v
            + a3
        )
        q1 = np.clip(p1l_s[:, col] * numer / safe_den, 0.0, qu_s)

        pos = q1 > 0.0
        e1 = np.where(
            pos,
            (eq_u_s - p0l_s[:, col] * eq_l_v) / np.where(pos, q1, 1.0),
            np.inf,
        )
        e1_used = np.clip(e1, 0.0, 0.5)
        ec = -(q_e * f * _h2_vec(e_e))[:, col]
        pa = w * q1 * (1.0 - _h2_vec(e1_used))
        rate = q * (ec + pa * 1.0)
        rate = np.where(pos, rate, q * ec)
        return np.where(feas, rate, -np.inf)


# ---------------------------------------------------------------------------
# numba path (same arithmetic, scalar loops)

if numba_available():
    from numba import njit, prange

    @njit(cache=True)
    def _h2_scalar(x):
        if x <= 0.0 or x >= 1.0:
            return 0.0
        return -(x * math.log2(x) + (1.0 - x) * math.log2(1.0 - x))

    @njit(cache=True, parallel=True)
    def _gllp_numba(q_e, e_e, p0l, p1u, de, w, f, q):
        n = q_e.shape[0]
        out = np.empty(n)
        for i in prange(n):
            ql = (q_e[i] - de) / w
            if ql < 0.0:
                ql = 0.0
            q_omega = ql + p0l[i] + p1u[i] - 1.0
            pa = 0.0
            if q_omega > 0.0:
                arg = q_e[i] * e_e[i] / q_omega
                if arg < 0.0:
                    arg = 0.0
                elif arg > 0.5:
                    arg = 0.5
                pa = q_omega * (1.0 - _h2_scalar(arg))
            ec = -q_e[i] * f * _h2_scalar(e_e[i])
            out[i] = q * (ec + pa)
        return out

    @njit(cache=True, parallel=True)
    def _decoy_numba(
        one_decoy,
        lam,
        q_e,
        e_e,
        p0l_s,
        p0u_d,
        p1l_s,
        p1u_d,
        p2l_s,
        p2u_d,
        log_p2l_s,
        log1m_lam,
        qv,
        ev,
        de,
        w,
        f,
        q,
        cond2,
        c0,
        c1,
    ):
        n = lam.shape[0]
        out = np.full((n, n), -np.inf)
        for i in prange(n):
            qu_s = q_e[i] / w
            if qu_s > 1.0:
                qu_s = 1.0
            eq_u_s = q_e[i] * e_e[i] / w
            if eq_u_s > 1.0:
                eq_u_s = 1.0
            ec = -q_e[i] * f * _h2_scalar(e_e[i])
            if one_decoy:
                qu_v = eq_u_s / (p0l_s[i] * 0.5)
                eq_l_v = 0.0
            else:
                qu_v = qv / w
                if qu_v > 1.0:
                    qu_v = 1.0
                eq_l_v = (qv * ev - de) / w
                if eq_l_v < 0.0:
                    eq_l_v = 0.0
            for j in range(n):
                if lam[i] / lam[j] <= cond2:
                    continue
                den = p1u_d[j] * p2l_s[i] - p1l_s[i] * p2u_d[j]
                if den <= 0.0:
                    continue
                a0 = p0l_s[i] * p2u_d[j] - p0u_d[j] * p2l_s[i]
                log_a3 = c0 + c1 * log1m_lam[j] + log_p2l_s[i]
                if log_a3 >= _LOG_SNAP + math.log(den):
                    a3 = -math.exp(log_a3)
                else:
                    a3 = 0.0
                ql_d = (q_e[j] - de) / w
                if ql_d < 0.0:
                    ql_d = 0.0
                numer = ql_d * p2l_s[i] - qu_s * p2u_d[j] + a0 * qu_v + a3
                q1 = p1l_s[i] * numer / den
                if q1 < 0.0:
                    q1 = 0.0
                elif q1 > qu_s:
                    q1 = qu_s
                if q1 > 0.0:
                    e1 = (eq_u_s - p0l_s[i] * eq_l_v) / q1
                    if e1 < 0.0:
                        e1 = 0.0
                    elif e1 > 0.5:
                        e1 = 0.5
                    pa = w * q1 * (1.0 - _h2_scalar(e1))
                else:
                    pa = 0.0
                out[i, j] = q * (ec + pa)
        return out


# ---------------------------------------------------------------------------
# dispatch


def gllp_rate_vector(q_e, e_e, p0l, p1u, de, w, f, q, backend=None):
    """Raw rate at every grid transmittance; shapes follow q_e."""
    chosen = resolve_backend(backend)
    if chosen == NUMBA_BACKEND:
        return _gllp_numba(q_e, e_e, p0l, p1u, de, w, f, q)
    return _gllp_numpy(q_e, e_e, p0l, p1u, de, w, f, q)


def decoy_rate_matrix(
    one_decoy,
    lam,
    q_e,
    e_e,
    p0l_s,
    p0u_d,
    p1l_s,
    p1u_d,
    p2l_s,
    p2u_d,
    log_p2l_s,
    log1m_lam,
    qv,
    ev,
    de,
    w,
    f,
    q,
    cond2,
    c0,
    c1,
    backend=None,
):
    """Raw rate for every (signal, decoy) grid pair; -inf marks infeasible."""
    chosen = resolve_backend(backend)
    args = (
        one_decoy,
        lam,
        q_e,
        e_e,
        p0l_s,
        p0u_d,
        p1l_s,
        p1u_d,
        p2l_s,
        p2u_d,
        log_p2l_s,
        log1m_lam,
        qv,
        ev,
        de,
        w,
        f,
        q,
        cond2,
        c0,
        c1,
    )
    if chosen == NUMBA_BACKEND:
        return _decoy_numba(*args)
    return _decoy_numpy(*args)
