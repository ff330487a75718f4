"""NumPy implementation of the integral covariance core.

This is the fallback used when the compiled ``_ccov`` extension is missing,
and the reference the extension is tested against.  Both implement the same
per-axis decomposition

    factor = mantissa * exp(logscale),   d log(factor) / d l = dlog

so distant supports underflow gracefully in ``exp(logscale)`` while the
mantissa and the gradient ratio stay O(1).
"""

from __future__ import annotations

import numpy as np

from .kernels import (
    KernelFamily,
    leading_coefficient,
    log_envelope,
    parse_family,
    phi,
    phi_prime,
    relative_envelope,
    tail_factors,
    Phi,
    Psi,
)

AUTO, STANDARD, MODIFIED = 0, 1, 2

# extents below POINT_TOL * l are treated as exact points
POINT_TOL = 1e-12

_VV_SIGNS = (-1.0, 1.0, 1.0, -1.0)


def _pp_dlog(family, t, l, P):
    # -(d / l^2) phi'(t) / phi(t), simplified per family so it never forms 0/0
    r = np.abs(t)
    if family == KernelFamily.SE:
        return t * t / l
    if family == KernelFamily.EXP:
        return r / l
    if family == KernelFamily.MATERN32:
        return 3.0 * t * t / (l * (1.0 + np.sqrt(3.0) * r))
    return (5.0 / 3.0) * t * t * (1.0 + np.sqrt(5.0) * r) / (l * P)


def _point_point(family, d, l, mode):
    t = d / l
    r = np.abs(t)
    if mode == STANDARD:
        f = phi(family, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            dlog = -(t / l) * np.asarray(phi_prime(family, t)) / f
        return np.asarray(f, dtype=float), np.zeros_like(t), dlog
    P, _, _ = tail_factors(family, r)
    return P, log_envelope(family, r), _pp_dlog(family, t, l, P)


def _phi_tilde(family, t, sigma, r0, A):
    """``Phi(t) - A*sigma`` divided by ``E(r0)``, plus ``phi(t) / E(r0)``."""
    r = np.abs(t)
    st = np.sign(t)
    P, Q, _ = tail_factors(family, r)
    rel = relative_envelope(family, r, r0)
    return (st - sigma) * A - st * Q * rel, P * rel


def _point_line(family, dd, h, l, mode):
    """Point at ``x``, interval of length ``h`` centred at ``x + dd``."""
    A = leading_coefficient(family)
    half = 0.5 * h
    if mode == AUTO:
        large = np.abs(dd) >= half
    else:
        large = np.full(np.shape(dd), mode == MODIFIED)
    sigma = np.where(large, np.where(dd < 0, -1.0, 1.0), 0.0)
    r0 = np.where(large, np.maximum(0.0, (np.abs(dd) - half) / l), 0.0)
    t_hi = (dd + half) / l
    t_lo = (dd - half) / l
    F_hi, f_hi = _phi_tilde(family, t_hi, sigma, r0, A)
    F_lo, f_lo = _phi_tilde(family, t_lo, sigma, r0, A)
    rho = F_hi - F_lo
    mant = (l / h) * rho
    dlog = 1.0 / l + (t_lo * f_lo - t_hi * f_hi) / (l * rho)
    return mant, log_envelope(family, r0), dlog


def _volume_volume(family, d, h1, h2, l, mode):
    A = leading_coefficient(family)
    # canonical orientation d >= 0 keeps K bitwise symmetric
    neg = d < 0
    d = np.abs(d)
    h1, h2 = np.where(neg, h2, h1), np.where(neg, h1, h2)
    hs = 0.5 * (h1 + h2)
    hd = 0.5 * (h1 - h2)
    if mode == AUTO:
        large = d >= hs
    else:
        large = np.full(np.shape(d), mode == MODIFIED)
    sigma = np.where(large, 1.0, 0.0)
    r0 = np.where(large, np.maximum(0.0, (d - hs) / l), 0.0)
    R = np.zeros(np.shape(d))
    lam = np.zeros(np.shape(d))
    for s, e in zip(_VV_SIGNS, (hd, -hs, hs, -hd)):
        t = (d + e) / l
        r = np.abs(t)
        st = np.sign(t)
        _, Q, S = tail_factors(family, r)
        rel = relative_envelope(family, r, r0)
        R = R + s * (A * (r - sigma * t) + S * rel)
        lam = lam + s * t * ((st - sigma) * A - st * Q * rel)
    mant = (l * l / (h1 * h2)) * R
    dlog = 2.0 / l - lam / (l * R)
    return mant, log_envelope(family, r0), dlog


def axis_terms(family, a1, h1, a2, h2, l, mode=AUTO):
    """Per-axis ``(mantissa, logscale, dlog)`` for broadcastable inputs."""
    family = parse_family(family)
    a1, h1, a2, h2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a1, h1, a2, h2)))
    l = float(l)
    shape = a1.shape
    mant = np.empty(shape)
    logs = np.empty(shape)
    dlog = np.empty(shape)
    p1 = h1 < POINT_TOL * l
    p2 = h2 < POINT_TOL * l
    d = a1 - a2

    m = p1 & p2
    if m.any():
        mant[m], logs[m], dlog[m] = _point_point(family, d[m], l, mode)
    m = p1 ^ p2
    if m.any():
        # orient as (point, line); dd = line centre minus point
        hh = np.where(p1, h2, h1)[m]
        dd = np.where(p1, -d, d)[m]
        mant[m], logs[m], dlog[m] = _point_line(family, dd, hh, l, mode)
    m = ~(p1 | p2)
    if m.any():
        mant[m], logs[m], dlog[m] = _volume_volume(family, d[m], h1[m], h2[m], l, mode)
    return mant, logs, dlog


def cov_terms(family, A1, H1, A2, H2, ls, mode=AUTO):
    """Unit-amplitude covariance and per-axis ``dlog`` for broadcast supports.

    ``A1``/``H1`` and ``A2``/``H2`` have trailing axis ``D`` and broadcast
    against each other in the leading axes.  Returns ``(K, dlog)`` with
    ``dlog`` stacked on a new leading axis of length ``D``.
    """
    A1, H1, A2, H2 = (np.asarray(v, dtype=float) for v in (A1, H1, A2, H2))
    D = A1.shape[-1]
    mant = None
    logs = None
    dlogs = []
    for q in range(D):
        m, s, g = axis_terms(family, A1[..., q], H1[..., q], A2[..., q], H2[..., q], ls[q], mode)
        mant = m if mant is None else mant * m
        logs = s if logs is None else logs + s
        dlogs.append(g)
    return mant * np.exp(logs), np.stack(dlogs)


def cov_matrix(family, A1, H1, A2, H2, ls, want_grad=False, mode=AUTO):
    """Unit-amplitude cross-covariance ``(N, M)`` and optional ``(D, N, M)`` gradient."""
    K, dlog = cov_terms(
        family, A1[:, None, :], H1[:, None, :], A2[None, :, :], H2[None, :, :], ls, mode
    )
    if not want_grad:
        return K, None
    return K, K[None] * dlog


def cov_pairs(family, A1, H1, A2, H2, ls, mode=AUTO):
    """Unit-amplitude covariance of aligned pairs (row ``i`` with row ``i``)."""
    K, _ = cov_terms(family, A1, H1, A2, H2, ls, mode)
    return K


def R_standard(family, a1, a2, h1, h2, l):
    """Literal four-term ``Psi`` combination, no stabilisation."""
    return (
        -Psi(family, (a1 - a2 + (h1 - h2) / 2) / l)
        + Psi(family, (a1 - a2 - (h1 + h2) / 2) / l)
        + Psi(family, (a1 - a2 + (h1 + h2) / 2) / l)
        - Psi(family, (a1 - a2 - (h1 - h2) / 2) / l)
    )


def rho_standard(family, a, h, x, l):
    return Phi(family, (a + h / 2 - x) / l) - Phi(family, (a - h / 2 - x) / l)


def polyline_distance(P, qx, qy, stride=16, chunk=4096):
    """Distance from query points to a polyline whose x increases.

    A coarse scan over every ``stride``-th vertex picks the two closest
    basins, then exact segment distances are taken over the fine segments
    around each.  Matches an exhaustive search for smooth, densely sampled
    curves; the compiled core does an exact pruned search.
    """
    P = np.asarray(P, dtype=float)
    Q = np.column_stack([np.ravel(qx), np.ravel(qy)]).astype(float)
    n_seg = len(P) - 1
    coarse = P[::stride]
    offs = np.arange(-stride, stride)
    out = np.empty(len(Q))
    for s in range(0, len(Q), chunk):
        q = Q[s : s + chunk]
        d2 = (q[:, :1] - coarse[None, :, 0]) ** 2 + (q[:, 1:] - coarse[None, :, 1]) ** 2
        cand = np.argsort(d2, axis=1)[:, :2] if d2.shape[1] <= 2 else np.argpartition(d2, 1, axis=1)[:, :2]
        seg = np.clip(cand[:, :, None] * stride + offs, 0, n_seg - 1).reshape(len(q), -1)
        a = P[seg]
        ab = P[seg + 1] - a
        qa = q[:, None, :] - a
        t = np.clip(np.sum(qa * ab, axis=-1) / np.sum(ab * ab, axis=-1), 0.0, 1.0)
        r = qa - t[..., None] * ab
        out[s : s + chunk] = np.sqrt(np.min(np.sum(r * r, axis=-1), axis=1))
    return out
