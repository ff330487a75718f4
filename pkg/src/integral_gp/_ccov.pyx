# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled integral covariance core.

Mirrors ``_pycov`` term by term; see that module for the decomposition.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, sqrt, M_PI, INFINITY
from scipy.special.cython_special cimport erfcx

cnp.import_array()

cdef enum:
    SE = 0
    EXPO = 1
    M32 = 2
    M52 = 3

cdef enum:
    AUTO = 0
    STANDARD = 1
    MODIFIED = 2

cdef double POINT_TOL = 1e-12
cdef double SQRT3 = sqrt(3.0)
cdef double SQRT5 = sqrt(5.0)
cdef double SQRT2 = sqrt(2.0)
cdef double SQRT_HALF_PI = sqrt(M_PI / 2.0)


cdef struct Tail:
    double P
    double Q
    double S


cdef struct AxisOut:
    double mant
    double logs
    double dlog


cdef inline double sgn(double x) noexcept nogil:
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


cdef inline double lead(int fam) noexcept nogil:
    if fam == SE:
        return SQRT_HALF_PI
    if fam == EXPO:
        return 1.0
    if fam == M32:
        return 2.0 / SQRT3
    return 8.0 / (3.0 * SQRT5)


cdef inline Tail tail(int fam, double r) noexcept nogil:
    cdef Tail o
    cdef double ex
    if fam == SE:
        ex = erfcx(r / SQRT2)
        o.P = 1.0
        o.Q = SQRT_HALF_PI * ex
        o.S = 1.0 - SQRT_HALF_PI * r * ex
    elif fam == EXPO:
        o.P = 1.0
        o.Q = 1.0
        o.S = 1.0
    elif fam == M32:
        o.P = 1.0 + SQRT3 * r
        o.Q = 2.0 / SQRT3 + r
        o.S = 1.0 + r / SQRT3
    else:
        o.P = 1.0 + SQRT5 * r + (5.0 / 3.0) * r * r
        o.Q = (8.0 / SQRT5 + 5.0 * r + SQRT5 * r * r) / 3.0
        o.S = 1.0 + (7.0 / (3.0 * SQRT5)) * r + r * r / 3.0
    return o


cdef inline double log_env(int fam, double r) noexcept nogil:
    if fam == SE:
        return -0.5 * r * r
    if fam == EXPO:
        return -r
    if fam == M32:
        return -SQRT3 * r
    return -SQRT5 * r


cdef inline double rel_env(int fam, double r, double r0) noexcept nogil:
    if fam == SE:
        return exp(-0.5 * (r - r0) * (r + r0))
    if fam == EXPO:
        return exp(-(r - r0))
    if fam == M32:
        return exp(-SQRT3 * (r - r0))
    return exp(-SQRT5 * (r - r0))


cdef inline double phi_std(int fam, double t) noexcept nogil:
    cdef double r = fabs(t)
    if fam == SE:
        return exp(-0.5 * t * t)
    if fam == EXPO:
        return exp(-r)
    if fam == M32:
        return (1.0 + SQRT3 * r) * exp(-SQRT3 * r)
    return (1.0 + SQRT5 * r + (5.0 / 3.0) * t * t) * exp(-SQRT5 * r)


cdef inline double phi_prime_std(int fam, double t) noexcept nogil:
    cdef double r = fabs(t)
    if fam == SE:
        return -t * exp(-0.5 * t * t)
    if fam == EXPO:
        return -sgn(t) * exp(-r)
    if fam == M32:
        return -3.0 * t * exp(-SQRT3 * r)
    return exp(-SQRT5 * r) * (10.0 * t - sgn(t) * (5.0 * SQRT5 * t * t + 15.0 * r)) / 3.0


cdef inline AxisOut point_point(int fam, double d, double l, int mode) noexcept nogil:
    cdef AxisOut o
    cdef double t = d / l
    cdef double r = fabs(t)
    cdef Tail tl
    if mode == STANDARD:
        o.mant = phi_std(fam, t)
        o.logs = 0.0
        o.dlog = -(t / l) * phi_prime_std(fam, t) / o.mant
        return o
    tl = tail(fam, r)
    o.mant = tl.P
    o.logs = log_env(fam, r)
    if fam == SE:
        o.dlog = t * t / l
    elif fam == EXPO:
        o.dlog = r / l
    elif fam == M32:
        o.dlog = 3.0 * t * t / (l * (1.0 + SQRT3 * r))
    else:
        o.dlog = (5.0 / 3.0) * t * t * (1.0 + SQRT5 * r) / (l * tl.P)
    return o


cdef inline AxisOut point_line(int fam, double dd, double h, double l, int mode) noexcept nogil:
    cdef AxisOut o
    cdef double A = lead(fam)
    cdef double half = 0.5 * h
    cdef bint large
    cdef double sigma = 0.0, r0 = 0.0
    cdef double t_hi, t_lo, r, st, rel, F_hi, F_lo, f_hi, f_lo, rho
    cdef Tail tl
    if mode == AUTO:
        large = fabs(dd) >= half
    else:
        large = mode == MODIFIED
    if large:
        sigma = -1.0 if dd < 0 else 1.0
        r0 = (fabs(dd) - half) / l
        if r0 < 0:
            r0 = 0.0
    t_hi = (dd + half) / l
    t_lo = (dd - half) / l

    r = fabs(t_hi)
    st = sgn(t_hi)
    tl = tail(fam, r)
    rel = rel_env(fam, r, r0)
    F_hi = (st - sigma) * A - st * tl.Q * rel
    f_hi = tl.P * rel

    r = fabs(t_lo)
    st = sgn(t_lo)
    tl = tail(fam, r)
    rel = rel_env(fam, r, r0)
    F_lo = (st - sigma) * A - st * tl.Q * rel
    f_lo = tl.P * rel

    rho = F_hi - F_lo
    o.mant = (l / h) * rho
    o.logs = log_env(fam, r0)
    o.dlog = 1.0 / l + (t_lo * f_lo - t_hi * f_hi) / (l * rho)
    return o


cdef inline AxisOut volume_volume(int fam, double d, double h1, double h2, double l, int mode) noexcept nogil:
    cdef AxisOut o
    cdef double A = lead(fam)
    cdef double tmp, hs, hd, sigma = 0.0, r0 = 0.0
    cdef double R = 0.0, lam = 0.0
    cdef double t, r, st, rel, s
    cdef double e[4]
    cdef double sg[4]
    cdef int k
    cdef bint large
    cdef Tail tl
    if d < 0:
        d = -d
        tmp = h1
        h1 = h2
        h2 = tmp
    hs = 0.5 * (h1 + h2)
    hd = 0.5 * (h1 - h2)
    if mode == AUTO:
        large = d >= hs
    else:
        large = mode == MODIFIED
    if large:
        sigma = 1.0
        r0 = (d - hs) / l
        if r0 < 0:
            r0 = 0.0
    e[0] = hd
    e[1] = -hs
    e[2] = hs
    e[3] = -hd
    sg[0] = -1.0
    sg[1] = 1.0
    sg[2] = 1.0
    sg[3] = -1.0
    for k in range(4):
        s = sg[k]
        t = (d + e[k]) / l
        r = fabs(t)
        st = sgn(t)
        tl = tail(fam, r)
        rel = rel_env(fam, r, r0)
        R = R + s * (A * (r - sigma * t) + tl.S * rel)
        lam = lam + s * t * ((st - sigma) * A - st * tl.Q * rel)
    o.mant = (l * l / (h1 * h2)) * R
    o.logs = log_env(fam, r0)
    o.dlog = 2.0 / l - lam / (l * R)
    return o


cdef inline AxisOut axis(int fam, double a1, double h1, double a2, double h2, double l, int mode) noexcept nogil:
    cdef bint p1 = h1 < POINT_TOL * l
    cdef bint p2 = h2 < POINT_TOL * l
    if p1 and p2:
        return point_point(fam, a1 - a2, l, mode)
    if p1:
        return point_line(fam, a2 - a1, h2, l, mode)
    if p2:
        return point_line(fam, a1 - a2, h1, l, mode)
    return volume_volume(fam, a1 - a2, h1, h2, l, mode)


def cov_matrix(int family,
               const double[:, ::1] A1, const double[:, ::1] H1,
               const double[:, ::1] A2, const double[:, ::1] H2,
               const double[::1] ls, bint want_grad=False, int mode=AUTO,
               bint symmetric=False):
    """Unit-amplitude cross-covariance and optional ``(D, N, M)`` gradient."""
    cdef Py_ssize_t n = A1.shape[0], m = A2.shape[0], D = A1.shape[1]
    cdef Py_ssize_t i, j, q, j0
    cdef double mant, logs, val
    cdef AxisOut ax
    K_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] K = K_arr
    G_arr = np.empty((D if want_grad else 0, n, m), dtype=np.float64)
    cdef double[:, :, ::1] G = G_arr
    cdef double[::1] dl = np.empty(D, dtype=np.float64)
    if A2.shape[1] != D or H1.shape[1] != D or H2.shape[1] != D or ls.shape[0] != D:
        raise ValueError("dimension mismatch")
    with nogil:
        for i in range(n):
            j0 = i if symmetric else 0
            for j in range(j0, m):
                mant = 1.0
                logs = 0.0
                for q in range(D):
                    ax = axis(family, A1[i, q], H1[i, q], A2[j, q], H2[j, q], ls[q], mode)
                    mant = mant * ax.mant
                    logs = logs + ax.logs
                    dl[q] = ax.dlog
                val = mant * exp(logs)
                K[i, j] = val
                if want_grad:
                    for q in range(D):
                        G[q, i, j] = val * dl[q]
                if symmetric and j != i:
                    K[j, i] = val
                    if want_grad:
                        for q in range(D):
                            G[q, j, i] = val * dl[q]
    return K_arr, (G_arr if want_grad else None)


def cov_pairs(int family,
              const double[:, ::1] A1, const double[:, ::1] H1,
              const double[:, ::1] A2, const double[:, ::1] H2,
              const double[::1] ls, int mode=AUTO):
    """Unit-amplitude covariance of aligned row pairs."""
    cdef Py_ssize_t n = A1.shape[0], D = A1.shape[1]
    cdef Py_ssize_t i, q
    cdef double mant, logs
    cdef AxisOut ax
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    if A2.shape[0] != n or A2.shape[1] != D or ls.shape[0] != D:
        raise ValueError("dimension mismatch")
    with nogil:
        for i in range(n):
            mant = 1.0
            logs = 0.0
            for q in range(D):
                ax = axis(family, A1[i, q], H1[i, q], A2[i, q], H2[i, q], ls[q], mode)
                mant = mant * ax.mant
                logs = logs + ax.logs
            out[i] = mant * exp(logs)
    return out_arr


cdef inline double seg_dist2(double px, double py, double ax, double ay, double bx, double by) noexcept nogil:
    cdef double abx = bx - ax, aby = by - ay
    cdef double t = ((px - ax) * abx + (py - ay) * aby) / (abx * abx + aby * aby)
    if t < 0:
        t = 0
    elif t > 1:
        t = 1
    abx = px - ax - t * abx
    aby = py - ay - t * aby
    return abx * abx + aby * aby


cdef inline double box_gap2(double px, double py, double x0, double x1, double y0, double y1) noexcept nogil:
    cdef double gx = 0.0, gy = 0.0
    if px < x0:
        gx = x0 - px
    elif px > x1:
        gx = px - x1
    if py < y0:
        gy = y0 - py
    elif py > y1:
        gy = py - y1
    return gx * gx + gy * gy


cdef inline double scan_block(const double[:, ::1] P, Py_ssize_t s0, Py_ssize_t s1,
                             double px, double py, double best) noexcept nogil:
    cdef Py_ssize_t k
    cdef double d2
    for k in range(s0, s1):
        d2 = seg_dist2(px, py, P[k, 0], P[k, 1], P[k + 1, 0], P[k + 1, 1])
        if d2 < best:
            best = d2
    return best


cdef void block_boxes(const double[:, ::1] P, Py_ssize_t n_seg, Py_ssize_t size,
                      double[::1] x0, double[::1] x1, double[::1] y0, double[::1] y1) noexcept nogil:
    cdef Py_ssize_t b, k, s0, s1
    for b in range(x0.shape[0]):
        s0 = b * size
        s1 = min(s0 + size, n_seg)
        x0[b] = P[s0, 0]
        x1[b] = P[s1, 0]
        y0[b] = P[s0, 1]
        y1[b] = P[s0, 1]
        for k in range(s0 + 1, s1 + 1):
            if P[k, 1] < y0[b]:
                y0[b] = P[k, 1]
            if P[k, 1] > y1[b]:
                y1[b] = P[k, 1]


def polyline_distance(const double[:, ::1] P, const double[::1] qx, const double[::1] qy,
                      int block=16, int group=16):
    """Exact distance from each query to a polyline with increasing x.

    Segments are grouped into blocks, and blocks into groups, each with a
    bounding box.  The search walks groups outward from the query's x
    position, skipping any box farther than the best distance so far, and
    stops once the horizontal gap alone exceeds it.
    """
    cdef Py_ssize_t n_seg = P.shape[0] - 1, nq = qx.shape[0]
    cdef Py_ssize_t gsize = <Py_ssize_t>block * group
    cdef Py_ssize_t ng = (n_seg + gsize - 1) // gsize
    cdef Py_ssize_t nb = (n_seg + block - 1) // block
    cdef Py_ssize_t g, b, i, lo, hi, mid, left, right, b0, b1
    cdef double px, py, best, gl, gr
    if n_seg < 1:
        raise ValueError("polyline needs at least two vertices")
    bx0_a, bx1_a, by0_a, by1_a = (np.empty(nb) for _ in range(4))
    gx0_a, gx1_a, gy0_a, gy1_a = (np.empty(ng) for _ in range(4))
    out_a = np.empty(nq)
    cdef double[::1] bx0 = bx0_a, bx1 = bx1_a, by0 = by0_a, by1 = by1_a
    cdef double[::1] gx0 = gx0_a, gx1 = gx1_a, gy0 = gy0_a, gy1 = gy1_a
    cdef double[::1] out = out_a
    with nogil:
        block_boxes(P, n_seg, block, bx0, bx1, by0, by1)
        block_boxes(P, n_seg, gsize, gx0, gx1, gy0, gy1)
        for i in range(nq):
            px = qx[i]
            py = qy[i]
            # last group whose left edge is <= px
            lo = 0
            hi = ng - 1
            while lo < hi:
                mid = (lo + hi + 1) // 2
                if gx0[mid] <= px:
                    lo = mid
                else:
                    hi = mid - 1
            best = INFINITY
            left = lo
            right = lo + 1
            while True:
                gl = INFINITY
                gr = INFINITY
                if left >= 0:
                    gl = px - gx1[left]
                    gl = gl * gl if gl > 0 else 0.0
                if right < ng:
                    gr = gx0[right] - px
                    gr = gr * gr if gr > 0 else 0.0
                if gl >= best and gr >= best:
                    break
                if gl <= gr:
                    g = left
                    left -= 1
                else:
                    g = right
                    right += 1
                if box_gap2(px, py, gx0[g], gx1[g], gy0[g], gy1[g]) >= best:
                    continue
                b0 = g * group
                b1 = min(b0 + group, nb)
                for b in range(b0, b1):
                    if box_gap2(px, py, bx0[b], bx1[b], by0[b], by1[b]) < best:
                        best = scan_block(P, b * block, min(b * block + block, n_seg), px, py, best)
            out[i] = sqrt(best)
    return out_a
