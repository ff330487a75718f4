"""Independent reference computations for the test-suite.

Nothing here calls the closed forms under test.  Kernel profiles come from
the general Matern formula (modified Bessel function) or direct exponentials,
support averages come from composite midpoint quadrature, GP quantities from
dense linear algebra on explicitly formed matrices.
"""

import math

import mpmath
import numpy as np
from scipy import special

NU = {"exp": 0.5, "matern32": 1.5, "matern52": 2.5}


def phi_ref(tag, t):
    """Kernel profile from the general Matern expression (or the SE Gaussian)."""
    t = np.abs(np.asarray(t, dtype=float))
    if tag == "se":
        return np.exp(-0.5 * t * t)
    nu = NU[tag]
    z = math.sqrt(2 * nu) * t
    with np.errstate(invalid="ignore", over="ignore"):
        val = 2 ** (1 - nu) / special.gamma(nu) * z**nu * special.kv(nu, z)
    return np.where(t == 0, 1.0, np.nan_to_num(val, nan=0.0))


def phi_mp(tag, t):
    t = abs(mpmath.mpf(t))
    if tag == "se":
        return mpmath.exp(-t * t / 2)
    if t == 0:
        return mpmath.mpf(1)
    nu = mpmath.mpf(NU[tag])
    z = mpmath.sqrt(2 * nu) * t
    return 2 ** (1 - nu) / mpmath.gamma(nu) * z**nu * mpmath.besselk(nu, z)


def Phi_mp(tag, t):
    """``int_0^t phi`` by adaptive mpmath quadrature."""
    return mpmath.quad(lambda s: phi_mp(tag, s), [0, 0, t] if t else [0, 0])


def _midpoint(f, breaks, n):
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        x = a + (np.arange(n) + 0.5) * (b - a) / n
        total += np.sum(f(x)) * (b - a) / n
    return total


def converged_midpoint(f, breaks, rtol=1e-8, n0=32, nmax=1 << 17):
    """Composite midpoint rule, doubling panels until successive values agree."""
    breaks = np.unique(np.asarray(breaks, dtype=float))
    prev = _midpoint(f, breaks, n0)
    n = n0
    while n < nmax:
        n *= 2
        cur = _midpoint(f, breaks, n)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            # midpoint error falls 4x per doubling; one Richardson step
            return cur + (cur - prev) / 3.0
        prev = cur
    return cur


def axis_average_ref(tag, a1, h1, a2, h2, l):
    """Average of ``phi((s - x) / l)`` over ``s`` in support 1 and ``x`` in support 2."""
    d = a1 - a2
    f = lambda u: phi_ref(tag, u / l)  # noqa: E731
    if h1 == 0 and h2 == 0:
        return float(phi_ref(tag, d / l))
    if h1 == 0 or h2 == 0:
        h = h1 or h2
        lo, hi = d - h / 2, d + h / 2
        return converged_midpoint(f, [lo, min(max(0.0, lo), hi), hi]) / h
    # lag u = s - x has a trapezoidal density: the overlap length of the boxes
    hs, hd = (h1 + h2) / 2, abs(h1 - h2) / 2
    w = lambda u: np.clip(hs - np.abs(u - d), 0.0, min(h1, h2))  # noqa: E731
    brk = [d - hs, d - hd, d + hd, d + hs]
    brk.append(min(max(0.0, d - hs), d + hs))
    return converged_midpoint(lambda u: w(u) * f(u), brk) / (h1 * h2)


def cov_ref(tag, amplitude, ls, A1, H1, A2, H2):
    out = amplitude
    for q in range(len(ls)):
        out *= axis_average_ref(tag, A1[q], H1[q], A2[q], H2[q], ls[q])
    return out


def central_diff(f, x, h):
    return (f(x + h) - f(x - h)) / (2 * h)


def second_diff(f, x, h):
    return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h)


def gp_dense(K, Ks, Kss_diag, y, noise):
    """Posterior mean/variance by explicit inverse; zero-mean on centred ``y``."""
    mu0 = y.mean()
    Ky = K + np.diag(noise**2)
    Kinv = np.linalg.inv(Ky)
    mean = mu0 + Ks.T @ Kinv @ (y - mu0)
    var = Kss_diag - np.einsum("ij,ik,kj->j", Ks, Kinv, Ks)
    return mean, var


def lml_dense(K, y, noise):
    from scipy.stats import multivariate_normal

    r = y - y.mean()
    return multivariate_normal(mean=np.zeros(len(y)), cov=K + np.diag(noise**2)).logpdf(r)


def polyline_distance_brute(P, qx, qy):
    """Exact distance to every segment, minimum taken explicitly."""
    a = P[:-1]
    b = P[1:]
    ab = b - a
    L2 = np.sum(ab * ab, axis=1)
    out = np.empty(len(qx))
    for i, (x, y) in enumerate(zip(qx, qy)):
        ap = np.array([x, y]) - a
        t = np.clip(np.sum(ap * ab, axis=1) / L2, 0, 1)
        c = a + t[:, None] * ab
        out[i] = np.sqrt(np.min(np.sum((c - [x, y]) ** 2, axis=1)))
    return out


def standard_normal_sf_mp(z):
    return float(mpmath.ncdf(-z))
