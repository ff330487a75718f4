"""Covariances between point, line and volume supports.

For a separable kernel the covariance of two box supports factorises over
axes.  Each axis contributes one of three closed forms, chosen by which
supports have zero extent on that axis:

* point-point:   ``phi((a1 - a2) / l)``
* point-line:    ``(l / h) * rho``, with ``rho`` a difference of two ``Phi``
* volume-volume: ``l**2 / (h1 h2) * R``, with ``R`` a signed sum of four ``Psi``

Two extended supports far smaller than the length scale lose relative
accuracy of roughly ``eps * l**2 / (h1 * h2)`` to cancellation inside ``R``;
extents below ``1e-12 * l`` are treated as exact points.

The heavy lifting happens in the backend selected by :mod:`._backend`; this
module adds the amplitude, noise diagonal and the per-sample convenience API.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import _backend, _pycov
from ._pycov import AUTO, MODIFIED, STANDARD
from .kernels import parse_family
from .supports import KernelSpec, SupportSample, Supports, as_supports

__all__ = [
    "AUTO",
    "STANDARD",
    "MODIFIED",
    "JITTER",
    "R_fn",
    "rho_fn",
    "cov_uu",
    "cov_yy",
    "dcov_dl",
    "assemble_K",
    "assemble_K_grad",
    "prior_variance",
]

# Relative diagonal jitter added to every square training covariance.
JITTER = 1e-10


def _mode(mode) -> int:
    if isinstance(mode, str):
        return {"auto": AUTO, "standard": STANDARD, "modified": MODIFIED}[mode.lower()]
    return int(mode)


def R_fn(family, a1, a2, h1, h2, l, mode=AUTO):
    """Four-term ``Psi`` combination for two intervals along one axis.

    Equals ``h1 * h2 / l**2`` times the average of ``phi((s - x) / l)`` over
    ``s`` in the first interval and ``x`` in the second.  Vectorised over all
    arguments.
    """
    family = parse_family(family)
    a1, a2, h1, h2, l = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a1, a2, h1, h2, l)))
    if np.any(h1 <= 0) or np.any(h2 <= 0) or np.any(l <= 0):
        raise ValueError("R_fn needs positive extents and length scale")
    mant, logs, _ = _pycov._volume_volume(family, a1 - a2, h1, h2, l, _mode(mode))
    out = mant * (h1 * h2) / (l * l) * np.exp(logs)
    return float(out) if out.ndim == 0 else out


def rho_fn(family, a, h, x, l, mode=AUTO):
    """``Phi((a + h/2 - x) / l) - Phi((a - h/2 - x) / l)``, computed stably."""
    family = parse_family(family)
    a, h, x, l = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, h, x, l)))
    if np.any(h <= 0) or np.any(l <= 0):
        raise ValueError("rho_fn needs a positive extent and length scale")
    mant, logs, _ = _pycov._point_line(family, a - x, h, l, _mode(mode))
    out = mant * h / l * np.exp(logs)
    return float(out) if out.ndim == 0 else out


def _pair_arrays(k: KernelSpec, s1: SupportSample, s2: SupportSample):
    if not (s1.dim == s2.dim == k.dim):
        raise ValueError(f"dimension mismatch: supports {s1.dim}/{s2.dim}, kernel {k.dim}")
    A1 = np.asarray([s1.centroid])
    H1 = np.asarray([s1.extent])
    A2 = np.asarray([s2.centroid])
    H2 = np.asarray([s2.extent])
    return A1, H1, A2, H2


def cov_uu(k: KernelSpec, s1: SupportSample, s2: SupportSample, mode=AUTO) -> float:
    """Noise-free covariance of the averages of the latent field over two supports."""
    A1, H1, A2, H2 = _pair_arrays(k, s1, s2)
    K = _backend.cov_pairs(k.family, A1, H1, A2, H2, np.asarray(k.length_scales), _mode(mode))
    return float(k.amplitude * K[0])


def cov_yy(k: KernelSpec, s1: SupportSample, s2: SupportSample, same_index: bool, mode=AUTO) -> float:
    """Covariance of two observations; adds ``s1.noise**2`` when they are the same sample."""
    c = cov_uu(k, s1, s2, mode)
    if same_index:
        c += s1.noise**2
    return c


def dcov_dl(k: KernelSpec, s1: SupportSample, s2: SupportSample, axis: int, mode=AUTO) -> float:
    """Partial derivative of :func:`cov_uu` with respect to ``length_scales[axis]``."""
    A1, H1, A2, H2 = _pair_arrays(k, s1, s2)
    if not 0 <= axis < k.dim:
        raise IndexError(f"axis {axis} out of range for {k.dim}-D kernel")
    _, G = _backend.cov_matrix(
        k.family, A1, H1, A2, H2, np.asarray(k.length_scales), True, _mode(mode)
    )
    return float(k.amplitude * G[axis, 0, 0])


def _noise_diag(k: KernelSpec, n: int, noise_vec):
    if noise_vec is None:
        return np.full(n, k.base_noise**2)
    noise_vec = np.asarray(noise_vec, dtype=float)
    if noise_vec.shape != (n,):
        raise ValueError(f"noise vector has length {noise_vec.size}, expected {n}")
    return noise_vec**2


def assemble_K(
    k: KernelSpec,
    rows,
    cols=None,
    add_noise_diag: bool = False,
    noise_vec=None,
    mode=AUTO,
):
    """Covariance matrix between two support collections.

    Parameters
    ----------
    k : KernelSpec
    rows, cols : Supports or sequence of SupportSample
        ``cols=None`` means ``cols = rows``; the result is then exactly
        symmetric.
    add_noise_diag : bool
        Add ``diag(noise_vec)**2`` (or ``k.base_noise**2``) and the relative
        jitter ``JITTER * amplitude``.  Only valid for square assemblies.
    noise_vec : array_like, optional
        Per-row noise amplitudes.
    """
    K, _ = _assemble(k, rows, cols, add_noise_diag, noise_vec, False, mode)
    return K


def assemble_K_grad(k: KernelSpec, rows, cols=None, add_noise_diag=False, noise_vec=None, mode=AUTO):
    """Like :func:`assemble_K` but also returns ``dK/dl`` with shape ``(D, N, M)``."""
    return _assemble(k, rows, cols, add_noise_diag, noise_vec, True, mode)


def _assemble(k, rows, cols, add_noise_diag, noise_vec, want_grad, mode):
    rows = as_supports(rows)
    symmetric = cols is None
    cols = rows if symmetric else as_supports(cols)
    if rows.dim != k.dim or cols.dim != k.dim:
        raise ValueError(f"dimension mismatch: supports {rows.dim}/{cols.dim}, kernel {k.dim}")
    if add_noise_diag and not symmetric and cols is not rows:
        raise ValueError("noise diagonal requires rows and cols to be the same collection")
    ls = np.asarray(k.length_scales, dtype=float)
    K, G = _backend.cov_matrix(
        k.family,
        rows.centroids,
        rows.extents,
        cols.centroids,
        cols.extents,
        ls,
        want_grad,
        _mode(mode),
        symmetric,
    )
    K = k.amplitude * K
    if G is not None:
        G = k.amplitude * G
    if add_noise_diag:
        n = len(rows)
        idx = np.diag_indices(n)
        K[idx] += _noise_diag(k, n, noise_vec) + JITTER * k.amplitude
    return K, G


def prior_variance(k: KernelSpec, supports) -> np.ndarray:
    """Diagonal ``cov_uu(s, s)`` for every support, without noise."""
    s = as_supports(supports)
    ls = np.asarray(k.length_scales, dtype=float)
    return k.amplitude * _backend.cov_pairs(
        k.family, s.centroids, s.extents, s.centroids, s.extents, ls, AUTO
    )
