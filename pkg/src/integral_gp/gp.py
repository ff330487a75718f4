"""Gaussian process training state, posterior inference and marginal likelihood.

Training data may mix any support types; the covariance comes from
:mod:`.integral_cov`.  The prior mean is the arithmetic mean of the training
values: it is subtracted before solving and added back to predictions, so far
from the data the posterior reverts to the data mean rather than to zero.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .integral_cov import JITTER, assemble_K, assemble_K_grad, prior_variance
from .supports import KernelSpec, Supports, as_supports

__all__ = [
    "IllConditionedError",
    "ConditioningWarning",
    "GpModel",
    "PosteriorField",
    "fit",
    "predict",
    "lml",
    "lml_grad",
    "lml_and_grad",
]

MAX_JITTER_RETRIES = 3
JITTER_GROWTH = 10.0
NEG_VARIANCE_WARN = 1e-6


class IllConditionedError(np.linalg.LinAlgError):
    """Cholesky factorisation failed even after jitter escalation."""


class ConditioningWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class GpModel:
    """Factorised training state; immutable once built by :func:`fit`."""

    kernel: KernelSpec
    training: Supports
    noise_vec: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    prior_mean: float
    jitter: float = field(default=JITTER)

    def __post_init__(self):
        for name in ("noise_vec", "chol", "alpha"):
            getattr(self, name).setflags(write=False)

    @property
    def n_train(self) -> int:
        return len(self.training)

    def K_y(self) -> np.ndarray:
        """Training covariance including noise and jitter (rebuilt, not cached)."""
        K = assemble_K(self.kernel, self.training, add_noise_diag=True, noise_vec=self.noise_vec)
        K[np.diag_indices_from(K)] += (self.jitter - JITTER) * self.kernel.amplitude
        return K

    def predict(self, query, want_cov: bool = False) -> "PosteriorField":
        return predict(self, query, want_cov)


@dataclass(frozen=True, eq=False)
class PosteriorField:
    """Posterior mean and latent standard deviation at query supports."""

    locations: Supports
    mean: np.ndarray
    std: np.ndarray
    cov: np.ndarray | None = None

    def __len__(self) -> int:
        return self.mean.shape[0]


def _resolve_noise(kernel: KernelSpec, n: int, noise_vec) -> np.ndarray:
    if noise_vec is None:
        return np.full(n, kernel.base_noise)
    noise_vec = np.asarray(noise_vec, dtype=float).reshape(-1)
    if noise_vec.shape[0] != n:
        raise ValueError(f"noise vector has length {noise_vec.shape[0]}, expected {n}")
    if np.any(noise_vec < 0) or not np.all(np.isfinite(noise_vec)):
        raise ValueError("noise amplitudes must be finite and non-negative")
    return noise_vec


def _cholesky(K: np.ndarray, amplitude: float):
    """Lower Cholesky factor with jitter escalation; returns ``(L, jitter)``."""
    jitter = JITTER
    n = K.shape[0]
    diag = np.diag_indices(n)
    work = K.copy()
    for attempt in range(MAX_JITTER_RETRIES + 1):
        L, info = linalg.lapack.dpotrf(work, lower=1, clean=1, overwrite_a=0)
        if info == 0:
            return L, jitter
        if info < 0:  # pragma: no cover - argument error, not conditioning
            raise ValueError(f"dpotrf argument {-info} invalid")
        if attempt == MAX_JITTER_RETRIES:
            break
        extra = jitter * (JITTER_GROWTH - 1.0)
        work[diag] += extra * amplitude
        jitter *= JITTER_GROWTH
    pivot = work[info - 1, info - 1] - np.sum(L[info - 1, : info - 1] ** 2)
    raise IllConditionedError(
        f"ill-conditioned covariance: pivot {info - 1} of {n} is {pivot:.3e} "
        f"after jitter {jitter:.1e} x amplitude; raise the noise lower bound"
    )


def _factor(kernel: KernelSpec, training: Supports, noise):
    K = assemble_K(kernel, training, add_noise_diag=True, noise_vec=noise)
    L, jitter = _cholesky(K, kernel.amplitude)
    mu0 = float(np.mean(training.values))
    r = training.values - mu0
    alpha = linalg.cho_solve((L, True), r, check_finite=False)
    return L, jitter, mu0, r, alpha


def fit(kernel: KernelSpec, training, noise_vec=None) -> GpModel:
    """Factorise the training covariance and solve for the weight vector.

    Parameters
    ----------
    kernel : KernelSpec
    training : Supports or sequence of SupportSample
    noise_vec : array_like, optional
        Per-sample noise amplitudes.  Defaults to ``kernel.base_noise`` for
        every sample.

    Raises
    ------
    IllConditionedError
        If ``K_y`` cannot be factorised after jitter escalation.
    """
    training = as_supports(training)
    if len(training) == 0:
        raise ValueError("at least one training sample is required")
    if training.dim != kernel.dim:
        raise ValueError(f"dimension mismatch: training {training.dim}, kernel {kernel.dim}")
    noise = _resolve_noise(kernel, len(training), noise_vec)
    L, jitter, mu0, _, alpha = _factor(kernel, training, noise)
    return GpModel(kernel, training, noise.copy(), L, alpha, mu0, jitter)


def predict(model: GpModel, query, want_cov: bool = False, chunk: int = 4096) -> PosteriorField:
    """Posterior mean and latent standard deviation at query supports.

    The variance is that of the noise-free field averaged over each query
    support.  Small negative variances from round-off are clamped to zero; a
    warning is emitted when one exceeds ``1e-6 * amplitude`` in magnitude.
    """
    query = as_supports(query)
    if query.dim != model.kernel.dim:
        raise ValueError(f"dimension mismatch: query {query.dim}, model {model.kernel.dim}")
    k = model.kernel
    m = len(query)
    mean = np.empty(m)
    var = np.empty(m)
    V_all = [] if want_cov else None
    for start in range(0, m, chunk):
        q = query[np.arange(start, min(m, start + chunk))]
        Ks = assemble_K(k, model.training, q)
        mean[start : start + len(q)] = model.prior_mean + Ks.T @ model.alpha
        V = linalg.solve_triangular(model.chol, Ks, lower=True, check_finite=False)
        var[start : start + len(q)] = prior_variance(k, q) - np.einsum("ij,ij->j", V, V)
        if want_cov:
            V_all.append(V)
    worst = var.min() if m else 0.0
    if worst < -NEG_VARIANCE_WARN * k.amplitude:
        warnings.warn(
            f"posterior variance {worst:.3e} is negative beyond round-off; "
            "the training covariance may be ill-conditioned",
            ConditioningWarning,
            stacklevel=2,
        )
    std = np.sqrt(np.clip(var, 0.0, None))
    cov = None
    if want_cov:
        V = np.hstack(V_all)
        cov = assemble_K(k, query) - V.T @ V
        cov = 0.5 * (cov + cov.T)
    return PosteriorField(query, mean, std, cov)


def lml(kernel: KernelSpec, training, noise_vec=None) -> float:
    """Log marginal likelihood of the mean-centred training values."""
    training = as_supports(training)
    noise = _resolve_noise(kernel, len(training), noise_vec)
    L, _, _, r, alpha = _factor(kernel, training, noise)
    n = len(training)
    return float(-0.5 * r @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * math.log(2 * math.pi))


def lml_and_grad(kernel: KernelSpec, training, noise_vec=None):
    """Log marginal likelihood and its gradient with respect to ``kernel.theta``.

    The gradient is ordered ``[amplitude, l_1..l_D, base_noise]``.  When an
    explicit ``noise_vec`` is given the noise is not a free parameter and its
    gradient entry is zero.
    """
    training = as_supports(training)
    n = len(training)
    noise = _resolve_noise(kernel, n, noise_vec)
    K, G = assemble_K_grad(kernel, training)
    Ky = K.copy()
    Ky[np.diag_indices(n)] += noise**2 + JITTER * kernel.amplitude
    L, jitter = _cholesky(Ky, kernel.amplitude)
    r = training.values - np.mean(training.values)
    alpha = linalg.cho_solve((L, True), r, check_finite=False)
    value = -0.5 * r @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * math.log(2 * math.pi)

    Kinv = linalg.cho_solve((L, True), np.eye(n), check_finite=False)
    W = np.outer(alpha, alpha) - Kinv
    grad = np.empty(kernel.dim + 2)
    # dK_y / d amplitude = K / amplitude + jitter * I
    grad[0] = 0.5 * (np.sum(W * K) / kernel.amplitude + jitter * np.trace(W))
    for q in range(kernel.dim):
        grad[1 + q] = 0.5 * np.sum(W * G[q])
    grad[-1] = kernel.base_noise * np.trace(W) if noise_vec is None else 0.0
    return float(value), grad


def lml_grad(kernel: KernelSpec, training, noise_vec=None, wrt=None):
    """Gradient of :func:`lml`; a single entry when ``wrt`` is an index."""
    _, g = lml_and_grad(kernel, training, noise_vec)
    return g if wrt is None else float(g[wrt])
