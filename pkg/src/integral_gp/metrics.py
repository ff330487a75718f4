"""Validation and classification metrics for grade estimates.

Ratio distortion measures the spread of model/reference ratios in log space.
Material categories are ordinal (waste < low grade < high grade), so the
signed category difference is meaningful, and the high-grade probability
follows from a Gaussian posterior at each cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy import special

__all__ = [
    "CategoryLabel",
    "DEFAULT_THRESHOLDS",
    "RatioDistortion",
    "sigma_R",
    "classify",
    "categorical_distance",
    "confusion_probs",
    "hg_probability",
    "threshold_sensitivity",
]

DEFAULT_THRESHOLDS = (55.0, 60.0)


class CategoryLabel(IntEnum):
    W = 1
    LG = 2
    HG = 3


@dataclass(frozen=True)
class RatioDistortion:
    sigma: float
    n_used: int
    n_rejected: int

    def __float__(self) -> float:
        return self.sigma


def sigma_R(model_means, reference_values) -> RatioDistortion:
    """Standard deviation of ``log(model / reference)``.

    Computed as ``std(log2(R)) * ln 2`` with the population (``ddof=0``)
    estimator.  Pairs where either value is not strictly positive are dropped
    and counted in ``n_rejected``.
    """
    m = np.asarray(model_means, dtype=float).reshape(-1)
    r = np.asarray(reference_values, dtype=float).reshape(-1)
    if m.shape != r.shape:
        raise ValueError(f"length mismatch: {m.size} model values, {r.size} reference values")
    ok = (m > 0) & (r > 0) & np.isfinite(m) & np.isfinite(r)
    n_ok = int(ok.sum())
    if n_ok == 0:
        raise ValueError("no strictly positive value pairs to compare")
    lr = np.log2(m[ok] / r[ok])
    return RatioDistortion(float(np.std(lr) * math.log(2.0)), n_ok, int(m.size - n_ok))


def _thresholds(thresholds):
    t1, t2 = (float(t) for t in thresholds)
    if not t1 < t2:
        raise ValueError(f"thresholds must be increasing, got ({t1}, {t2})")
    return t1, t2


def classify(mean, thresholds=DEFAULT_THRESHOLDS):
    """Category label(s) with left-closed intervals ``[t1, t2)`` for LG.

    Returns a :class:`CategoryLabel` for a scalar input and an ``int`` array of
    codes otherwise.
    """
    t1, t2 = _thresholds(thresholds)
    a = np.asarray(mean, dtype=float)
    codes = np.where(a < t1, 1, np.where(a < t2, 2, 3))
    if codes.ndim == 0:
        return CategoryLabel(int(codes))
    return codes.astype(int)


def _labels(x) -> np.ndarray:
    a = np.asarray(x).reshape(-1).astype(int)
    if np.any((a < 1) | (a > 3)):
        raise ValueError("category codes must be 1, 2 or 3")
    return a


def categorical_distance(model_labels, reference_labels):
    """Per-cell ``model - reference`` and its mean absolute and signed mean.

    Returns
    -------
    delta : ndarray of int
    mean_abs : float
    mean_signed : float
    """
    m = _labels(model_labels)
    r = _labels(reference_labels)
    if m.shape != r.shape:
        raise ValueError(f"length mismatch: {m.size} model labels, {r.size} reference labels")
    d = m - r
    if d.size == 0:
        return d, 0.0, 0.0
    return d, float(np.mean(np.abs(d))), float(np.mean(d))


def confusion_probs(model_labels, reference_labels):
    """Row-conditional ``p(model | reference)`` over the three categories.

    Rows whose reference class never occurs are NaN rather than zero.

    Returns
    -------
    P : ndarray, shape (3, 3)
    n_reference : ndarray, shape (3,)
        Counts per reference class (row marginals).
    n_model : ndarray, shape (3,)
        Counts per predicted class (column marginals).
    """
    m = _labels(model_labels)
    r = _labels(reference_labels)
    if m.shape != r.shape:
        raise ValueError(f"length mismatch: {m.size} model labels, {r.size} reference labels")
    C = np.zeros((3, 3), dtype=np.int64)
    np.add.at(C, (r - 1, m - 1), 1)
    n_ref = C.sum(axis=1)
    P = np.full((3, 3), np.nan)
    rows = n_ref > 0
    P[rows] = C[rows] / n_ref[rows, None]
    return P, n_ref, C.sum(axis=0)


def hg_probability(mean, std, threshold: float = 60.0):
    """``P(grade >= threshold)`` under ``N(mean, std**2)``.

    A zero standard deviation gives the indicator ``mean >= threshold``.
    """
    mu = np.asarray(mean, dtype=float)
    sd = np.asarray(std, dtype=float)
    if np.any(sd < 0):
        raise ValueError("standard deviation must be non-negative")
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (threshold - mu) / sd
        # 1 - Phi(z) = erfc(z / sqrt 2) / 2, accurate in the upper tail
        p = 0.5 * special.erfc(z / math.sqrt(2.0))
    p = np.where(sd == 0, (mu >= threshold).astype(float), p)
    return float(p) if p.ndim == 0 else p


def threshold_sensitivity(means, base=DEFAULT_THRESHOLDS, perturbed=(54.9, 59.9)) -> dict:
    """Cells whose label changes between two threshold pairs.

    Returns a dict with ``index``, ``old`` and ``new`` arrays for the changed
    cells, plus ``n_changed`` and ``n_total``.
    """
    mu = np.asarray(means, dtype=float).reshape(-1)
    old = classify(mu, base)
    new = classify(mu, perturbed)
    idx = np.flatnonzero(old != new)
    return {
        "index": idx,
        "old": old[idx],
        "new": new[idx],
        "n_changed": int(idx.size),
        "n_total": int(mu.size),
    }
