"""Observation supports and kernel hyperparameters.

A support is an axis-aligned box described by its centroid and per-axis
extent.  Zero extent along an axis means the support is a point along that
axis, so points, line intervals, rectangles and volumes share one
representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .kernels import KernelFamily, parse_family

__all__ = ["SupportSample", "Supports", "KernelSpec", "as_supports"]


@dataclass(frozen=True)
class SupportSample:
    """One observation: centroid, extent, value and noise amplitude."""

    centroid: tuple
    extent: tuple
    value: float = 0.0
    noise: float = 0.0

    def __post_init__(self):
        c = tuple(float(v) for v in self.centroid)
        h = tuple(float(v) for v in self.extent)
        if len(c) != len(h):
            raise ValueError("centroid and extent must have the same length")
        if not all(np.isfinite(c)) or not all(np.isfinite(h)):
            raise ValueError("support coordinates must be finite")
        if any(v < 0 for v in h):
            raise ValueError("support extents must be non-negative")
        if self.noise < 0:
            raise ValueError("noise amplitude must be non-negative")
        object.__setattr__(self, "centroid", c)
        object.__setattr__(self, "extent", h)
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "noise", float(self.noise))

    @property
    def dim(self) -> int:
        return len(self.centroid)


class Supports:
    """Column-oriented collection of supports.

    Parameters
    ----------
    centroids, extents : array_like, shape (n, D)
    values : array_like, shape (n,), optional
    noise : array_like, shape (n,), optional
        Per-sample noise amplitudes; ``None`` when not supplied by the data.
    """

    def __init__(self, centroids, extents=None, values=None, noise=None):
        A = np.atleast_2d(np.asarray(centroids, dtype=float))
        if A.size == 0:
            A = A.reshape(0, A.shape[-1] if A.ndim == 2 else 0)
        H = np.zeros_like(A) if extents is None else np.asarray(extents, dtype=float).reshape(A.shape)
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(H))):
            raise ValueError("support coordinates must be finite")
        if np.any(H < 0):
            raise ValueError("support extents must be non-negative")
        n = A.shape[0]
        y = np.zeros(n) if values is None else np.asarray(values, dtype=float).reshape(n)
        if noise is not None:
            noise = np.asarray(noise, dtype=float).reshape(n)
            if np.any(noise < 0) or not np.all(np.isfinite(noise)):
                raise ValueError("noise amplitudes must be finite and non-negative")
        self.centroids = np.ascontiguousarray(A)
        self.extents = np.ascontiguousarray(H)
        self.values = y
        self.noise = noise

    @classmethod
    def from_samples(cls, samples: Iterable[SupportSample]) -> "Supports":
        samples = list(samples)
        if not samples:
            raise ValueError("at least one sample is required")
        dims = {s.dim for s in samples}
        if len(dims) != 1:
            raise ValueError(f"samples have inconsistent dimensions {sorted(dims)}")
        return cls(
            [s.centroid for s in samples],
            [s.extent for s in samples],
            [s.value for s in samples],
            [s.noise for s in samples],
        )

    def __len__(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def __getitem__(self, idx) -> "Supports":
        if isinstance(idx, (int, np.integer)):
            idx = [idx]
        return Supports(
            self.centroids[idx],
            self.extents[idx],
            self.values[idx],
            None if self.noise is None else self.noise[idx],
        )

    def sample(self, i: int) -> SupportSample:
        n = 0.0 if self.noise is None else self.noise[i]
        return SupportSample(tuple(self.centroids[i]), tuple(self.extents[i]), self.values[i], n)

    def __iter__(self):
        return (self.sample(i) for i in range(len(self)))

    def with_values(self, values) -> "Supports":
        return Supports(self.centroids, self.extents, values, self.noise)

    def with_noise(self, noise) -> "Supports":
        return Supports(self.centroids, self.extents, self.values, noise)

    def as_points(self) -> "Supports":
        """Collapse every support to its centroid."""
        return Supports(self.centroids, np.zeros_like(self.extents), self.values, self.noise)

    @staticmethod
    def concat(parts: Sequence["Supports"]) -> "Supports":
        parts = [p for p in parts if len(p)]
        if not parts:
            raise ValueError("nothing to concatenate")
        noise = None
        if any(p.noise is not None for p in parts):
            noise = np.concatenate(
                [p.noise if p.noise is not None else np.zeros(len(p)) for p in parts]
            )
        return Supports(
            np.vstack([p.centroids for p in parts]),
            np.vstack([p.extents for p in parts]),
            np.concatenate([p.values for p in parts]),
            noise,
        )

    def __repr__(self) -> str:
        return f"Supports(n={len(self)}, dim={self.dim})"


def as_supports(data) -> Supports:
    """Accept a :class:`Supports`, one :class:`SupportSample` or a sequence of them."""
    if isinstance(data, Supports):
        return data
    if isinstance(data, SupportSample):
        return Supports.from_samples([data])
    return Supports.from_samples(data)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus hyperparameters.

    ``amplitude`` is the signal variance (value units squared),
    ``length_scales`` one positive length per axis and ``base_noise`` the
    homoscedastic noise amplitude (value units).
    """

    family: KernelFamily
    amplitude: float
    length_scales: tuple
    base_noise: float = 0.0
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "family", parse_family(self.family))
        ls = tuple(float(v) for v in np.atleast_1d(self.length_scales))
        if not ls or any(not (v > 0) for v in ls):
            raise ValueError("length scales must be strictly positive")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be strictly positive")
        if self.base_noise < 0:
            raise ValueError("base noise must be non-negative")
        object.__setattr__(self, "length_scales", ls)
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "base_noise", float(self.base_noise))

    @property
    def dim(self) -> int:
        return len(self.length_scales)

    @property
    def theta(self) -> np.ndarray:
        """Hyperparameter vector ``[amplitude, l_1..l_D, base_noise]``."""
        return np.array([self.amplitude, *self.length_scales, self.base_noise])

    @classmethod
    def from_theta(cls, family, theta) -> "KernelSpec":
        theta = np.asarray(theta, dtype=float)
        return cls(family, theta[0], tuple(theta[1:-1]), theta[-1])

    def to_dict(self) -> dict:
        return {
            "kernel": self.family.tag,
            "amplitude": self.amplitude,
            "length_scales": list(self.length_scales),
            "base_noise": self.base_noise,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(d["kernel"], d["amplitude"], tuple(d["length_scales"]), d.get("base_noise", 0.0))
