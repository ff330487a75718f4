"""Fusion of a coarse block model with interval assays by heteroscedastic GP.

The block model supplies a prior grade for every block but no uncertainty.
Hyperparameters are learned from the assays alone, and the assay-only
posterior standard deviation at each block drives a per-block noise level:
blocks that the assays pin down well get a large noise (their block value is
overruled), blocks far from any assay get a small floor ``epsilon`` (their
block value is kept).  The final prediction is a GP over both sources with
the stacked per-sample noise.

Vertical position is the last axis.  Bench selection applies to 3-D data
when a bench top elevation is given; 2-D data and ``bench_top=None`` use all
supplied samples.

Interval ties go to the lower side: a centroid exactly on a bench boundary
belongs to the lower bench and an assay on a shared block edge belongs to the
lower-indexed block.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import gp, hyperopt
from .kernels import KernelFamily, parse_family
from .supports import KernelSpec, Supports, as_supports

__all__ = [
    "BENCH_HEIGHT",
    "EmptyBenchError",
    "BlockModel",
    "FusionConfig",
    "FusionReport",
    "select_benches",
    "lattice_index",
    "count_bh_per_block",
    "bh_density",
    "assign_epr_noise",
    "fuse",
]

log = logging.getLogger(__name__)

BENCH_HEIGHT = 10.0


class EmptyBenchError(ValueError):
    """No samples fall inside a requested elevation range."""


@dataclass(frozen=True, eq=False)
class BlockModel:
    """Regular lattice of equal blocks.

    ``origin`` is the centroid of the first block.  Blocks are ordered with
    the first axis varying slowest (C order over ``counts``).
    """

    origin: tuple
    cell_size: tuple
    counts: tuple
    values: np.ndarray

    def __post_init__(self):
        o = tuple(float(v) for v in self.origin)
        h = tuple(float(v) for v in self.cell_size)
        c = tuple(int(v) for v in self.counts)
        if not (len(o) == len(h) == len(c)):
            raise ValueError("origin, cell_size and counts must have the same length")
        if any(v <= 0 for v in h):
            raise ValueError("cell sizes must be positive")
        if any(v < 1 for v in c):
            raise ValueError("block counts must be at least 1")
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if vals.size != math.prod(c):
            raise ValueError(f"{vals.size} values for a lattice of {math.prod(c)} blocks")
        vals.setflags(write=False)
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "cell_size", h)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return len(self.counts)

    def __len__(self) -> int:
        return self.values.size

    def indices(self) -> np.ndarray:
        """``(n, D)`` integer lattice index of every block."""
        grids = np.meshgrid(*(np.arange(n) for n in self.counts), indexing="ij")
        return np.column_stack([g.reshape(-1) for g in grids])

    def centroids(self) -> np.ndarray:
        return np.asarray(self.origin) + self.indices() * np.asarray(self.cell_size)

    def cells(self) -> Supports:
        A = self.centroids()
        return Supports(A, np.broadcast_to(self.cell_size, A.shape), self.values)

    def subdivided(self, factor: int, axes=None) -> Supports:
        """Uniformly split every block ``factor`` times along ``axes``.

        ``axes`` defaults to the horizontal axes (all but the last in 3-D,
        both in 2-D).  Sub-blocks are ordered block by block.
        """
        factor = int(factor)
        if factor < 1:
            raise ValueError("subdivision factor must be at least 1")
        if axes is None:
            axes = tuple(range(2)) if self.dim >= 2 else (0,)
        cells = self.cells()
        if factor == 1:
            return cells
        split = np.ones(self.dim, dtype=int)
        split[list(axes)] = factor
        h = np.asarray(self.cell_size) / split
        offs = np.stack(
            np.meshgrid(*(np.arange(s) for s in split), indexing="ij"), axis=-1
        ).reshape(-1, self.dim)
        offs = (offs + 0.5) * h - np.asarray(self.cell_size) / 2
        A = (cells.centroids[:, None, :] + offs[None, :, :]).reshape(-1, self.dim)
        vals = np.repeat(cells.values, offs.shape[0])
        return Supports(A, np.broadcast_to(h, A.shape), vals)


@dataclass(frozen=True)
class FusionConfig:
    """Settings for :func:`fuse`.

    Attributes
    ----------
    bench_top : float or None
        Elevation ``Z`` of the drilled bench top.  Assays come from
        ``[Z - 10, Z]`` and blocks from ``[Z - 20, Z - 10]``.
    epsilon : float
        Block noise where no assay falls inside the block footprint.
    neighborhood_radius : int
        Count assays over the ``(2r + 1)``-block square around each block.
    subdiv : int
        Uniform horizontal subdivision of the prediction grid.
    use_epr : bool
        ``False`` drops the block values and predicts from assays only; the
        block model then only supplies the prediction grid.
    """

    bench_top: float | None = None
    epsilon: float = 0.01
    neighborhood_radius: int = 0
    subdiv: int = 1
    use_epr: bool = True
    bench_height: float = BENCH_HEIGHT

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.neighborhood_radius < 0:
            raise ValueError("neighborhood_radius must be non-negative")
        if self.subdiv < 1:
            raise ValueError("subdiv must be at least 1")
        if self.bench_top is not None and not math.isfinite(self.bench_top):
            raise ValueError("bench_top must be finite")


@dataclass(frozen=True, eq=False)
class FusionReport:
    kernel: KernelSpec
    mode: str
    epr_cells: Supports
    bh: Supports
    bh_noise: np.ndarray
    bh_uncertainty: np.ndarray
    bh_mean: np.ndarray
    bh_count: np.ndarray
    bh_density: float
    epr_noise: np.ndarray
    field: gp.PosteriorField
    lml: float = float("nan")
    config: FusionConfig = field(default_factory=FusionConfig)

    def __post_init__(self):
        for name in ("bh_noise", "bh_uncertainty", "bh_mean", "bh_count", "epr_noise"):
            getattr(self, name).setflags(write=False)


def _in_range(z, lo, hi, closed_lo):
    return ((z >= lo) if closed_lo else (z > lo)) & (z <= hi)


def select_benches(epr: Supports, bh: Supports, Z: float, height: float = BENCH_HEIGHT):
    """Blocks from the bench below ``Z`` and assays from the bench above.

    Blocks with centroid elevation in ``[Z - 2 height, Z - height]`` and
    assays in ``(Z - height, Z]``.  Returns ``(epr_idx, bh_idx)`` index arrays.
    """
    if not math.isfinite(Z):
        raise ValueError("bench elevation must be finite")
    ze = epr.centroids[:, -1]
    zb = bh.centroids[:, -1]
    lo_e, hi_e = Z - 2 * height, Z - height
    ei = np.flatnonzero(_in_range(ze, lo_e, hi_e, True))
    bi = np.flatnonzero(_in_range(zb, hi_e, Z, False))
    if ei.size == 0:
        raise EmptyBenchError(f"empty bench: no blocks with elevation in [{lo_e:g}, {hi_e:g}]")
    if bi.size == 0:
        raise EmptyBenchError(f"empty bench: no assays with elevation in ({hi_e:g}, {Z:g}]")
    return ei, bi


def lattice_index(coords, lo, size) -> np.ndarray:
    """Index of the cell ``(lo + i size, lo + (i+1) size]`` containing each coordinate.

    The first cell is closed on both sides; coordinates below ``lo`` map to
    negative indices.
    """
    u = (np.asarray(coords, dtype=float) - lo) / size
    idx = np.ceil(u).astype(np.int64) - 1
    return np.where(u == 0, 0, idx)


def count_bh_per_block(model: BlockModel, block_idx, bh: Supports, radius: int = 0) -> np.ndarray:
    """Assays whose horizontal position falls inside each block footprint.

    With ``radius > 0`` the footprint grows to the union of lattice
    neighbours within ``radius`` blocks on each horizontal axis.
    """
    hax = [0, 1] if model.dim >= 2 else [0]
    h = np.asarray(model.cell_size)[hax]
    lo = np.asarray(model.origin)[hax] - h / 2
    n = np.asarray(model.counts)[hax]
    I = np.column_stack([lattice_index(bh.centroids[:, q], lo[k], h[k]) for k, q in enumerate(hax)])
    inside = np.all((I >= 0) & (I < n), axis=1)
    H = np.zeros(tuple(n), dtype=np.int64)
    np.add.at(H, tuple(I[inside].T), 1)
    if radius:
        # box sum over the neighbourhood from a zero-padded cumulative sum
        r = int(radius)
        S = np.pad(H, [(1, 0)] * H.ndim)
        for ax in range(H.ndim):
            S = S.cumsum(axis=ax)
        idx = np.meshgrid(*(np.arange(m) for m in H.shape), indexing="ij")
        a = [np.clip(g - r, 0, m) for g, m in zip(idx, H.shape)]
        b = [np.clip(g + r + 1, 0, m) for g, m in zip(idx, H.shape)]
        if H.ndim == 2:
            H = S[b[0], b[1]] - S[a[0], b[1]] - S[b[0], a[1]] + S[a[0], a[1]]
        else:
            H = S[b[0]] - S[a[0]]
    B = model.indices()[np.asarray(block_idx)][:, hax]
    return H[tuple(B.T)]


def bh_density(counts) -> float:
    """Mean assay count over blocks with at least one assay (0 when none)."""
    c = np.asarray(counts)
    m = c > 0
    return float(c[m].mean()) if m.any() else 0.0


def assign_epr_noise(sigma_hat, counts, density: float, epsilon: float = 0.01) -> np.ndarray:
    """Per-block noise: ``density * (max sigma_hat - sigma_hat)`` or ``epsilon`` where the count is zero."""
    s = np.asarray(sigma_hat, dtype=float)
    c = np.asarray(counts)
    if s.shape != c.shape:
        raise ValueError(f"shape mismatch: sigma_hat {s.shape}, counts {c.shape}")
    if np.any(s < 0):
        raise ValueError("sigma_hat must be non-negative")
    if s.size == 0:
        return s.copy()
    return np.where(c != 0, density * (s.max() - s), epsilon)


def fuse(
    epr: BlockModel,
    bh,
    cfg: FusionConfig | None = None,
    opt: hyperopt.OptimConfig | None = None,
    family=KernelFamily.MATERN32,
) -> FusionReport:
    """Run the full fusion pipeline and return every intermediate quantity.

    Parameters
    ----------
    epr : BlockModel
        Block model; its cells are the prior observations and, optionally
        subdivided, the prediction grid.
    bh : Supports or sequence of SupportSample
        Assays.  Per-sample noise is used when present, otherwise the learned
        noise amplitude is applied to every assay.
    """
    cfg = cfg or FusionConfig()
    opt = opt or hyperopt.OptimConfig()
    family = parse_family(family)
    bh = as_supports(bh)
    cells = epr.cells()
    if cells.dim != bh.dim:
        raise ValueError(f"dimension mismatch: blocks {cells.dim}-D, assays {bh.dim}-D")

    if cfg.bench_top is not None and cells.dim == 3:
        ei, bi = select_benches(cells, bh, cfg.bench_top, cfg.bench_height)
    else:
        ei, bi = np.arange(len(cells)), np.arange(len(bh))
        if len(bh) == 0:
            raise EmptyBenchError("empty bench: no assays supplied")
    E = cells[ei]
    B = bh[bi]
    known = B.noise is not None and np.any(B.noise > 0)

    res = hyperopt.optimize_full(family, B, opt, noise_vec=B.noise if known else None)
    kernel = res.kernel
    nB = B.noise.copy() if known else np.full(len(B), kernel.base_noise)
    log.info("learned %s from %d assays (LML %.4g)", kernel, len(B), res.lml)

    bh_model = gp.fit(kernel, B, nB)
    bh_post = bh_model.predict(E)
    sigma_hat = bh_post.std
    counts = count_bh_per_block(epr, ei, B, cfg.neighborhood_radius)
    rho = bh_density(counts)
    nE = assign_epr_noise(sigma_hat, counts, rho, cfg.epsilon)

    if cfg.subdiv > 1:
        query = epr.subdivided(cfg.subdiv)
        per = cfg.subdiv ** min(2, epr.dim)
        query = query[(ei[:, None] * per + np.arange(per)).reshape(-1)]
    else:
        query = E
    if cfg.use_epr:
        mode = "fused"
        train = Supports.concat([B.with_noise(None), E.with_noise(None)])
        post = gp.fit(kernel, train, np.concatenate([nB, nE])).predict(query)
    else:
        mode = "bh_only"
        post = bh_model.predict(query) if query is not E else bh_post
    return FusionReport(
        kernel=kernel,
        mode=mode,
        epr_cells=E,
        bh=B,
        bh_noise=nB,
        bh_uncertainty=sigma_hat,
        bh_mean=bh_post.mean,
        bh_count=counts,
        bh_density=rho,
        epr_noise=nE,
        field=post,
        lml=res.lml,
        config=cfg,
    )

