"""Synthetic folded-boundary scenarios for point versus integral GP comparisons.

A smooth boundary curve splits a 2-D section into an upper low-grade region
and a lower high-grade region.  The attribute falls off linearly with the
distance to the boundary above it and rises (faster, with a small jump)
below it.  Two scenarios share the construction; the second compresses the
boundary horizontally by a factor of two.

Sampling layouts are fixed: two vertical strings of short-interval samples,
a handful of long vertical intervals, and a 26 x 10 grid of square inference
blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _backend
from .supports import Supports

__all__ = [
    "Scenario",
    "target_f",
    "threshold_tau",
    "sample_layout",
    "support_average",
    "inference_blocks",
    "extract_boundary",
    "boundary_rmse",
    "field_rmse",
    "near_support_mask",
    "interface_mask",
    "SCENARIOS",
]

SCENARIOS = ("fold1", "fold2")
BLOCK_SIZE = 0.25
BLOCK_ORIGIN = (0.125, -0.575)
BLOCK_COUNTS = (26, 10)
TAU_GRID = (2000, 1200)


def gamma1(x):
    return 1.0 + np.sin(0.1135 * x) + np.cos(0.85 * x + math.pi / 5.0)


@dataclass(frozen=True)
class Scenario:
    """One synthetic section.

    Parameters
    ----------
    name : {"fold1", "fold2"}
    kappa, delta : float
        Slope multiplier and value jump below the boundary.
    n_segments : int
        Polyline resolution used for the distance map.
    """

    name: str = "fold1"
    kappa: float = 2.3
    delta: float = 0.25
    x_range: tuple = (0.0, 2.0 * math.pi)
    y_range: tuple = (-0.7, 3.0)
    n_segments: int = 10_000
    grid_shape: tuple = field(default=TAU_GRID)

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.name!r}; expected one of {SCENARIOS}")

    @classmethod
    def from_id(cls, which) -> "Scenario":
        """Accept ``1``/``2`` or ``"fold1"``/``"fold2"``."""
        if str(which) in ("1", "2"):
            return cls(f"fold{which}")
        return cls(str(which))

    @property
    def compression(self) -> float:
        return 1.0 if self.name == "fold1" else 2.0

    def boundary(self, x):
        """Boundary height at ``x``."""
        return gamma1(self.compression * np.asarray(x, dtype=float))

    @cached_property
    def _polyline(self):
        xs = np.linspace(self.x_range[0], self.x_range[1], self.n_segments + 1)
        return np.column_stack([xs, self.boundary(xs)])

    def distance(self, x, y):
        """Euclidean distance to the boundary polyline (segment projection)."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        d = _backend.polyline_distance(self._polyline, x.ravel(), y.ravel())
        return d.reshape(x.shape)

    def above(self, x, y):
        """Membership of the upper (low-grade) region, ``y > boundary(x)``."""
        return np.asarray(y) > self.boundary(x)

    @cached_property
    def eval_grid(self):
        nx, ny = self.grid_shape
        gx = np.linspace(*self.x_range, nx)
        gy = np.linspace(*self.y_range, ny)
        return np.meshgrid(gx, gy)

    @cached_property
    def _grid_fields(self):
        X, Y = self.eval_grid
        d = self.distance(X, Y)
        up = self.above(X, Y)
        return d, up

    @cached_property
    def d_max(self) -> float:
        """Largest distance to the boundary over the upper region of the evaluation grid."""
        d, up = self._grid_fields
        return float(d[up].max())

    def f(self, x, y):
        d = self.distance(x, y)
        up = self.above(x, y)
        return np.where(up, self.d_max - d, self.kappa * d + self.d_max + self.delta)


def target_f(scn: Scenario, x, y):
    """Synthetic attribute at ``(x, y)``; vectorised."""
    out = scn.f(x, y)
    return float(out) if np.ndim(out) == 0 else out


def threshold_tau(scn: Scenario, grid=None) -> float:
    """Class-weighted decision threshold between the two regions.

    ``tau = w max_upper(f) + (1 - w) min_lower(f)`` with ``w`` the upper
    region's share of the summed region means.  ``grid`` is an optional
    ``(X, Y)`` pair; the scenario's dense evaluation grid is used otherwise.
    """
    if grid is None:
        d, up = scn._grid_fields
        fv = np.where(up, scn.d_max - d, scn.kappa * d + scn.d_max + scn.delta)
    else:
        X, Y = grid
        fv = scn.f(X, Y)
        up = scn.above(X, Y)
    f1, f2 = fv[up], fv[~up]
    w1, w2 = f1.mean(), f2.mean()
    w = w1 / (w1 + w2)
    return float(w * f1.max() + (1.0 - w) * f2.min())


def _gauss_panels(lo, hi, breaks, n_panels, nodes, weights):
    """Composite Gauss-Legendre nodes/weights on [lo, hi], splitting at ``breaks``."""
    edges = [lo] + [b for b in sorted(breaks) if lo < b < hi] + [hi]
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        cuts = np.linspace(a, b, n_panels + 1)
        half = 0.5 * np.diff(cuts)
        mid = 0.5 * (cuts[:-1] + cuts[1:])
        xs.append((mid[:, None] + half[:, None] * nodes[None, :]).ravel())
        ws.append((half[:, None] * weights[None, :]).ravel())
    return np.concatenate(xs), np.concatenate(ws)


def _average_once(scn, c, h, n_panels, order=8):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    cx, cy = c
    hx, hy = h
    if hx > 0:
        xs, wx = _gauss_panels(cx - hx / 2, cx + hx / 2, [], n_panels, nodes, weights)
        wx = wx / hx
    else:
        xs, wx = np.array([cx]), np.array([1.0])
    if hy == 0:
        return float(np.sum(wx * scn.f(xs, np.full_like(xs, cy))))
    # split each vertical line at the boundary crossing, where f jumps
    X, Y, W = [], [], []
    for x, w in zip(xs, wx):
        ys, wy = _gauss_panels(cy - hy / 2, cy + hy / 2, [float(scn.boundary(x))], n_panels, nodes, weights)
        X.append(np.full_like(ys, x))
        Y.append(ys)
        W.append(w * wy / hy)
    X, Y, W = np.concatenate(X), np.concatenate(Y), np.concatenate(W)
    return float(np.sum(W * scn.f(X, Y)))


def support_average(scn: Scenario, centroid, extent, rtol: float = 1e-6, max_panels: int = 256) -> float:
    """Average of the target over an axis-aligned support, refined until converged."""
    c = tuple(float(v) for v in centroid)
    h = tuple(float(v) for v in extent)
    if h[0] == 0 and h[1] == 0:
        return target_f(scn, *c)
    n = 2
    prev = _average_once(scn, c, h, n)
    while n < max_panels:
        n *= 2
        cur = _average_once(scn, c, h, n)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-12):
            return cur
        prev = cur
    return prev


_POINT_STRINGS = (
    [(0.5, 1.0 + 0.1 * i) for i in range(11)] + [(5.8, 1.6 + 0.1 * i) for i in range(11)]
)
_LINES = {
    "fold1": [
        (1.8, 0.65, 1.0),
        (3.0, -0.25, 0.5),
        (3.0, 0.5, 1.0),
        (4.0, 0.6, 1.0),
        (4.75, 2.0, 1.0),
    ],
    "fold2": [
        (1.2, 0.25, 0.5),
        (1.2, 0.75, 0.5),
        (1.2, 1.25, 0.5),
        (2.0, 1.15, 1.0),
        (2.0, 1.9, 0.5),
        (3.0, 1.2, 1.0),
        (3.0, 2.2, 1.0),
        (4.0, 1.1, 1.0),
        (4.0, 2.1, 1.0),
        (5.0, 1.0, 0.5),
        (5.0, 1.5, 0.5),
    ],
}


def inference_blocks(size: float = BLOCK_SIZE, origin=BLOCK_ORIGIN, counts=BLOCK_COUNTS) -> Supports:
    """Square inference blocks, x varying slowest (column-major over the section)."""
    nx, ny = counts
    xs = origin[0] + size * np.arange(nx)
    ys = origin[1] + size * np.arange(ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    A = np.column_stack([X.ravel(), Y.ravel()])
    return Supports(A, np.full_like(A, size))


def sample_layout(scn: Scenario, which: str, with_values: bool = True) -> Supports:
    """Fixed sampling layouts: ``"points"``, ``"lines"`` or ``"blocks"``.

    Values are the target averaged over each support.
    """
    if which == "points":
        A = np.array(_POINT_STRINGS)
        H = np.tile([0.0, 0.1], (len(A), 1))
    elif which == "lines":
        L = np.array(_LINES[scn.name])
        A = L[:, :2]
        H = np.column_stack([np.zeros(len(L)), L[:, 2]])
    elif which == "blocks":
        S = inference_blocks()
        A, H = S.centroids, S.extents
    else:
        raise ValueError(f"unknown layout {which!r}; expected points, lines or blocks")
    values = None
    if with_values:
        values = [support_average(scn, a, h) for a, h in zip(A, H)]
    return Supports(A, H, values)


def extract_boundary(mean, tau: float, y_centres):
    """Height where each column first crosses ``tau``, scanning down from the top.

    Parameters
    ----------
    mean : array_like, shape (n_columns, n_rows)
        Field on the block grid, rows ordered by increasing height.
    tau : float
    y_centres : array_like, shape (n_rows,)

    Returns
    -------
    ndarray, shape (n_columns,)
        Crossing height by linear interpolation between row centres; NaN
        where a column never crosses.
    """
    M = np.asarray(mean, dtype=float)
    yc = np.asarray(y_centres, dtype=float)
    out = np.full(M.shape[0], np.nan)
    for c, col in enumerate(M):
        s = col - tau
        if s[-1] == 0.0:
            out[c] = yc[-1]
            continue
        for j in range(len(col) - 1, 0, -1):
            hi, lo = s[j], s[j - 1]
            if lo == 0.0 or (lo > 0) != (hi > 0):
                out[c] = yc[j] + (yc[j - 1] - yc[j]) * hi / (hi - lo)
                break
    return out


def boundary_rmse(estimate, groundtruth) -> float:
    """RMS difference over columns where the estimate exists."""
    e = np.asarray(estimate, dtype=float)
    g = np.asarray(groundtruth, dtype=float)
    ok = np.isfinite(e) & np.isfinite(g)
    if not ok.any():
        raise ValueError("no columns to compare")
    return float(np.sqrt(np.mean((e[ok] - g[ok]) ** 2)))


def field_rmse(field, target, mask=None) -> float:
    """RMS difference over masked cells."""
    f = np.asarray(field, dtype=float)
    t = np.asarray(target, dtype=float)
    m = np.ones(f.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not m.any():
        raise ValueError("mask selects no cells")
    return float(np.sqrt(np.mean((f[m] - t[m]) ** 2)))


def near_support_mask(cells: Supports, samples: Supports, radius: float = 1.0):
    """Cells whose centre lies within ``radius`` of any sample footprint."""
    C = cells.centroids
    lo = samples.centroids - samples.extents / 2
    hi = samples.centroids + samples.extents / 2
    # distance from each centre to each box
    gap = np.maximum(0.0, np.maximum(lo[None] - C[:, None], C[:, None] - hi[None]))
    dist = np.sqrt(np.sum(gap**2, axis=-1))
    return np.any(dist <= radius, axis=1)


def interface_mask(scn: Scenario, cells: Supports, band: float = BLOCK_SIZE):
    """Cells whose centre lies within ``band`` of the boundary curve."""
    C = cells.centroids
    return scn.distance(C[:, 0], C[:, 1]) <= band
