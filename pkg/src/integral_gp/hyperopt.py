"""Hyperparameter learning by maximising the log marginal likelihood.

Each start runs bounded L-BFGS-B on ``log(theta)`` with analytic gradients;
the best finite optimum over all starts wins.  Starts are drawn uniformly in
log space inside the bounds from a seeded generator, so a fixed seed gives a
bitwise-reproducible result on one platform.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize as sopt

from .gp import lml_and_grad
from .kernels import parse_family
from .supports import KernelSpec, as_supports

__all__ = ["OptimConfig", "OptimResult", "default_bounds", "start_box", "optimize", "optimize_full"]

log = logging.getLogger(__name__)

LENGTH_BOUNDS = (1e-6, 1e3)
NOISE_FLOOR = 1e-6
# log-space bounds need a strictly positive lower limit
_LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class OptimConfig:
    """Settings for :func:`optimize`.

    ``bounds`` maps ``"amplitude"``, ``"length_scale"`` (or ``"length_scale_<q>"``
    per axis) and ``"noise"`` to ``(lo, hi)`` pairs; missing entries fall back
    to :func:`default_bounds`.

    ``init="data"`` draws starts log-uniformly from :func:`start_box`, a range
    scaled to the data and clipped to the bounds; ``init="bounds"`` draws from
    the full bound box.  The bound box spans nine decades in length scale, and
    starts far outside the data scale sit on flat likelihood plateaus where the
    gradient vanishes.
    """

    n_starts: int = 10
    max_iters: int = 500
    tol: float = 1e-7
    bounds: dict = field(default_factory=dict)
    seed: int = 0
    init: str = "data"
    n_candidates: int = 0

    def __post_init__(self):
        if self.init not in ("data", "bounds"):
            raise ValueError(f"init must be 'data' or 'bounds', got {self.init!r}")
        if self.n_starts < 1:
            raise ValueError("n_starts must be at least 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        for key, (lo, hi) in self.bounds.items():
            if key == "noise":
                ok = lo >= 0
            else:
                ok = lo > 0
            if not ok or not hi > lo:
                raise ValueError(f"invalid bounds for {key}: ({lo}, {hi})")

    def with_seed(self, seed: int) -> "OptimConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class OptimResult:
    kernel: KernelSpec
    lml: float
    start_lml: list
    final_lml: list
    n_failed: int


def default_bounds(values, dim: int) -> np.ndarray:
    """``(dim + 2, 2)`` bounds in theta order ``[amplitude, l_1..l_D, noise]``.

    Length scales span ``[1e-6, 1e3]``.  Amplitude and noise are capped at
    twice the spread of the data; as ``amplitude`` is a variance its cap is
    ``(2 std)**2`` while the noise cap is ``2 std``.
    """
    std = float(np.std(values))
    if not std > 0:
        std = max(1.0, abs(float(np.mean(values)))) * 1e-3
    B = np.empty((dim + 2, 2))
    B[0] = (NOISE_FLOOR, (2 * std) ** 2)
    B[1:-1] = LENGTH_BOUNDS
    B[-1] = (NOISE_FLOOR, 2 * std)
    return B


def start_box(training, dim: int) -> np.ndarray:
    """Data-scaled ``(dim + 2, 2)`` range for random starts.

    Length scales span 1/20 to twice the extent of the sample footprints on
    each axis, amplitude 1/10 to 4 times the value variance and noise 1/100 to
    1/2 of the value spread.
    """
    lo = training.centroids - training.extents / 2
    hi = training.centroids + training.extents / 2
    span = hi.max(axis=0) - lo.min(axis=0)
    span = np.where(span > 0, span, 1.0)
    var = float(np.var(training.values))
    if not var > 0:
        var = 1.0
    std = math.sqrt(var)
    B = np.empty((dim + 2, 2))
    B[0] = (0.1 * var, 4.0 * var)
    B[1:-1, 0] = span / 20.0
    B[1:-1, 1] = 2.0 * span
    B[-1] = (0.01 * std, 0.5 * std)
    return B


def _resolve_bounds(cfg: OptimConfig, values, dim: int) -> np.ndarray:
    B = default_bounds(values, dim)
    b = cfg.bounds
    if "amplitude" in b:
        B[0] = b["amplitude"]
    for q in range(dim):
        if f"length_scale_{q}" in b:
            B[1 + q] = b[f"length_scale_{q}"]
        elif "length_scale" in b:
            B[1 + q] = b["length_scale"]
    if "noise" in b:
        B[-1] = b["noise"]
    B[:, 0] = np.maximum(B[:, 0], _LOG_FLOOR)
    if np.any(B[:, 1] <= B[:, 0]):
        raise ValueError(f"empty bound interval in {B.tolist()}")
    return B


def optimize_full(family, training, cfg: OptimConfig | None = None, noise_vec=None) -> OptimResult:
    """Multi-start optimisation returning per-start diagnostics."""
    cfg = cfg or OptimConfig()
    family = parse_family(family)
    training = as_supports(training)
    if len(training) < 2:
        raise ValueError("at least two training samples are needed to learn hyperparameters")
    dim = training.dim
    B = _resolve_bounds(cfg, training.values, dim)
    logB = np.log(B)
    # keep iterates strictly inside the box so theta never sits on a bound
    inner = np.column_stack([logB[:, 0] + 1e-9, logB[:, 1] - 1e-9])
    box = inner
    if cfg.init == "data":
        S = np.log(start_box(training, dim))
        box = np.column_stack([np.clip(S[:, 0], *inner.T), np.clip(S[:, 1], *inner.T)])
        # a start range entirely outside the bounds collapses onto one bound
        box[:, 1] = np.maximum(box[:, 1], box[:, 0])
    n = len(training)

    def negative(x):
        # per-sample scale keeps the first quasi-Newton step O(1) in log space
        k = KernelSpec.from_theta(family, np.exp(x))
        try:
            v, g = lml_and_grad(k, training, noise_vec)
        except np.linalg.LinAlgError:
            return math.inf, np.zeros_like(x)
        if not math.isfinite(v) or not np.all(np.isfinite(g)):
            return math.inf, np.zeros_like(x)
        return -v / n, -g * np.exp(x) / n

    rng = np.random.default_rng(cfg.seed)
    if cfg.n_candidates > cfg.n_starts:
        # global screen: keep the best of many random candidates as starts
        cand = rng.uniform(box[:, 0], box[:, 1], size=(cfg.n_candidates, len(B)))
        scores = np.array([negative(c)[0] for c in cand])
        starts = cand[np.argsort(scores, kind="stable")[: cfg.n_starts]]
    else:
        starts = rng.uniform(box[:, 0], box[:, 1], size=(cfg.n_starts, len(B)))

    best_x, best_v = None, -math.inf
    start_lml, final_lml = [], []
    failed = 0
    for x0 in starts:
        f0, _ = negative(x0)
        start_lml.append(-f0 * n)
        if not math.isfinite(f0):
            failed += 1
            final_lml.append(-math.inf)
            continue
        res = sopt.minimize(
            negative,
            x0,
            jac=True,
            method="L-BFGS-B",
            bounds=inner,
            options={"maxiter": cfg.max_iters, "gtol": cfg.tol / n, "ftol": 1e-12},
        )
        x = np.clip(res.x, inner[:, 0], inner[:, 1])
        v = -res.fun * n
        if not math.isfinite(v):
            failed += 1
            final_lml.append(-math.inf)
            continue
        # L-BFGS-B returns the best iterate, but guard against a worse end point
        if v < -f0 * n:
            x, v = x0, -f0 * n
        final_lml.append(v)
        if v > best_v:
            best_x, best_v = x, v
    if best_x is None:
        raise np.linalg.LinAlgError(
            f"all {cfg.n_starts} optimiser starts failed to factorise the covariance; "
            "try a larger noise lower bound"
        )
    log.debug("best LML %.6g over %d starts (%d failed)", best_v, cfg.n_starts, failed)
    kernel = KernelSpec.from_theta(family, np.exp(best_x))
    return OptimResult(kernel, float(best_v), start_lml, final_lml, failed)


def optimize(family, training, cfg: OptimConfig | None = None, noise_vec=None) -> KernelSpec:
    """Return the kernel with the highest log marginal likelihood over all starts."""
    return optimize_full(family, training, cfg, noise_vec).kernel
