"""Gaussian process regression over point, interval and block supports."""

__version__ = "0.1.0"

from ._backend import name as backend_name
from .gp import GpModel, PosteriorField, fit, lml, lml_and_grad, predict
from .hyperopt import OptimConfig, optimize
from .integral_cov import assemble_K, cov_uu, cov_yy
from .kernels import KernelFamily
from .supports import KernelSpec, SupportSample, Supports

__all__ = [
    "__version__",
    "backend_name",
    "KernelFamily",
    "KernelSpec",
    "SupportSample",
    "Supports",
    "GpModel",
    "PosteriorField",
    "OptimConfig",
    "assemble_K",
    "cov_uu",
    "cov_yy",
    "fit",
    "predict",
    "lml",
    "lml_and_grad",
    "optimize",
]
