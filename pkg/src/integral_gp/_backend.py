"""Select the covariance core at import time.

The compiled extension is used when importable; it provides the covariance
kernels and the polyline distance used by the synthetic scenarios.  Setting
the environment variable ``INTEGRAL_GP_BACKEND=python`` forces the NumPy
fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pycov

_compiled = None
if os.environ.get("INTEGRAL_GP_BACKEND", "").lower() != "python":
    try:
        from . import _ccov as _compiled  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on build
        _compiled = None

_active = "compiled" if _compiled is not None else "python"


def available() -> list[str]:
    return ["python"] + (["compiled"] if _compiled is not None else [])


def name() -> str:
    return _active


def use(backend: str) -> None:
    """Switch backend at runtime (``"python"`` or ``"compiled"``)."""
    global _active
    if backend not in available():
        raise ValueError(f"backend {backend!r} not available; have {available()}")
    _active = backend


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def cov_matrix(family, A1, H1, A2, H2, ls, want_grad=False, mode=0, symmetric=False):
    if _active == "compiled":
        return _compiled.cov_matrix(
            int(family), _c(A1), _c(H1), _c(A2), _c(H2), _c(ls), want_grad, mode, symmetric
        )
    return _pycov.cov_matrix(family, A1, H1, A2, H2, ls, want_grad, mode)


def cov_pairs(family, A1, H1, A2, H2, ls, mode=0):
    if _active == "compiled":
        return _compiled.cov_pairs(int(family), _c(A1), _c(H1), _c(A2), _c(H2), _c(ls), mode)
    return _pycov.cov_pairs(family, A1, H1, A2, H2, ls, mode)


def polyline_distance(P, qx, qy):
    """Distance from each ``(qx, qy)`` to the polyline ``P`` (x increasing)."""
    if _active == "compiled":
        return _compiled.polyline_distance(_c(P), _c(np.ravel(qx)), _c(np.ravel(qy)))
    return _pycov.polyline_distance(P, qx, qy)
