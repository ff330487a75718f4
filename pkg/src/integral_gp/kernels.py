"""Scalar stationary kernel families and their antiderivatives.

Every family is written in unit-normalised form, ``phi(0) == 1``, as a
function of the scaled lag ``t = (x - s) / l``.  Besides ``phi`` and its
derivative, each family supplies a first antiderivative ``Phi`` (odd,
``Phi(0) == 0``) and a second antiderivative ``Psi`` (even) so that
averages of the kernel over intervals have closed forms.

For the exponential and Matern families ``Phi`` and ``Psi`` carry a leading
term (``A * sgn(t)`` and ``A * |t|``) that cancels whenever all arguments of a
difference share one sign.  The ``*_mod`` variants drop that term and move an
offset into the exponent, which keeps distant-support covariances and their
gradients finite in double precision.
"""

from __future__ import annotations

import enum
import math

import numpy as np
from scipy import special

__all__ = [
    "KernelFamily",
    "parse_family",
    "phi",
    "phi_prime",
    "Phi",
    "Psi",
    "phi_mod",
    "Phi_mod",
    "Psi_mod",
    "decay_rate",
    "leading_coefficient",
]

SQRT3 = math.sqrt(3.0)
SQRT5 = math.sqrt(5.0)
SQRT_HALF_PI = math.sqrt(math.pi / 2.0)


class KernelFamily(enum.IntEnum):
    """Supported separable kernel families.

    The integer values are shared with the compiled covariance core.
    """

    SE = 0
    EXP = 1
    MATERN32 = 2
    MATERN52 = 3

    @property
    def tag(self) -> str:
        return _TAGS[self]


_TAGS = {
    KernelFamily.SE: "se",
    KernelFamily.EXP: "exp",
    KernelFamily.MATERN32: "matern32",
    KernelFamily.MATERN52: "matern52",
}
_ALIASES = {
    "se": KernelFamily.SE,
    "squaredexponential": KernelFamily.SE,
    "rbf": KernelFamily.SE,
    "exp": KernelFamily.EXP,
    "exponential": KernelFamily.EXP,
    "matern32": KernelFamily.MATERN32,
    "matern52": KernelFamily.MATERN52,
}


def parse_family(tag) -> KernelFamily:
    """Resolve a family from a case-insensitive tag (``"matern32"`` etc.)."""
    if isinstance(tag, KernelFamily):
        return tag
    if isinstance(tag, (int, np.integer)):
        return KernelFamily(int(tag))
    key = str(tag).strip().lower().replace("_", "").replace("-", "").replace(" ", "")
    try:
        return _ALIASES[key]
    except KeyError:
        raise ValueError(
            f"unknown kernel family {tag!r}; expected one of se, exp, matern32, matern52"
        ) from None


def decay_rate(family: KernelFamily) -> float:
    """Exponential decay rate ``c`` in ``exp(-c |t|)``; undefined for SE."""
    family = parse_family(family)
    if family == KernelFamily.EXP:
        return 1.0
    if family == KernelFamily.MATERN32:
        return SQRT3
    if family == KernelFamily.MATERN52:
        return SQRT5
    raise ValueError("the squared exponential family has no linear decay rate")


def leading_coefficient(family: KernelFamily) -> float:
    """Saturation value ``A = lim Phi(t)`` as ``t -> +inf``."""
    family = parse_family(family)
    return {
        KernelFamily.SE: SQRT_HALF_PI,
        KernelFamily.EXP: 1.0,
        KernelFamily.MATERN32: 2.0 / SQRT3,
        KernelFamily.MATERN52: 8.0 / (3.0 * SQRT5),
    }[family]


def _scalar_out(x, t):
    return float(x) if np.ndim(t) == 0 else x


def phi(family, t):
    """Unit-normalised kernel profile ``phi(t)``."""
    family = parse_family(family)
    t = np.asarray(t, dtype=float)
    r = np.abs(t)
    if family == KernelFamily.SE:
        out = np.exp(-0.5 * t * t)
    elif family == KernelFamily.EXP:
        out = np.exp(-r)
    elif family == KernelFamily.MATERN32:
        out = (1.0 + SQRT3 * r) * np.exp(-SQRT3 * r)
    else:
        out = (1.0 + SQRT5 * r + (5.0 / 3.0) * t * t) * np.exp(-SQRT5 * r)
    return _scalar_out(out, t)


def phi_prime(family, t):
    """Derivative ``d phi / dt``; the exponential uses ``sgn(0) = 0``."""
    family = parse_family(family)
    t = np.asarray(t, dtype=float)
    r = np.abs(t)
    if family == KernelFamily.SE:
        out = -t * np.exp(-0.5 * t * t)
    elif family == KernelFamily.EXP:
        out = -np.sign(t) * np.exp(-r)
    elif family == KernelFamily.MATERN32:
        out = -3.0 * t * np.exp(-SQRT3 * r)
    else:
        out = (
            np.exp(-SQRT5 * r)
            * (10.0 * t - np.sign(t) * (5.0 * SQRT5 * t * t + 15.0 * r))
            / 3.0
        )
    return _scalar_out(out, t)


def Phi(family, t):
    """First antiderivative of ``phi`` with ``Phi(0) = 0``."""
    family = parse_family(family)
    t = np.asarray(t, dtype=float)
    r = np.abs(t)
    s = np.sign(t)
    if family == KernelFamily.SE:
        out = SQRT_HALF_PI * special.erf(t / math.sqrt(2.0))
    elif family == KernelFamily.EXP:
        out = s * (1.0 - np.exp(-r))
    elif family == KernelFamily.MATERN32:
        out = (2.0 / SQRT3) * s * (1.0 - (1.0 + 0.5 * SQRT3 * r) * np.exp(-SQRT3 * r))
    else:
        out = (s / 3.0) * (
            8.0 / SQRT5 - (8.0 / SQRT5 + 5.0 * r + SQRT5 * t * t) * np.exp(-SQRT5 * r)
        )
    return _scalar_out(out, t)


def Psi(family, t):
    """Second antiderivative of ``phi``: even, ``Psi'(0) = 0``."""
    family = parse_family(family)
    t = np.asarray(t, dtype=float)
    r = np.abs(t)
    if family == KernelFamily.SE:
        out = SQRT_HALF_PI * t * special.erf(t / math.sqrt(2.0)) + np.exp(-0.5 * t * t)
    elif family == KernelFamily.EXP:
        out = r + np.exp(-r)
    elif family == KernelFamily.MATERN32:
        out = (2.0 / SQRT3) * r + (1.0 + r / SQRT3) * np.exp(-SQRT3 * r)
    else:
        out = (
            (8.0 / SQRT5) * r + (3.0 + (7.0 / SQRT5) * r + t * t) * np.exp(-SQRT5 * r)
        ) / 3.0
    return _scalar_out(out, t)


# Tail decomposition used by the covariance code.  For r = |t| >= 0:
#   phi(t) = P(r) E(r)
#   Phi(t) = sgn(t) (A - Q(r) E(r))
#   Psi(t) = A r + S(r) E(r)
# with E(r) = exp(-c r), or exp(-r^2 / 2) for SE.  The polynomial (or
# scaled-erfc) factors never under/overflow, so all large-distance cancellation
# lives in E, which callers factor out against a reference lag.


def tail_factors(family, r):
    """Return ``(P, Q, S)`` evaluated at ``r >= 0`` (arrays)."""
    family = parse_family(family)
    r = np.asarray(r, dtype=float)
    if family == KernelFamily.SE:
        ex = special.erfcx(r / math.sqrt(2.0))
        return np.ones_like(r), SQRT_HALF_PI * ex, 1.0 - SQRT_HALF_PI * r * ex
    if family == KernelFamily.EXP:
        one = np.ones_like(r)
        return one, one, one
    if family == KernelFamily.MATERN32:
        return 1.0 + SQRT3 * r, 2.0 / SQRT3 + r, 1.0 + r / SQRT3
    return (
        1.0 + SQRT5 * r + (5.0 / 3.0) * r * r,
        (8.0 / SQRT5 + 5.0 * r + SQRT5 * r * r) / 3.0,
        1.0 + (7.0 / (3.0 * SQRT5)) * r + r * r / 3.0,
    )


def log_envelope(family, r):
    """``log E(r)``: ``-c r`` or ``-r^2 / 2``."""
    family = parse_family(family)
    r = np.asarray(r, dtype=float)
    if family == KernelFamily.SE:
        return -0.5 * r * r
    return -decay_rate(family) * r


def relative_envelope(family, r, r0):
    """``E(r) / E(r0)``, evaluated without forming either factor."""
    family = parse_family(family)
    r = np.asarray(r, dtype=float)
    if family == KernelFamily.SE:
        return np.exp(-0.5 * (r - r0) * (r + r0))
    return np.exp(-decay_rate(family) * (r - r0))


def _check_mod_family(family) -> KernelFamily:
    family = parse_family(family)
    if family == KernelFamily.SE:
        raise ValueError("no offset-stabilised form exists for the squared exponential family")
    return family


def phi_mod(family, t, offset):
    """``phi`` with exponent ``|t| - offset``, i.e. ``exp(c*offset) * phi(t)``."""
    family = _check_mod_family(family)
    t = np.asarray(t, dtype=float)
    r = np.abs(t)
    P, _, _ = tail_factors(family, r)
    return _scalar_out(P * relative_envelope(family, r, offset), t)


def Phi_mod(family, t, offset, sign=None):
    """``Phi`` without its ``A sgn(t)`` leading term, offset in the exponent.

    ``sign`` overrides ``sgn(t)``; distant-support callers pass the sign of the
    centroid separation so that arguments exactly at zero stay consistent with
    the rest of the difference.
    """
    family = _check_mod_family(family)
    t = np.asarray(t, dtype=float)
    r = np.abs(t)
    s = np.sign(t) if sign is None else np.asarray(sign, dtype=float)
    _, Q, _ = tail_factors(family, r)
    return _scalar_out(-s * Q * relative_envelope(family, r, offset), t)


def Psi_mod(family, t, offset):
    """``Psi`` without its ``A |t|`` leading term, offset in the exponent."""
    family = _check_mod_family(family)
    t = np.asarray(t, dtype=float)
    r = np.abs(t)
    _, _, S = tail_factors(family, r)
    return _scalar_out(S * relative_envelope(family, r, offset), t)
