import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from integral_gp.kernels import (
    KernelFamily,
    Phi,
    Phi_mod,
    Psi,
    Psi_mod,
    leading_coefficient,
    parse_family,
    phi,
    phi_mod,
    phi_prime,
    tail_factors,
)
from oracles import Phi_mp, central_diff, phi_mp, phi_ref

FAMILIES = list(KernelFamily)
TAGS = [f.tag for f in FAMILIES]
NON_SE = [f for f in FAMILIES if f != KernelFamily.SE]
lags = st.floats(-30, 30, allow_nan=False)


@pytest.mark.parametrize("tag", ["se", "SE", "rbf", "Matern32", "matern52", "exponential", 2])
def test_parse_family_accepts_aliases(tag):
    assert isinstance(parse_family(tag), KernelFamily)


def test_parse_family_rejects_unknown():
    with pytest.raises(ValueError):
        parse_family("cubic")


@pytest.mark.parametrize("fam", FAMILIES)
def test_tag_round_trip(fam):
    assert parse_family(fam.tag) is fam


@pytest.mark.parametrize("tag", TAGS)
@pytest.mark.parametrize("t", [0.0, 1e-3, 0.37, 1.0, 2.5, -4.0, 11.0])
def test_phi_matches_high_precision_reference(tag, t):
    assert phi(tag, t) == pytest.approx(float(phi_mp(tag, t)), rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("tag", TAGS)
def test_phi_matches_bessel_form_on_grid(tag):
    t = np.linspace(-12, 12, 601)
    np.testing.assert_allclose(phi(tag, t), phi_ref(tag, t), rtol=1e-11, atol=1e-300)


@pytest.mark.parametrize("tag", TAGS)
@pytest.mark.parametrize("t", [0.2, 1.3, -2.7, 6.0])
def test_Phi_is_integral_from_zero(tag, t):
    assert Phi(tag, t) == pytest.approx(float(Phi_mp(tag, t)), rel=1e-12)


@pytest.mark.parametrize("tag", TAGS)
@pytest.mark.parametrize("t", [0.4, -1.9, 5.0])
def test_Psi_difference_is_integral_of_Phi(tag, t):
    ref = mpmath.quad(lambda s: Phi_mp(tag, s), [0, t])
    assert Psi(tag, t) - Psi(tag, 0.0) == pytest.approx(float(ref), rel=1e-10)


@pytest.mark.parametrize("tag", TAGS)
def test_phi_prime_against_finite_difference(tag):
    t = np.linspace(-8, 8, 321)
    t = t[np.abs(t) > 1e-2]
    fd = central_diff(lambda x: phi(tag, x), t, 1e-6)
    np.testing.assert_allclose(phi_prime(tag, t), fd, atol=1e-8)


@pytest.mark.parametrize("fam", FAMILIES)
@given(t=lags)
@settings(max_examples=60, deadline=None)
def test_symmetry(fam, t):
    assert phi(fam, t) == phi(fam, -t)
    assert Phi(fam, t) == -Phi(fam, -t)
    assert Psi(fam, t) == Psi(fam, -t)


@pytest.mark.parametrize("fam", FAMILIES)
@given(t=st.floats(0, 40))
@settings(max_examples=60, deadline=None)
def test_bounds_and_monotone_tail(fam, t):
    assert 0.0 <= phi(fam, t) <= 1.0
    assert phi(fam, t + 0.1) <= phi(fam, t)
    # Phi saturates at the leading coefficient
    assert 0.0 <= Phi(fam, t) <= leading_coefficient(fam) + 1e-15


@pytest.mark.parametrize("fam", FAMILIES)
def test_Phi_limit_is_leading_coefficient(fam):
    A = leading_coefficient(fam)
    assert A == pytest.approx(float(Phi_mp(fam.tag, mpmath.inf)), rel=1e-12)
    assert Phi(fam, 60.0) == pytest.approx(A, rel=1e-14)


@pytest.mark.parametrize("fam", FAMILIES)
@given(r=st.floats(0, 25))
@settings(max_examples=60, deadline=None)
def test_tail_decomposition_reassembles(fam, r):
    P, Q, S = tail_factors(fam, r)
    E = math.exp(-0.5 * r * r) if fam == KernelFamily.SE else math.exp(
        -{KernelFamily.EXP: 1.0, KernelFamily.MATERN32: math.sqrt(3), KernelFamily.MATERN52: math.sqrt(5)}[fam] * r
    )
    A = leading_coefficient(fam)
    assert float(P * E) == pytest.approx(phi(fam, r), rel=1e-12, abs=1e-300)
    assert float(A - Q * E) == pytest.approx(Phi(fam, r), rel=1e-12, abs=1e-15)
    assert float(A * r + S * E) == pytest.approx(Psi(fam, r), rel=1e-12)


@pytest.mark.parametrize("fam", NON_SE)
@given(t=st.floats(-20, 20), off=st.floats(0, 15))
@settings(max_examples=60, deadline=None)
def test_modified_forms_are_rescaled_originals(fam, t, off):
    c = {KernelFamily.EXP: 1.0, KernelFamily.MATERN32: math.sqrt(3), KernelFamily.MATERN52: math.sqrt(5)}[fam]
    scale = math.exp(c * off)
    A = leading_coefficient(fam)
    assert phi_mod(fam, t, off) == pytest.approx(scale * phi(fam, t), rel=1e-12, abs=1e-300)
    s = math.copysign(1.0, t) if t else 0.0
    # the reference subtraction cancels, so compare on the scale of the cancelled terms
    tol = 1e-14 * scale * (1 + abs(t))
    assert abs(Phi_mod(fam, t, off) - scale * (Phi(fam, t) - A * s)) <= tol
    assert abs(Psi_mod(fam, t, off) - scale * (Psi(fam, t) - A * abs(t))) <= tol


def test_modified_forms_reject_se():
    with pytest.raises(ValueError):
        phi_mod("se", 1.0, 0.0)


@pytest.mark.parametrize("fam", NON_SE)
def test_modified_forms_stay_finite_far_out(fam):
    # original tail terms underflow to zero; offset forms stay O(1)
    assert phi(fam, 800.0) == 0.0
    v = Phi_mod(fam, 800.0, 799.0)
    assert np.isfinite(v) and v != 0.0


def test_scalar_in_scalar_out():
    assert isinstance(phi("se", 0.5), float)
    assert isinstance(Psi("matern32", np.array([0.5])), np.ndarray)


def test_offset_form_fixtures():
    assert phi_mod("exp", 5.0, 5.0) == pytest.approx(1.0, rel=1e-15)
    assert Psi_mod("matern32", 3.0, 3.0) == pytest.approx(1 + 3 / math.sqrt(3), rel=1e-13)
    s5 = math.sqrt(5)
    ref = -(8 / s5 + 20 + 16 * s5) / 3 * mpmath.e ** (-2 * s5)
    assert Phi_mod("matern52", 4.0, 2.0) == pytest.approx(float(ref), rel=1e-13)


def test_matern52_profile_fixture():
    s5 = mpmath.sqrt(5)
    ref = (1 + 2 * s5 + mpmath.mpf(20) / 3) * mpmath.e ** (-2 * s5)
    assert phi("matern52", 2.0) == pytest.approx(float(ref), rel=1e-14)
