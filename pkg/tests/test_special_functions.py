import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import ellipe, ellipj, ellipk

from models.galileo import from_exact, normalized_residual, to_zero_mean
from utils.errors import DomainError
from utils.fourier_core import make_grid
from utils.special_functions import (
    bo_exact,
    bo_gamma_for_speed,
    elliptic_K_E,
    jacobi_cn,
    jacobi_sn_cn_dn,
    kdv_exact,
    kdv_parameters,
)


@pytest.mark.parametrize("k", [0.0, 0.3, 0.7, 0.99, 0.999999])
def test_complete_integrals_match_scipy(k):
    big_k, big_e = elliptic_K_E(k)
    # scipy uses the parameter m = k^2
    assert_allclose(big_k, ellipk(k * k), rtol=1e-12)
    assert_allclose(big_e, ellipe(k * k), rtol=1e-12)

@pytest.mark.parametrize("k", [0.1, 0.5, 0.9, 0.999])
def test_legendre_relation(k):
    big_k, big_e = elliptic_K_E(k)
    big_kp, big_ep = elliptic_K_E(np.sqrt(1.0 - k * k))
    assert_allclose(big_e * big_kp + big_ep * big_k - big_k * big_kp, np.pi / 2.0, rtol=1e-12)



@pytest.mark.parametrize("k", [0.1, 0.5, 0.9, 0.99])
def test_jacobi_functions_match_scipy(k):
    u = np.linspace(-4.0, 4.0, 41)
    sn, cn, dn = jacobi_sn_cn_dn(u, k)
    sn_ref, cn_ref, dn_ref, _ = ellipj(u, k * k)
    assert_allclose(sn, sn_ref, atol=1e-12)
    assert_allclose(cn, cn_ref, atol=1e-12)
    assert_allclose(dn, dn_ref, atol=1e-12)


def test_zero_modulus_reduces_to_trigonometric():
    big_k, big_e = elliptic_K_E(0.0)
    assert_allclose([big_k, big_e], [np.pi / 2, np.pi / 2], rtol=1e-15)
    assert_allclose(jacobi_cn(0.4, 0.0), np.cos(0.4), rtol=1e-15)


@pytest.mark.parametrize("k", [-0.1, 1.0, 1.0 - 1e-13, float("nan")])
def test_modulus_out_of_range(k):
    with pytest.raises(DomainError):
        elliptic_K_E(k)


def test_bo_wave_parameters():
    gamma = 0.5
    w = bo_exact(gamma, make_grid(128))
    omega = 1.0 / np.tanh(gamma)
    assert_allclose([w.omega, w.c, w.b, w.mu], [omega, omega - 2.0, omega - 1.0, omega], rtol=1e-14)
    assert_allclose(w.phi.mean(), 1.0, rtol=1e-12)


def test_bo_wave_solves_the_equation():
    w = from_exact(bo_exact(0.5, make_grid(128)))
    assert normalized_residual(w) / max(1.0, w.phi.max_norm() ** 2) < 1e-10


def test_bo_gamma_for_speed_inverts_speed():
    for c in (-0.5, 0.0, 3.0):
        assert_allclose(bo_exact(bo_gamma_for_speed(c), make_grid(64)).c, c, atol=1e-13)
    with pytest.raises(DomainError):
        bo_gamma_for_speed(-1.0)


@pytest.mark.parametrize("k", [0.2, 0.6, 0.9])
def test_kdv_wave_solves_the_equation(k):
    exact = kdv_exact(k, make_grid(64))
    w = from_exact(exact)
    assert normalized_residual(w) / max(1.0, w.phi.max_norm() ** 2) < 1e-10
    zero_mean = to_zero_mean(w)
    assert_allclose(zero_mean.c, exact.c, rtol=1e-10, atol=1e-12)
    assert_allclose(zero_mean.b, exact.b, rtol=1e-10)


def test_kdv_parameters_approach_bifurcation_point():
    omega, c, b = kdv_parameters(1e-3)
    assert abs(c + 1.0) < 1e-5
    assert abs(omega - 1.0) < 1e-5
    assert abs(b) < 1e-5


def test_kdv_modulus_must_be_inside_unit_interval():
    with pytest.raises(DomainError):
        kdv_exact(0.0, make_grid(64))
