"""Complete elliptic integrals, Jacobi elliptic functions and exact periodic waves.

The exact Benjamin-Ono (alpha = 1) and KdV (alpha = 2) waves serve as
ground-truth oracles for the numerical solvers.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from utils.errors import DomainError
from utils.fourier_core import FourierGrid, PeriodicField, field_from_values, inner_product

LOGGER = logging.getLogger(__name__)

MODULUS_CAP = 1.0 - 1e-12
AGM_TOL = 1e-16
AGM_MAX_STEPS = 64


def _check_modulus(k: float) -> float:
    k = float(k)
    if not np.isfinite(k) or k < 0.0 or k >= 1.0:
        raise DomainError(f"elliptic modulus k must lie in [0, 1), got {k}")
    if k > MODULUS_CAP:
        raise DomainError(f"elliptic modulus k={k!r} exceeds the cap 1 - 1e-12 (K diverges)")
    return k


def _agm_sequence(k: float) -> Tuple[List[float], List[float]]:
    """AGM iterates (a_n, c_n) starting from a0 = 1, b0 = sqrt(1 - k^2), c0 = k."""
    a, b = 1.0, np.sqrt((1.0 - k) * (1.0 + k))
    a_seq, c_seq = [a], [k]
    for _ in range(AGM_MAX_STEPS):
        if abs(c_seq[-1]) <= AGM_TOL * a:
            break
        a, b, c = 0.5 * (a + b), np.sqrt(a * b), 0.5 * (a - b)
        a_seq.append(a)
        c_seq.append(c)
    return a_seq, c_seq


def elliptic_K_E(k: float) -> Tuple[float, float]:
    """
    Complete elliptic integrals of the first and second kinds.

    Args:
        k: Elliptic modulus in [0, 1)

    Returns:
        Tuple (K(k), E(k))
    """
    k = _check_modulus(k)
    a_seq, c_seq = _agm_sequence(k)
    big_k = np.pi / (2.0 * a_seq[-1])
    weighted = sum(2.0 ** (n - 1) * c * c for n, c in enumerate(c_seq))
    return float(big_k), float(big_k * (1.0 - weighted))


def jacobi_sn_cn_dn(u, k: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Jacobi sn, cn, dn by the descending Landen transformation; vectorized over u."""
    k = _check_modulus(k)
    u = np.asarray(u, dtype=float)
    a_seq, c_seq = _agm_sequence(k)
    steps = len(a_seq) - 1
    phi = (2.0 ** steps) * a_seq[-1] * u
    for n in range(steps, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c_seq[n] / a_seq[n] * np.sin(phi)))
    sn, cn = np.sin(phi), np.cos(phi)
    dn = np.sqrt(1.0 - (k * sn) ** 2)
    return sn, cn, dn


def jacobi_cn(u, k: float):
    """cn(u, k); returns a float for scalar u."""
    _, cn, _ = jacobi_sn_cn_dn(u, k)
    return float(cn) if np.ndim(cn) == 0 else cn


@dataclass(frozen=True)
class ExactWave:
    """Closed-form periodic wave in normalized form with its zero-mean parameters."""
    alpha: float
    parameter: float
    omega: float
    phi: PeriodicField
    c: float
    b: float
    mu: float


def bo_exact(gamma: float, grid: FourierGrid) -> ExactWave:
    """
    Benjamin-Ono periodic wave sinh(g) / (cosh(g) - cos x).

    Args:
        gamma: Decay rate of the Fourier coefficients (gamma > 0)
        grid: Collocation grid

    Returns:
        ExactWave with omega = coth(gamma), c = omega - 2, b = omega - 1, mu = omega
    """
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    omega = 1.0 / np.tanh(gamma)
    values = np.sinh(gamma) / (np.cosh(gamma) - np.cos(grid.nodes))
    return ExactWave(
        alpha=1.0,
        parameter=float(gamma),
        omega=float(omega),
        phi=field_from_values(grid, values),
        c=float(omega - 2.0),
        b=float(omega - 1.0),
        mu=float(omega),
    )


def bo_gamma_for_speed(c: float) -> float:
    """gamma with coth(gamma) = c + 2, i.e. the BO wave at zero-mean speed c > -1."""
    if not c > -1.0:
        raise DomainError(f"BO waves exist for c > -1, got {c}")
    return float(np.arctanh(1.0 / (c + 2.0)))


def kdv_parameters(k: float) -> Tuple[float, float, float]:
    """(omega, c, b) of the cnoidal KdV wave with modulus k, from the closed forms."""
    big_k, big_e = elliptic_K_E(k)
    k2 = k * k
    s = np.sqrt(1.0 - k2 + k2 * k2)
    ratio = big_e / big_k
    omega = 4.0 * big_k ** 2 * s / np.pi ** 2
    c = 4.0 * big_k ** 2 / np.pi ** 2 * (2.0 - k2 - 3.0 * ratio)
    b = 4.0 * big_k ** 4 / np.pi ** 4 * (-3.0 * (1.0 - k2) + (2.0 - k2) * 6.0 * ratio - 9.0 * ratio ** 2)
    return float(omega), float(c), float(b)


def kdv_exact(k: float, grid: FourierGrid) -> ExactWave:
    """Cnoidal KdV wave 2K^2/pi^2 [s + 1 - 2k^2 + 3k^2 cn^2(Kx/pi; k)], s = sqrt(1 - k^2 + k^4)."""
    if not 0.0 < k < 1.0:
        raise DomainError(f"kdv_exact needs 0 < k < 1, got {k}")
    big_k, _ = elliptic_K_E(k)
    omega, c, b = kdv_parameters(k)
    k2 = k * k
    s = np.sqrt(1.0 - k2 + k2 * k2)
    cn = jacobi_sn_cn_dn(big_k * grid.nodes / np.pi, k)[1]
    values = 2.0 * big_k ** 2 / np.pi ** 2 * (s + 1.0 - 2.0 * k2 + 3.0 * k2 * cn ** 2)
    phi = field_from_values(grid, values)
    mu = inner_product(phi, phi) / (2.0 * np.pi)
    return ExactWave(alpha=2.0, parameter=float(k), omega=omega, phi=phi, c=c, b=b, mu=float(mu))
