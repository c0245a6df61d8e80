"""Small-amplitude (Stokes) expansions near the bifurcation point omega = 1, c = -1."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from models.galileo import NormalizedWave, ZeroMeanWave, normalized_residual, zero_mean_residual
from utils.errors import DomainError
from utils.fourier_core import FourierGrid, field_from_function

LOGGER = logging.getLogger(__name__)

# omega_2 changes sign here: supercritical above, subcritical below
ALPHA_ZERO = np.log(3.0) / np.log(2.0) - 1.0
# small-amplitude slope of mu(omega) vanishes here
ALPHA_STAR = (np.log(5.0) - np.log(3.0)) / np.log(2.0)


@dataclass(frozen=True)
class StokesCoeffs:
    alpha: float
    omega2: float
    phi2_mean: float
    phi2_cos2: float
    phi3_cos3: float


def stokes_coefficients(alpha: float) -> StokesCoeffs:
    """
    Corrections of the Stokes expansion phi = 1 + a cos x + a^2 phi2 + a^3 phi3.

    Args:
        alpha: Dispersion exponent (alpha > 0)

    Returns:
        StokesCoeffs with omega2 = 1 - 1/(2(2^a - 1))
    """
    if not alpha > 0:
        raise DomainError(f"Stokes expansion needs alpha > 0, got {alpha}")
    two = 2.0 ** alpha - 1.0
    three = 3.0 ** alpha - 1.0
    cos2 = 1.0 / (2.0 * two)
    omega2 = 1.0 - cos2
    return StokesCoeffs(
        alpha=float(alpha),
        omega2=omega2,
        phi2_mean=omega2 - 0.5,
        phi2_cos2=cos2,
        phi3_cos3=1.0 / (2.0 * two * three),
    )


def stokes_wave(alpha: float, a: float, grid: FourierGrid) -> NormalizedWave:
    """Normalized Stokes wave truncated after the a^3 term."""
    co = stokes_coefficients(alpha)
    a2, a3 = a * a, a ** 3
    phi = field_from_function(
        grid,
        lambda x: 1.0 + a * np.cos(x) + a2 * (co.phi2_mean + co.phi2_cos2 * np.cos(2 * x))
        + a3 * co.phi3_cos3 * np.cos(3 * x),
    )
    out = NormalizedWave(alpha=alpha, omega=1.0 + co.omega2 * a2, phi=phi)
    return replace(out, residual=normalized_residual(out))


def stokes_zero_mean(alpha: float, a: float, grid: FourierGrid) -> ZeroMeanWave:
    """Zero-mean Stokes wave with c = -1 + a^2/(2(2^a - 1)) and b = a^2/2."""
    co = stokes_coefficients(alpha)
    psi = field_from_function(
        grid,
        lambda x: a * np.cos(x) + a * a * co.phi2_cos2 * np.cos(2 * x) + a ** 3 * co.phi3_cos3 * np.cos(3 * x),
    )
    out = ZeroMeanWave(alpha=alpha, c=-1.0 + co.phi2_cos2 * a * a, b=0.5 * a * a, psi=psi)
    return replace(out, residual=zero_mean_residual(out))


def stokes_speed(alpha: float, a: float) -> float:
    return -1.0 + stokes_coefficients(alpha).phi2_cos2 * a * a


def amplitude_for_speed(alpha: float, c: float) -> float:
    """Invert c = -1 + a^2 cos2 for the first-harmonic amplitude a >= 0."""
    if c < -1.0:
        raise DomainError(f"Stokes branch needs c >= -1, got {c}")
    return float(np.sqrt((c + 1.0) / stokes_coefficients(alpha).phi2_cos2))


def stokes_speed_derivative(alpha: float, a: float, grid: FourierGrid):
    """d psi / dc along the Stokes family, used as the first continuation predictor."""
    co = stokes_coefficients(alpha)
    if a <= 0:
        raise DomainError("the Stokes derivative is singular at a = 0")
    dc_da = 2.0 * a * co.phi2_cos2
    return field_from_function(
        grid,
        lambda x: (np.cos(x) + 2.0 * a * co.phi2_cos2 * np.cos(2 * x) + 3.0 * a * a * co.phi3_cos3 * np.cos(3 * x))
        / dc_da,
    )


def small_amplitude_limits(alpha: float) -> dict:
    """Limits of b'(c) and c + 2b'(c) as the amplitude goes to zero."""
    return {"b_prime": 2.0 ** alpha - 1.0, "c_plus_2bprime": 2.0 ** (alpha + 1.0) - 3.0}


def mu_omega_slope_limit(alpha: float) -> float:
    """lim mu'(omega) as omega -> 1 along the single-lobe branch: (3 2^a - 5)/(2 2^a - 3)."""
    p = 2.0 ** alpha
    return (3.0 * p - 5.0) / (2.0 * p - 3.0)
