"""Wave types and the Galilean map between the normalized and zero-mean forms.

Normalized form:  D^a phi + omega phi - phi^2 = 0.
Zero-mean form:   D^a psi + c psi - P0(psi^2) = 0,  b = (1/2pi) int psi^2.
The two are related by phi = psi - (c - omega)/2 with omega^2 = c^2 + 4b.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from utils.errors import ConstantWaveError, DomainError
from utils.fourier_core import (
    FourierGrid,
    PeriodicField,
    constant_field,
    field_from_coeffs,
    inner_product,
    odd_part_norm,
    phase_align,
    project_zero_mean,
    square,
    symbol,
)
from utils.special_functions import ExactWave

LOGGER = logging.getLogger(__name__)

CONSTANT_TOL = 1e-6
SINGLE_LOBE_ODD_TOL = 1e-8


@dataclass(frozen=True)
class NormalizedWave:
    alpha: float
    omega: float
    phi: PeriodicField
    residual: float = float("nan")

    @property
    def n_modes(self) -> int:
        return self.phi.n_modes


@dataclass(frozen=True)
class ZeroMeanWave:
    alpha: float
    c: float
    b: float
    psi: PeriodicField
    residual: float = float("nan")

    @property
    def n_modes(self) -> int:
        return self.psi.n_modes

    @property
    def omega(self) -> float:
        return float(np.sqrt(max(self.c * self.c + 4.0 * self.b, 0.0)))


Wave = Union[NormalizedWave, ZeroMeanWave]


def band_limited_max(coeffs: np.ndarray, grid: FourierGrid) -> float:
    """Max norm of the field with these coefficients, Nyquist mode excluded."""
    coeffs = np.array(coeffs, dtype=complex)
    coeffs[grid.nyquist] = 0.0
    return field_from_coeffs(grid, coeffs).max_norm()


def normalized_residual(w: NormalizedWave) -> float:
    """Max-norm residual of D^a phi + omega phi - phi^2 over the modes |m| < N/2."""
    operator = symbol(w.phi.grid, w.alpha) + w.omega
    return band_limited_max(operator * w.phi.coeffs - square(w.phi).coeffs, w.phi.grid)


def zero_mean_residual(w: ZeroMeanWave) -> float:
    """Max-norm residual of D^a psi + c psi - P0(psi^2) over the modes |m| < N/2."""
    operator = symbol(w.psi.grid, w.alpha) + w.c
    defect = operator * w.psi.coeffs - square(w.psi).coeffs
    defect[0] = 0.0
    return band_limited_max(defect, w.psi.grid)


def is_constant(f: PeriodicField, tol: float = CONSTANT_TOL) -> bool:
    return project_zero_mean(f).max_norm() <= tol * max(f.max_norm(), np.finfo(float).tiny)


def to_zero_mean(w: NormalizedWave, allow_constant: bool = False) -> ZeroMeanWave:
    """
    Map a normalized wave to its zero-mean counterpart.

    Args:
        w: Normalized wave (omega, phi)
        allow_constant: Convert constant profiles instead of raising

    Returns:
        ZeroMeanWave with psi = P0 phi, c = omega - 2 mean(phi), b = (omega^2 - c^2)/4
    """
    if is_constant(w.phi) and not allow_constant:
        raise ConstantWaveError(
            f"constant profile (mean {w.phi.mean():.6g}) at omega={w.omega:.6g} has no single-lobe counterpart"
        )
    psi = project_zero_mean(w.phi)
    c = w.omega - 2.0 * w.phi.mean()
    b = 0.25 * (w.omega ** 2 - c ** 2)
    out = ZeroMeanWave(alpha=w.alpha, c=float(c), b=float(b), psi=psi)
    return replace(out, residual=zero_mean_residual(out))


def to_normalized(w: ZeroMeanWave, allow_constant: bool = False) -> NormalizedWave:
    """Shift psi by -(c - omega)/2 with omega = sqrt(c^2 + 4b)."""
    disc = w.c ** 2 + 4.0 * w.b
    if disc < 0.0:
        if disc > -1e-14 * max(1.0, w.c ** 2):
            disc = 0.0
        else:
            raise DomainError(f"c^2 + 4b = {disc:.6g} < 0 (c={w.c}, b={w.b})")
    if w.psi.max_norm() <= CONSTANT_TOL * max(1.0, abs(w.c)) and not allow_constant:
        raise ConstantWaveError(f"zero profile at c={w.c:.6g} maps onto a constant solution")
    omega = float(np.sqrt(disc))
    phi = w.psi.shifted(-0.5 * (w.c - omega))
    out = NormalizedWave(alpha=w.alpha, omega=omega, phi=phi)
    return replace(out, residual=normalized_residual(out))


def from_exact(exact: ExactWave) -> NormalizedWave:
    out = NormalizedWave(alpha=exact.alpha, omega=exact.omega, phi=exact.phi)
    return replace(out, residual=normalized_residual(out))


def constant_wave(alpha: float, omega: float, grid) -> NormalizedWave:
    """The constant solution phi = omega (mu = omega^2)."""
    return NormalizedWave(alpha=alpha, omega=omega, phi=constant_field(grid, omega), residual=0.0)


@dataclass(frozen=True)
class WaveDiagnostics:
    b: float
    mu: float
    gamma: float
    energy: float
    momentum: float
    mass: float
    q_value: Optional[float]


def _energy(f: PeriodicField, alpha: float) -> float:
    # 1/2 int (D^{a/2} f)^2 = pi sum |m|^a |f_hat|^2
    quadratic = np.pi * float(np.sum(symbol(f.grid, alpha) * np.abs(f.coeffs) ** 2))
    cubic = float(f.grid.spacing * np.sum(f.values ** 3))
    return quadratic - cubic / 3.0


def diagnostics(w: Wave) -> WaveDiagnostics:
    """
    Scalar diagnostics of a wave by spectral quadrature.

    For a zero-mean wave, energy/momentum/mass are those of psi; for a
    normalized wave they are those of phi. b and gamma always refer to the
    zero-mean profile and mu to the normalized one. q_value is
    (pi gamma / 4)^(1/3) and is None when gamma <= 0.
    """
    if isinstance(w, NormalizedWave):
        profile = w.phi
        zero_mean = to_zero_mean(w, allow_constant=True)
        mu = inner_product(w.phi, w.phi) / (2.0 * np.pi)
    else:
        profile = w.psi
        zero_mean = w
        if w.psi.max_norm() == 0.0:
            return WaveDiagnostics(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, None)
        shift = 0.5 * (zero_mean.omega - w.c)
        mu = inner_product(w.psi, w.psi) / (2.0 * np.pi) + shift * shift

    psi = zero_mean.psi
    b = inner_product(psi, psi) / (2.0 * np.pi)
    gamma = float(psi.grid.spacing * np.sum(psi.values ** 3)) / (2.0 * np.pi)
    q_value = float(np.cbrt(np.pi * gamma / 4.0)) if gamma > 0.0 else None
    if q_value is None:
        LOGGER.debug(f"gamma={gamma:.3e} <= 0 at c={zero_mean.c:.6g}; q undefined")
    return WaveDiagnostics(
        b=float(b),
        mu=float(mu),
        gamma=gamma,
        energy=_energy(profile, w.alpha),
        momentum=0.5 * inner_product(profile, profile),
        mass=float(profile.grid.spacing * np.sum(profile.values)),
        q_value=q_value,
    )


def two_mode_bound(alpha: float, c: float) -> float:
    """Upper bound for q_c from the two-mode trial family cos(x) + cos(2x)."""
    if c <= -1.0:
        raise DomainError(f"two-mode bound needs c > -1, got {c}")
    return 3.0 * np.pi * np.cbrt(2.0 ** alpha + c) * (1.0 + c) ** (2.0 / 3.0) / (2.0 * (3.0 * np.pi) ** (2.0 / 3.0))


def is_single_lobe(f: PeriodicField, odd_tol: float = SINGLE_LOBE_ODD_TOL) -> bool:
    """Even about its maximum at x = 0 and strictly decreasing on (0, pi) at grid resolution."""
    if is_constant(f):
        return False
    aligned = phase_align(f)
    if odd_part_norm(aligned) > odd_tol * max(1.0, aligned.max_norm()):
        return False
    n = aligned.n_modes
    # nodes n/2 .. n-1 cover [0, pi); append x = pi (node 0)
    half = np.concatenate([aligned.values[n // 2:], aligned.values[:1]])
    return bool(np.all(np.diff(half) < 1e-12 * aligned.max_norm()))
