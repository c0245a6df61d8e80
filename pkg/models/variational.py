"""Direct minimization of the constrained quadratic form, an oracle independent of Newton.

The ground state minimizes B_c(u) = 1/2 int (D^{a/2} u)^2 + c u^2 over zero-mean
u with int u^3 = 1. Working with the scale-invariant quotient
Q(u) = B_c(u) / (int u^3)^(2/3) removes the cubic constraint, and a cosine
basis removes the mean and the translations.
"""
from __future__ import annotations

import logging
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from models.galileo import ZeroMeanWave, zero_mean_residual
from models.stokes_seed import stokes_coefficients
from models.wave_solvers import SolverConfig
from utils.errors import DomainError, ResolutionError, VariationalStagnationError
from utils.fourier_core import field_from_cosine, inner_product, make_grid, spectral_tail_max, square

LOGGER = logging.getLogger(__name__)

VARIATIONAL_TOL = 1e-6
GRADIENT_TOL = 1e-11
NONPOSITIVE_PENALTY = 1e10


class _Quotient:
    """Q in preconditioned variables v_m = sqrt(m^a + c) u_m, m = 1..K."""

    def __init__(self, alpha: float, c: float, n_modes: int):
        self.grid = make_grid(n_modes)
        self.size = n_modes // 2
        m = np.arange(1, self.size, dtype=float)
        self.weight = m ** alpha + c
        self.scale = np.sqrt(self.weight)

    def profile(self, v: np.ndarray):
        u = np.concatenate([[0.0], v / self.scale])
        return field_from_cosine(self.grid, u)

    def __call__(self, v: np.ndarray) -> Tuple[float, np.ndarray]:
        u_field = self.profile(v)
        u_sq = square(u_field)
        cubic = inner_product(u_field, u_sq)
        if cubic <= 0.0:
            return NONPOSITIVE_PENALTY, np.zeros_like(v)
        quad = 2.0 * np.pi * float(np.dot(v, v))
        u = v / self.scale
        grad_b = 4.0 * np.pi * self.weight * u
        grad_t = 12.0 * np.pi * u_sq.cosine_coefficients(self.size)[1:]
        t23 = cubic ** (2.0 / 3.0)
        grad_u = grad_b / t23 - (2.0 / 3.0) * quad * grad_t / (cubic * t23)
        return quad / t23, grad_u / self.scale

    def seed(self, alpha: float) -> np.ndarray:
        co = stokes_coefficients(alpha)
        u = np.zeros(self.size - 1)
        u[0] = 0.5
        if self.size > 2:
            u[1] = 0.5 * co.phi2_cos2
        if self.size > 3:
            u[2] = 0.5 * co.phi3_cos3
        return u * self.scale


def _rescale(quotient: _Quotient, v: np.ndarray, alpha: float, c: float) -> Tuple[ZeroMeanWave, float]:
    u_field = quotient.profile(v)
    cubic = inner_product(u_field, square(u_field))
    phi_star = u_field.scaled(cubic ** (-1.0 / 3.0))
    q_value = 2.0 * np.pi * float(np.sum(quotient.weight * phi_star.cosine_coefficients(quotient.size)[1:] ** 2))
    psi = phi_star.scaled(2.0 * q_value)
    b = inner_product(psi, psi) / (2.0 * np.pi)
    wave = ZeroMeanWave(alpha=alpha, c=c, b=float(b), psi=psi)
    rel = zero_mean_residual(wave) / max(1.0, psi.max_norm() ** 2)
    return ZeroMeanWave(alpha=alpha, c=c, b=float(b), psi=psi, residual=rel), q_value


def variational_minimize(alpha: float, c: float, cfg: Optional[SolverConfig] = None,
                         n_modes: Optional[int] = None, tol: float = VARIATIONAL_TOL) -> ZeroMeanWave:
    """
    Minimize B_c over the zero-mean, unit-cubic constraint set and rescale to a wave.

    The minimizer phi* is mapped to psi = 2 B_c(phi*) phi*. The grid is doubled
    while the spectral tail of psi exceeds cfg.tail_tol.

    Args:
        alpha: Dispersion exponent
        c: Wave speed (c > -1)
        cfg: Solver settings (tail_tol, tail_window, n_min, n_max)
        n_modes: Starting grid size; defaults to 2 * cfg.n_min
        tol: Acceptance threshold for the relative residual of the rescaled wave

    Returns:
        ZeroMeanWave at speed c
    """
    cfg = cfg or SolverConfig()
    if not c > -1.0:
        raise DomainError(f"variational problem needs c > -1, got {c}")
    n = int(n_modes or 2 * cfg.n_min)
    previous: Optional[np.ndarray] = None

    while True:
        quotient = _Quotient(alpha, c, n)
        start = quotient.seed(alpha)
        if previous is not None:
            start[: previous.size] = previous
        result = minimize(quotient, start, jac=True, method="BFGS",
                          options={"gtol": GRADIENT_TOL, "maxiter": 50 * n})
        wave, q_value = _rescale(quotient, result.x, alpha, c)
        tail = spectral_tail_max(wave.psi, cfg.tail_window)
        LOGGER.debug(f"variational alpha={alpha} c={c:.6g} N={n} Q={result.fun:.12g} "
                     f"residual={wave.residual:.3e} tail={tail:.3e} ({result.message})")
        if tail <= cfg.tail_tol:
            break
        if 2 * n > cfg.n_max:
            raise ResolutionError(f"variational minimizer at c={c:.6g} unresolved at N={n} (tail={tail:.3e})")
        previous = result.x
        n *= 2

    if wave.residual > tol:
        grad_norm = float(np.linalg.norm(result.jac))
        raise VariationalStagnationError(f"minimizer at c={c:.6g} does not satisfy the Euler-Lagrange equation",
                                         wave.residual, grad_norm)
    LOGGER.info(f"variational alpha={alpha} c={c:.6g}: q={q_value:.10g}, b={wave.b:.10g}, N={n}")
    return wave
