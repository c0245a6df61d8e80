"""Petviashvili and Newton solvers for periodic waves of the fractional KdV equation.

Newton works on cosine coefficients of even profiles, which removes the
translational kernel. The same cosine Galerkin matrices are reused by the
stability analysis.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

from config import settings
from models.galileo import (
    NormalizedWave,
    Wave,
    ZeroMeanWave,
    band_limited_max,
    is_constant,
    normalized_residual,
    to_normalized,
    to_zero_mean,
    zero_mean_residual,
)
from utils.errors import (
    ConfigError,
    InvalidArgumentError,
    NearFoldError,
    NewtonConvergenceError,
    PetviashviliDivergenceError,
)
from utils.fourier_core import (
    cosine_product_matrix,
    field_from_coeffs,
    field_from_cosine,
    phase_align,
    square,
    symbol,
)

LOGGER = logging.getLogger(__name__)

BLOW_UP_LIMIT = 1e12


@dataclass
class SolverConfig:
    """Numerical settings shared by the solvers, continuation and stability analysis."""
    residual_tol: float = settings.RESIDUAL_TOL
    max_iter: int = settings.PETVIASHVILI_MAX_ITER
    newton_max_iter: int = settings.NEWTON_MAX_ITER
    petviashvili_exponent: float = settings.PETVIASHVILI_EXPONENT
    tail_tol: float = settings.TAIL_TOL
    tail_window: int = settings.TAIL_WINDOW
    n_min: int = settings.N_MIN
    n_max: int = settings.N_MAX
    continuation_step: float = settings.CONTINUATION_STEP
    step_min: float = settings.STEP_MIN
    step_max: float = settings.STEP_MAX
    zero_tol: float = settings.ZERO_TOL
    bprime_tol: float = settings.BPRIME_TOL
    degenerate_tol: float = settings.DEGENERATE_TOL
    fold_cond_limit: float = settings.FOLD_COND_LIMIT
    max_galerkin_modes: int = settings.MAX_GALERKIN_MODES
    stokes_seed_amplitude: float = settings.STOKES_SEED_AMPLITUDE
    compute_spectrum: bool = False

    def __post_init__(self):
        if not self.max_galerkin_modes:
            self.max_galerkin_modes = self.n_max // 2 - 1
        self.validate()

    def validate(self) -> None:
        positive = {
            "residual_tol": self.residual_tol,
            "petviashvili_exponent": self.petviashvili_exponent,
            "tail_tol": self.tail_tol,
            "continuation_step": self.continuation_step,
            "step_min": self.step_min,
            "step_max": self.step_max,
            "zero_tol": self.zero_tol,
            "bprime_tol": self.bprime_tol,
            "degenerate_tol": self.degenerate_tol,
            "fold_cond_limit": self.fold_cond_limit,
            "stokes_seed_amplitude": self.stokes_seed_amplitude,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        for name in ("max_iter", "newton_max_iter", "tail_window", "max_galerkin_modes"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if self.n_min % 2 or self.n_max % 2 or self.n_min < 8:
            raise ConfigError(f"n_min and n_max must be even and >= 8, got {self.n_min}, {self.n_max}")
        if self.n_min > self.n_max:
            raise ConfigError(f"n_min={self.n_min} exceeds n_max={self.n_max}")
        if 2 * self.tail_window >= self.n_min:
            raise ConfigError(f"tail_window={self.tail_window} too large for n_min={self.n_min}")
        if self.step_min > self.continuation_step or self.continuation_step > self.step_max:
            raise ConfigError("need step_min <= continuation_step <= step_max")

    def snapshot(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def residual(w: Wave) -> float:
    """Max-norm residual of the stationary equation matching the wave's form."""
    if isinstance(w, NormalizedWave):
        return normalized_residual(w)
    return zero_mean_residual(w)


def relative_residual(w: Wave) -> float:
    """residual(w) / max(1, |profile|_inf^2)."""
    profile = w.phi if isinstance(w, NormalizedWave) else w.psi
    return residual(w) / max(1.0, profile.max_norm() ** 2)


def _coefficient_inner(f_coeffs: np.ndarray, g_coeffs: np.ndarray) -> float:
    return float(2.0 * np.pi * np.real(np.vdot(g_coeffs, f_coeffs)))


def petviashvili_solve(alpha: float, omega: float, seed: NormalizedWave,
                       cfg: Optional[SolverConfig] = None) -> NormalizedWave:
    """
    Solve D^a phi + omega phi = phi^2 by Petviashvili iteration.

    phi <- M^p (D^a + omega)^(-1) phi^2 with M = <(D^a + omega) phi, phi> / <phi^2, phi>.

    Args:
        alpha: Dispersion exponent
        omega: Wave speed in normalized form
        seed: Starting profile
        cfg: Solver settings (residual_tol, max_iter, petviashvili_exponent)

    Returns:
        Converged NormalizedWave with its relative residual
    """
    cfg = cfg or SolverConfig()
    if not omega > 0:
        raise InvalidArgumentError(f"Petviashvili iteration needs omega > 0, got {omega}")
    if omega <= 1.0:
        LOGGER.warning(f"omega={omega:.6g} <= 1: the small-amplitude sub-branch is not expected to converge")
    if seed.phi.max_norm() == 0.0:
        raise InvalidArgumentError("Petviashvili seed must be nonzero")

    grid = seed.phi.grid
    operator = symbol(grid, alpha) + omega
    coeffs = np.array(seed.phi.coeffs, dtype=complex)
    stabilizer, rel_res = float("nan"), float("nan")

    for it in range(int(cfg.max_iter)):
        phi = field_from_coeffs(grid, coeffs)
        sq = square(phi).coeffs
        quadratic = _coefficient_inner(operator * coeffs, coeffs)
        cubic = _coefficient_inner(sq, coeffs)
        if not np.isfinite(cubic) or phi.max_norm() > BLOW_UP_LIMIT:
            raise PetviashviliDivergenceError("iteration blew up", stabilizer, rel_res, reason="blow-up")
        if cubic <= 0.0:
            raise PetviashviliDivergenceError("cubic functional became nonpositive", stabilizer, rel_res,
                                              reason="collapse")
        stabilizer = quadratic / cubic
        defect = band_limited_max(operator * coeffs - sq, grid)
        rel_res = defect / max(1.0, phi.max_norm() ** 2)

        if is_constant(phi):
            raise PetviashviliDivergenceError("iteration converged to the constant solution", stabilizer, rel_res,
                                              reason="constant")
        if rel_res < cfg.residual_tol and abs(stabilizer - 1.0) < settings.STABILIZER_TOL:
            LOGGER.debug(f"Petviashvili converged at omega={omega:.6g} after {it} iterations")
            return NormalizedWave(alpha=alpha, omega=omega, phi=phi, residual=rel_res)
        if it % 500 == 0:
            LOGGER.debug(f"Petviashvili it={it} M={stabilizer:.12f} residual={rel_res:.3e}")

        coeffs = stabilizer ** cfg.petviashvili_exponent * sq / operator

    raise PetviashviliDivergenceError(f"no convergence in {cfg.max_iter} iterations", stabilizer, rel_res)


def even_linear_operator(p: np.ndarray, alpha: float, shift: float) -> np.ndarray:
    """
    Cosine-basis matrix of D^a + shift - 2 psi for an even potential psi.

    Args:
        p: Cosine coefficients p_0..p_K of psi
        alpha: Dispersion exponent
        shift: c (zero-mean form) or omega (normalized form)

    Returns:
        (K+1) x (K+1) matrix acting on cosine coefficients f_0..f_K
    """
    m = np.arange(p.size, dtype=float)
    return np.diag(m ** alpha + shift) - 2.0 * cosine_product_matrix(p)


def restricted_operator(p: np.ndarray, alpha: float, c: float) -> np.ndarray:
    """L restricted to even zero-mean functions: drop the mode-0 row and column."""
    return even_linear_operator(p, alpha, c)[1:, 1:]


def _factor_checked(jacobian: np.ndarray, cfg: SolverConfig, rel_res: float):
    lu, piv = lu_factor(jacobian, check_finite=False)
    anorm = np.linalg.norm(jacobian, 1)
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    condition = np.inf if rcond == 0.0 or info != 0 else 1.0 / rcond
    if condition > cfg.fold_cond_limit:
        raise NearFoldError("Newton Jacobian is nearly singular", condition, rel_res)
    return lu, piv


def _galerkin_size(grid) -> int:
    return grid.n_modes // 2


def newton_solve(alpha: float, seed: Wave, cfg: Optional[SolverConfig] = None, *,
                 omega: Optional[float] = None, c: Optional[float] = None,
                 amplitude: Optional[float] = None,
                 history: Optional[List[float]] = None) -> Wave:
    """
    Newton's method in the cosine subspace with exactly one quantity held fixed.

    Args:
        alpha: Dispersion exponent
        seed: Starting wave in either form, ideally even about x = 0
        cfg: Solver settings (residual_tol, newton_max_iter, fold_cond_limit)
        omega: Solve the normalized equation at this omega
        c: Solve the zero-mean equation at this c
        amplitude: Fix the cos(x) coefficient of psi and solve for c as well
        history: Optional list receiving the relative residual of every iterate

    Returns:
        NormalizedWave when omega is fixed, ZeroMeanWave otherwise
    """
    cfg = cfg or SolverConfig()
    chosen = [name for name, value in (("omega", omega), ("c", c), ("amplitude", amplitude)) if value is not None]
    if len(chosen) != 1:
        raise InvalidArgumentError(f"newton_solve needs exactly one of omega, c, amplitude; got {chosen or 'none'}")
    history = history if history is not None else []

    if omega is not None:
        start = seed if isinstance(seed, NormalizedWave) else to_normalized(seed, allow_constant=True)
        return _newton_normalized(alpha, float(omega), start, cfg, history)
    start = seed if isinstance(seed, ZeroMeanWave) else to_zero_mean(seed)
    if c is not None:
        return _newton_zero_mean(alpha, float(c), start, cfg, history)
    return _newton_amplitude(alpha, float(amplitude), start, cfg, history)


def _zero_mean_wave(alpha: float, c: float, p: np.ndarray, grid) -> ZeroMeanWave:
    psi = field_from_cosine(grid, p)
    b = float(p[0] ** 2 + 2.0 * np.sum(p[1:] ** 2))
    wave = ZeroMeanWave(alpha=alpha, c=c, b=b, psi=psi)
    return replace(wave, residual=zero_mean_residual(wave) / max(1.0, psi.max_norm() ** 2))


def _check_progress(rel_res: float, it: int, history: List[float], label: str) -> None:
    history.append(rel_res)
    LOGGER.debug(f"Newton[{label}] it={it} residual={rel_res:.3e}")
    if not np.isfinite(rel_res):
        raise NewtonConvergenceError(f"Newton iterate at {label} is not finite", rel_res, history)


def _newton_zero_mean(alpha: float, c: float, seed: ZeroMeanWave, cfg: SolverConfig,
                      history: List[float]) -> ZeroMeanWave:
    grid = seed.psi.grid
    size = _galerkin_size(grid)
    p = phase_align(seed.psi).cosine_coefficients(size)
    p[0] = 0.0
    diag = np.arange(size, dtype=float) ** alpha + c
    label = f"c={c:.6g}"
    wave = _zero_mean_wave(alpha, c, p, grid)
    for it in range(int(cfg.newton_max_iter)):
        _check_progress(wave.residual, it, history, label)
        if wave.residual < cfg.residual_tol:
            return wave
        sq = square(wave.psi).cosine_coefficients(size)
        defect = diag[1:] * p[1:] - sq[1:]
        lu = _factor_checked(restricted_operator(p, alpha, c), cfg, wave.residual)
        p[1:] += lu_solve(lu, -defect)
        wave = _zero_mean_wave(alpha, c, p, grid)
    raise NewtonConvergenceError(f"Newton did not converge at {label}", wave.residual, history)


def _newton_amplitude(alpha: float, amplitude: float, seed: ZeroMeanWave, cfg: SolverConfig,
                      history: List[float]) -> ZeroMeanWave:
    grid = seed.psi.grid
    size = _galerkin_size(grid)
    p = phase_align(seed.psi).cosine_coefficients(size)
    p[0] = 0.0
    p[1] = 0.5 * amplitude
    c = seed.c
    m_alpha = np.arange(size, dtype=float) ** alpha
    label = f"a={amplitude:.6g}"
    wave = _zero_mean_wave(alpha, c, p, grid)
    for it in range(int(cfg.newton_max_iter)):
        _check_progress(wave.residual, it, history, label)
        if wave.residual < cfg.residual_tol:
            return wave
        sq = square(wave.psi).cosine_coefficients(size)
        defect = (m_alpha[1:] + c) * p[1:] - sq[1:]
        jacobian = restricted_operator(p, alpha, c)
        jacobian[:, 0] = p[1:]
        lu = _factor_checked(jacobian, cfg, wave.residual)
        step = lu_solve(lu, -defect)
        c += float(step[0])
        p[2:] += step[1:]
        wave = _zero_mean_wave(alpha, c, p, grid)
    raise NewtonConvergenceError(f"Newton did not converge at {label}", wave.residual, history)


def _newton_normalized(alpha: float, omega: float, seed: NormalizedWave, cfg: SolverConfig,
                       history: List[float]) -> NormalizedWave:
    grid = seed.phi.grid
    size = _galerkin_size(grid)
    q = phase_align(seed.phi).cosine_coefficients(size)
    diag = np.arange(size, dtype=float) ** alpha + omega
    label = f"omega={omega:.6g}"

    def build(coeffs: np.ndarray) -> NormalizedWave:
        phi = field_from_cosine(grid, coeffs)
        w = NormalizedWave(alpha=alpha, omega=omega, phi=phi)
        return replace(w, residual=normalized_residual(w) / max(1.0, phi.max_norm() ** 2))

    wave = build(q)
    for it in range(int(cfg.newton_max_iter)):
        _check_progress(wave.residual, it, history, label)
        if wave.residual < cfg.residual_tol:
            return wave
        sq = square(wave.phi).cosine_coefficients(size)
        defect = diag * q - sq
        lu = _factor_checked(even_linear_operator(q, alpha, omega), cfg, wave.residual)
        q += lu_solve(lu, -defect)
        wave = build(q)
    raise NewtonConvergenceError(f"Newton did not converge at {label}", wave.residual, history)
