import numpy as np
import pytest
from numpy.testing import assert_allclose

from config import settings
from models.galileo import NormalizedWave, ZeroMeanWave, constant_wave, from_exact, to_zero_mean
from models.stokes_seed import amplitude_for_speed, stokes_speed, stokes_zero_mean
from models.wave_solvers import (
    SolverConfig,
    even_linear_operator,
    newton_solve,
    petviashvili_solve,
    relative_residual,
    residual,
    restricted_operator,
)
from utils.errors import (
    ConfigError,
    InvalidArgumentError,
    NewtonConvergenceError,
    PetviashviliDivergenceError,
)
from utils.fourier_core import (
    field_from_cosine,
    field_from_function,
    frac_derivative,
    inner_product,
    make_grid,
    phase_align,
    square,
    translate,
)
from utils.special_functions import bo_exact, bo_gamma_for_speed, kdv_exact


@pytest.mark.parametrize("overrides", [
    {"residual_tol": 0.0},
    {"n_min": 20},
    {"n_min": 63},
    {"n_min": 128, "n_max": 64},
    {"step_min": 0.1},
    {"continuation_step": 1.0},
    {"max_iter": 0},
])
def test_invalid_config(overrides):
    with pytest.raises(ConfigError):
        SolverConfig(**overrides)


def test_config_snapshot_lists_every_field(cfg):
    snapshot = cfg.snapshot()
    assert snapshot["residual_tol"] == cfg.residual_tol
    assert set(snapshot) == set(SolverConfig.__dataclass_fields__)


def test_residual_of_exact_wave(bo_wave):
    assert residual(bo_wave) < 1e-12
    assert relative_residual(bo_wave) <= residual(bo_wave)


def test_petviashvili_recovers_bo_wave(grid64, cfg):
    gamma = 0.8
    exact = from_exact(bo_exact(gamma, grid64))
    seed = NormalizedWave(alpha=1.0, omega=exact.omega, phi=from_exact(bo_exact(0.7, grid64)).phi)
    wave = petviashvili_solve(1.0, exact.omega, seed, cfg)
    assert wave.residual < cfg.residual_tol
    assert (phase_align(wave.phi) - exact.phi).max_norm() < 1e-8
    phi = wave.phi
    quadratic = inner_product(frac_derivative(phi, 1.0) + phi.scaled(wave.omega), phi)
    stabilizer = quadratic / inner_product(square(phi), phi)
    assert abs(stabilizer - 1.0) < settings.STABILIZER_TOL


def test_petviashvili_rejects_bad_input(grid64, cfg):
    seed = from_exact(bo_exact(0.8, grid64))
    with pytest.raises(InvalidArgumentError):
        petviashvili_solve(1.0, 0.0, seed, cfg)
    zero = NormalizedWave(alpha=1.0, omega=1.5, phi=seed.phi.scaled(0.0))
    with pytest.raises(InvalidArgumentError):
        petviashvili_solve(1.0, 1.5, zero, cfg)


def test_petviashvili_reports_constant_limit(grid64, cfg):
    with pytest.raises(PetviashviliDivergenceError) as info:
        petviashvili_solve(1.0, 1.5, constant_wave(1.0, 1.2, grid64), cfg)
    assert info.value.reason == "constant"


def test_petviashvili_rejects_nearly_constant_fixed_point(grid64, cfg):
    # below omega = 1 every mode of a perturbed constant decays
    omega = 0.8
    seed = NormalizedWave(alpha=1.0, omega=omega,
                          phi=field_from_function(grid64, lambda x: omega + 1e-3 * np.cos(x)))
    with pytest.raises(PetviashviliDivergenceError) as info:
        petviashvili_solve(1.0, omega, seed, cfg)
    assert info.value.reason == "constant"


def test_newton_at_fixed_speed_from_stokes_seed(grid64, cfg):
    c = -0.8
    seed = stokes_zero_mean(1.0, amplitude_for_speed(1.0, c), grid64)
    history = []
    wave = newton_solve(1.0, seed, cfg, c=c, history=history)
    assert isinstance(wave, ZeroMeanWave)
    assert wave.residual < cfg.residual_tol
    assert_allclose(wave.b, c + 1.0, atol=1e-9)
    assert history[-1] == wave.residual and len(history) > 1


def test_newton_removes_translations(grid64, cfg):
    c = -0.8
    seed = stokes_zero_mean(1.0, amplitude_for_speed(1.0, c), grid64)
    shifted = ZeroMeanWave(alpha=1.0, c=c, b=seed.b, psi=translate(seed.psi, 0.9))
    wave = newton_solve(1.0, shifted, cfg, c=c)
    assert int(np.argmax(wave.psi.values)) == grid64.n_modes // 2
    assert_allclose(wave.b, c + 1.0, atol=1e-9)


def test_newton_at_fixed_omega_moves_along_kdv_family(grid64, cfg):
    target = kdv_exact(0.62, grid64)
    seed = from_exact(kdv_exact(0.6, grid64))
    wave = newton_solve(2.0, seed, cfg, omega=target.omega)
    assert isinstance(wave, NormalizedWave)
    assert (wave.phi - target.phi).max_norm() < 1e-8


def test_newton_at_fixed_amplitude(grid64, cfg):
    a = 0.05
    wave = newton_solve(0.6, stokes_zero_mean(0.6, a, grid64), cfg, amplitude=a)
    assert_allclose(wave.psi.coefficient(1).real, 0.5 * a, rtol=1e-13)
    assert abs(wave.c - stokes_speed(0.6, a)) < 1e-4
    assert wave.residual < cfg.residual_tol


def test_newton_needs_exactly_one_fixed_quantity(bo_wave, cfg):
    with pytest.raises(InvalidArgumentError):
        newton_solve(1.0, bo_wave, cfg)
    with pytest.raises(InvalidArgumentError):
        newton_solve(1.0, bo_wave, cfg, c=0.0, omega=2.0)


def test_newton_gives_up_after_max_iterations(grid64):
    cfg = SolverConfig(newton_max_iter=1)
    seed = stokes_zero_mean(1.0, 0.3, grid64)
    with pytest.raises(NewtonConvergenceError) as info:
        newton_solve(1.0, seed, cfg, c=1.0)
    assert len(info.value.history) == 1


def test_restricted_operator_is_symmetric(bo_wave):
    p = bo_wave.psi.cosine_coefficients(20)
    p[0] = 0.0
    restricted = restricted_operator(p, 1.0, 0.0)
    assert_allclose(restricted, restricted.T, atol=1e-15)
    full = even_linear_operator(p, 1.0, 0.0)
    assert_allclose(full[1:, 1:], restricted, atol=1e-15)


def test_newton_keeps_grid(cfg):
    grid = make_grid(128)
    wave = newton_solve(2.0, from_exact(kdv_exact(0.5, grid)), cfg, c=kdv_exact(0.5, grid).c)
    assert wave.n_modes == 128


def test_newton_converges_quadratically(cfg):
    grid = make_grid(256)
    exact = to_zero_mean(from_exact(bo_exact(bo_gamma_for_speed(1.0), grid)))
    seed = ZeroMeanWave(alpha=1.0, c=1.0, b=exact.b,
                        psi=exact.psi + field_from_cosine(grid, np.array([0.0, 0.0, 1e-3])))
    history = []
    wave = newton_solve(1.0, seed, cfg, c=1.0, history=history)
    assert wave.residual < cfg.residual_tol
    assert len(history) <= 5
    pairs = [(r0, r1) for r0, r1 in zip(history, history[1:]) if r0 > 1e-6]
    assert pairs
    assert all(r1 <= 1e3 * r0 ** 2 for r0, r1 in pairs)
