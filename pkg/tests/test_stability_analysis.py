import numpy as np
import pytest
from numpy.testing import assert_allclose

from analysis.stability_analysis import (
    VerdictKind,
    analyze_point,
    assemble_linearized,
    b_prime,
    classify,
    constraint_matrices,
    eigen_counts,
    galerkin_modes,
    predicted_counts,
    range_identity_residuals,
    unstable_eigenvalue,
)
from models.continuation import solve_at_speed
from models.galileo import ZeroMeanWave, from_exact, to_zero_mean
from models.stokes_seed import stokes_zero_mean
from models.wave_solvers import SolverConfig, newton_solve
from utils.errors import InvalidArgumentError, ResolutionError
from utils.fourier_core import field_from_function, make_grid
from utils.special_functions import bo_exact, bo_gamma_for_speed, kdv_parameters


def test_predicted_counts():
    assert predicted_counts(0.3) == (1, 1)
    assert predicted_counts(-0.3) == (2, 1)
    assert predicted_counts(1e-6, tol=1e-4) == (1, 2)


def test_linearized_operator_is_symmetric(bo_wave, cfg):
    L = assemble_linearized(bo_wave, cfg=cfg)
    assert L.entries.dtype == float
    assert_allclose(L.entries, L.entries.T, atol=1e-14)
    assert L.size == 2 * L.modes + 1


def test_operator_needs_enough_grid_points(bo_wave, cfg):
    with pytest.raises(ResolutionError):
        assemble_linearized(bo_wave, modes=64, cfg=cfg)
    with pytest.raises(ResolutionError):
        assemble_linearized(bo_wave, modes=5, cfg=cfg)


def test_bo_wave_counts(bo_wave, cfg):
    counts = eigen_counts(assemble_linearized(bo_wave, cfg=cfg), cfg.zero_tol)
    assert (counts.n, counts.z) == (1, 1)
    assert counts.lowest[0] < 0.0
    assert counts.ground_state_sign_changes == 0


def test_bo_b_prime_is_one(bo_wave, cfg):
    result = b_prime(bo_wave, cfg=cfg)
    assert_allclose(result.value, 1.0, rtol=1e-10)
    assert result.sigma_min > cfg.degenerate_tol


def test_b_prime_matches_finite_difference_of_neighbors(cfg):
    grid = make_grid(128)

    def wave(c):
        return to_zero_mean(from_exact(bo_exact(bo_gamma_for_speed(c), grid)))

    result = b_prime(wave(0.0), neighbors=(wave(-1e-3), wave(1e-3)), cfg=cfg)
    assert result.method_gap < 1e-6


def test_kdv_b_prime_follows_closed_forms(kdv_wave, cfg):
    h = 1e-5
    _, c_hi, b_hi = kdv_parameters(0.6 + h)
    _, c_lo, b_lo = kdv_parameters(0.6 - h)
    assert_allclose(b_prime(kdv_wave, cfg=cfg).value, (b_hi - b_lo) / (c_hi - c_lo), rtol=1e-6)


def test_bo_wave_is_stable(bo_wave, cfg):
    analysis = analyze_point(bo_wave, cfg, with_constraints=True, with_spectrum=True)
    verdict = analysis.verdict
    assert verdict.kind is VerdictKind.STABLE
    assert (verdict.n_L, verdict.z_L) == (1, 1)
    assert_allclose(verdict.c_plus_2bprime, 2.0, rtol=1e-10)
    assert_allclose(analysis.gamma, 1.5, rtol=1e-12)
    assert max(analysis.range_residuals.values()) < 1e-8
    assert analysis.spectrum.deflated
    assert analysis.spectrum.max_real_part < 1e-5


def test_constraint_matrices_match_closed_forms(bo_wave, cfg):
    report = constraint_matrices(bo_wave, 1.0, cfg)
    assert not report.near_fold
    assert_allclose(report.det_P_closed, -4.0 * np.pi ** 2 * 1.5 / 2.0)
    assert report.det_P_error < 1e-8
    assert report.det_D_error < 1e-8
    assert max(report.entry_errors.values()) < 1e-8
    assert_allclose(report.P[0, 0], np.pi, rtol=1e-8)
    # L^-1 psi . psi vanishes at c = 0 on the BO branch
    assert abs(report.D[1, 1]) < 1e-8
    assert report.entry_errors["Lpsi_psi"] < 1e-8


def test_range_identities_hold_for_kdv(kdv_wave, cfg):
    result = b_prime(kdv_wave, cfg=cfg)
    residuals = range_identity_residuals(kdv_wave, result.derivative, result.value)
    assert set(residuals) == {"range_psi", "range_one", "range_dc"}
    assert max(residuals.values()) < 1e-8


def test_counts_flip_when_c_plus_2bprime_is_negative(grid64, cfg):
    a = 0.1
    wave = newton_solve(0.5, stokes_zero_mean(0.5, a, grid64), cfg, amplitude=a)
    analysis = analyze_point(wave, cfg)
    verdict = analysis.verdict
    assert verdict.c_plus_2bprime < 0.0 < verdict.b_prime
    assert (verdict.n_L, verdict.z_L) == predicted_counts(verdict.c_plus_2bprime) == (2, 1)
    assert verdict.kind is VerdictKind.STABLE


def test_counts_do_not_depend_on_truncation(cfg):
    wave = to_zero_mean(from_exact(bo_exact(bo_gamma_for_speed(0.5), make_grid(512))))
    modes = galerkin_modes(wave, cfg)
    coarse = eigen_counts(assemble_linearized(wave, modes, cfg), cfg.zero_tol)
    fine = eigen_counts(assemble_linearized(wave, 2 * modes, cfg), cfg.zero_tol)
    assert (coarse.n, coarse.z) == (fine.n, fine.z)
    assert_allclose(b_prime(wave, cfg=cfg, modes=modes).value,
                    b_prime(wave, cfg=cfg, modes=2 * modes).value, rtol=1e-10)


def test_classify_thresholds(bo_wave, cfg):
    assert classify(bo_wave, -0.5, (2, 1), cfg, sigma_min=1.0).kind is VerdictKind.UNSTABLE
    assert classify(bo_wave, 0.0, (1, 2), cfg, sigma_min=1.0).kind is VerdictKind.MARGINALLY_STABLE
    assert classify(bo_wave, 1.0, (1, 1), cfg, sigma_min=0.0).kind is VerdictKind.DEGENERATE_KERNEL


def test_zero_profile_is_rejected(grid64, cfg):
    zero = ZeroMeanWave(alpha=1.0, c=0.0, b=0.0, psi=field_from_function(grid64, lambda x: 0.0 * x))
    with pytest.raises(InvalidArgumentError):
        b_prime(zero, cfg=cfg)
    with pytest.raises(InvalidArgumentError):
        analyze_point(zero, cfg)


def test_spectrum_of_kdv_wave_is_neutral(kdv_wave, cfg):
    report = unstable_eigenvalue(kdv_wave, cfg=cfg)
    assert report.deflated
    assert report.max_real_part < 1e-5


def test_translational_pair_is_deflated(cfg):
    wave = to_zero_mean(from_exact(bo_exact(bo_gamma_for_speed(3.0), make_grid(512))))
    report = unstable_eigenvalue(wave, cfg=cfg)
    assert report.deflated
    assert report.eigenvalues.size == report.raw_eigenvalues.size - 2
    assert report.max_real_part < 1e-6


def test_galerkin_cap_follows_grid_limit():
    assert SolverConfig().max_galerkin_modes == SolverConfig().n_max // 2 - 1
    assert SolverConfig(n_max=256).max_galerkin_modes == 127
    # cosine coefficients exp(-0.02 m) stay above 1e-10 up to m = 1151
    wave = to_zero_mean(from_exact(bo_exact(0.02, make_grid(4096))))
    assert 1024 < galerkin_modes(wave, SolverConfig()) < 2047
    assert galerkin_modes(wave, SolverConfig(max_galerkin_modes=100)) == 100


@pytest.mark.slow
def test_stable_wave_on_fine_grid_has_no_growing_mode(cfg):
    wave = solve_at_speed(0.6, 1.6859, cfg)
    analysis = analyze_point(wave, cfg, with_spectrum=True)
    assert analysis.verdict.b_prime > 0.0
    assert analysis.spectrum.deflated
    assert analysis.spectrum.max_real_part < 1e-6
