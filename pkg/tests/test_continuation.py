import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.optimize import brentq

from analysis.stability_analysis import assemble_linearized, b_prime, eigen_counts, unstable_eigenvalue
from models.continuation import (
    Branch,
    continue_branch,
    make_point,
    petviashvili_branch,
    solve_at_speed,
    trace_branch,
    waves_at_omega,
)
from models.galileo import to_zero_mean
from models.stokes_seed import stokes_coefficients, stokes_wave
from models.wave_solvers import SolverConfig, newton_solve, petviashvili_solve
from utils.errors import ConfigError, ContinuationAbort, PetviashviliDivergenceError
from utils.fourier_core import make_grid
from utils.special_functions import kdv_parameters


@pytest.fixture(scope="module")
def bo_branch():
    return continue_branch(1.0, (-0.5, 1.0), SolverConfig())


def test_bo_branch_follows_b_equals_c_plus_one(bo_branch):
    c = bo_branch.column("c")
    assert_allclose(bo_branch.column("b"), c + 1.0, atol=1e-8)
    assert_allclose(bo_branch.column("b_prime"), 1.0, atol=1e-6)
    assert np.all(np.diff(c) > 0)
    assert set(p.verdict for p in bo_branch.points) == {"Stable"}
    assert bo_branch.events == []


def test_bo_branch_lands_on_range_ends(bo_branch):
    assert_allclose(bo_branch.points[0].c, -0.5, atol=1e-12)
    assert bo_branch.points[-1].c == 1.0
    assert bo_branch.metadata["method"] == "newton"
    assert bo_branch.metadata["seed"]["source"] == "stokes_zero_mean"


def test_bo_branch_omega_and_mu(bo_branch):
    c = bo_branch.column("c")
    assert_allclose(bo_branch.column("omega"), c + 2.0, rtol=1e-9)
    # mu = omega on the BO branch
    assert_allclose(bo_branch.column("mu"), c + 2.0, rtol=1e-8)


def test_waves_at_omega_on_bo_branch(bo_branch, cfg):
    waves = waves_at_omega(bo_branch, 2.5, cfg)
    assert len(waves) == 1
    assert_allclose(waves[0].omega, 2.5)
    assert_allclose(to_zero_mean(waves[0]).c, 0.5, atol=1e-9)


def test_waves_at_omega_outside_branch(bo_branch, cfg):
    assert waves_at_omega(bo_branch, 10.0, cfg) == []


def test_waves_at_omega_on_a_branch_node(bo_branch, cfg):
    node = bo_branch.points[3]
    waves = waves_at_omega(bo_branch, node.omega, cfg)
    assert len(waves) == 1
    assert_allclose(to_zero_mean(waves[0]).c, node.c, atol=1e-9)
    assert len(waves_at_omega(bo_branch, bo_branch.points[-1].omega, cfg)) == 1


def test_solve_at_speed_matches_cnoidal_wave(cfg):
    _, c, b = kdv_parameters(0.95)
    wave = solve_at_speed(2.0, c, cfg)
    assert wave.c == c
    assert_allclose(wave.b, b, rtol=1e-8)


def test_samples_are_hit_exactly(cfg):
    branch = continue_branch(1.0, (-0.5, 0.0), cfg, analyze=False, samples=(-0.123,))
    assert -0.123 in branch.column("c")
    assert branch.points[1].verdict == ""
    assert branch.points[1].n_neg == -1


@pytest.mark.parametrize("c_range", [(-1.0, 1.0), (0.5, 0.0)])
def test_invalid_range(c_range, cfg):
    with pytest.raises(ConfigError):
        continue_branch(1.0, c_range, cfg)


def test_unknown_method(cfg):
    with pytest.raises(ConfigError):
        trace_branch(1.0, (-0.5, 0.0), cfg, method="shooting")


def test_abort_carries_partial_branch():
    cfg = SolverConfig(n_max=64)
    with pytest.raises(ContinuationAbort) as info:
        continue_branch(1.0, (-0.9, 5.0), cfg)
    partial = info.value.branch
    assert isinstance(partial, Branch)
    assert len(partial) > 0
    assert partial.points[-1].c < 5.0
    assert_allclose(partial.column("b"), partial.column("c") + 1.0, atol=1e-8)


def test_branch_rejects_decreasing_speed(bo_branch):
    branch = Branch(alpha=1.0)
    wave = bo_branch.waves[1]
    branch.append(bo_branch.points[1], wave)
    with pytest.raises(ValueError):
        branch.append(bo_branch.points[0], bo_branch.waves[0])


def test_make_point_without_analysis(bo_branch):
    point = make_point(bo_branch.waves[0], None)
    assert np.isnan(point.mu) and point.verdict == ""
    assert point.to_dict()["c"] == bo_branch.points[0].c


@pytest.mark.slow
def test_petviashvili_branch_reproduces_bo_curve(cfg):
    branch = petviashvili_branch(1.0, (-0.5, 1.0), cfg)
    assert len(branch) > 5
    assert_allclose(branch.column("b"), branch.column("c") + 1.0, atol=1e-8)
    assert branch.metadata["skipped_omega"] == []


@pytest.fixture(scope="module")
def subcritical_branch():
    return continue_branch(0.55, (-0.99, 2.0), SolverConfig())


@pytest.mark.slow
def test_fold_in_omega_is_unfolded_in_c(subcritical_branch):
    branch = subcritical_branch
    folds = [e for e in branch.events if e["kind"] == "fold"]
    assert len(folds) == 1
    assert np.all(np.diff(branch.column("b")) > 0)
    assert branch.points[0].n_neg == 2
    assert branch.points[-1].n_neg == 1


@pytest.mark.slow
def test_fold_has_two_zero_eigenvalues(subcritical_branch, cfg):
    fold = next(e for e in subcritical_branch.events if e["kind"] == "fold")
    left = next(w for w in subcritical_branch.waves if w.c == fold["c_left"])

    def c_plus_2bprime(c):
        wave = newton_solve(0.55, left, cfg, c=c)
        return c + 2.0 * b_prime(wave, cfg=cfg).value

    c_star = brentq(c_plus_2bprime, fold["c_left"], fold["c_right"], xtol=1e-13)
    wave = newton_solve(0.55, left, cfg, c=c_star)
    counts = eigen_counts(assemble_linearized(wave, cfg=cfg), cfg.zero_tol)
    assert (counts.n, counts.z) == (1, 2)
    assert np.sort(np.abs(counts.lowest))[1] < 10.0 * cfg.zero_tol * counts.scale


@pytest.mark.slow
def test_two_waves_below_unit_omega(subcritical_branch, cfg):
    omegas = subcritical_branch.column("omega")
    target = omegas.min() + 0.5 * (omegas[0] - omegas.min())
    waves = waves_at_omega(subcritical_branch, target, cfg)
    assert target < 1.0
    assert len(waves) == 2
    speeds = sorted(to_zero_mean(w).c for w in waves)
    assert speeds[1] - speeds[0] > 1e-3


@pytest.mark.slow
def test_petviashvili_misses_two_negative_direction_waves(subcritical_branch, cfg):
    below = [p for p in subcritical_branch.points if p.n_neg == 2]
    omega = min(p.omega for p in below)
    a = np.sqrt((omega - 1.0) / stokes_coefficients(0.55).omega2)
    seed = stokes_wave(0.55, a, make_grid(cfg.n_min))
    with pytest.raises(PetviashviliDivergenceError):
        petviashvili_solve(0.55, omega, seed, cfg)
    wave = newton_solve(0.55, seed, cfg, omega=omega)
    assert wave.residual < cfg.residual_tol


@pytest.mark.slow
def test_stability_changes_for_small_alpha(cfg):
    branch = continue_branch(0.45, (-0.9, 30.0), cfg)
    changes = [e for e in branch.events if e["kind"] == "stability_change"]
    assert changes
    unstable = [w for w, p in zip(branch.waves, branch.points) if p.b_prime < 0]
    stable = [w for w, p in zip(branch.waves, branch.points) if p.b_prime > 0]
    report = unstable_eigenvalue(unstable[-1], cfg=cfg)
    assert report.max_real_part > 1e-4
    assert abs(report.eigenvalue.imag) < 1e-6
    assert unstable_eigenvalue(stable[0], cfg=cfg).max_real_part < 1e-6
