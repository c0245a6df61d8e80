"""Oracle suites behind the `verify` command.

Each suite returns CheckResult records with the measured error and the
threshold it was held to; the report is written as JSON and the command
fails on the first check that does not pass.
"""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import statsmodels.api as sm

from analysis.stability_analysis import (
    FOLD_GAP,
    analyze_point,
    assemble_linearized,
    eigen_counts,
    predicted_counts,
)
from config import settings
from models.continuation import Branch, continue_branch, solve_at_speed
from models.galileo import (
    ZeroMeanWave,
    diagnostics,
    from_exact,
    is_single_lobe,
    to_zero_mean,
    two_mode_bound,
)
from models.stokes_seed import (
    mu_omega_slope_limit,
    small_amplitude_limits,
    stokes_coefficients,
    stokes_speed,
    stokes_zero_mean,
)
from models.variational import variational_minimize
from models.wave_solvers import SolverConfig, newton_solve
from utils.errors import SolverError
from utils.fourier_core import make_grid, phase_align, resample, spectral_tail_max
from utils.special_functions import bo_exact, bo_gamma_for_speed, kdv_exact

LOGGER = logging.getLogger(__name__)

STOKES_AMPLITUDES = (0.02, 0.04, 0.08, 0.16)
STOKES_SLOPE = 4.0
STOKES_SLOPE_TOL = 0.3
LIMIT_AMPLITUDE = 0.05
SLOPE_AMPLITUDE = 0.04
BO_SPEEDS = (-0.5, 0.0, 2.0, 5.0)
KDV_MODULI = (0.2, 0.5, 0.8, 0.95)
KDV_FAR_SPEED = 100.0
FD_STEP = 1e-3
SAMPLE_POINTS = 20
EXACT_N = 64


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""


@dataclass
class VerificationReport:
    alpha: float
    checks: List[CheckResult] = field(default_factory=list)
    started: float = field(default_factory=time.time)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def first_failure(self) -> Optional[CheckResult]:
        return next((c for c in self.checks if not c.passed), None)

    def add(self, name: str, measured: float, threshold: float, detail: str = "",
            passed: Optional[bool] = None) -> CheckResult:
        ok = bool(measured <= threshold) if passed is None else bool(passed)
        result = CheckResult(name=name, passed=ok, measured=float(measured), threshold=float(threshold),
                             detail=detail)
        self.checks.append(result)
        log = LOGGER.info if ok else LOGGER.error
        log(f"[{'PASS' if ok else 'FAIL'}] {name}: {measured:.3e} (limit {threshold:.1e}) {detail}".rstrip())
        return result

    def to_dict(self) -> Dict:
        def clean(value):
            return value if math.isfinite(value) else None

        return {
            "schema": settings.VERIFY_SCHEMA,
            "alpha": self.alpha,
            "passed": self.passed,
            "first_failure": self.first_failure.name if self.first_failure else None,
            "wall_time_s": time.time() - self.started,
            "checks": [{**asdict(c), "measured": clean(c.measured)} for c in self.checks],
        }


def write_report(report: VerificationReport, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"verify_alpha{report.alpha:g}.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2)
    LOGGER.info(f"wrote verification report to {path}")
    return path


def _relative(value: float, reference: float) -> float:
    return abs(value - reference) / max(abs(reference), np.finfo(float).tiny)


def _scaled_error(value: float, reference: float) -> float:
    """Relative error for |reference| >= 1, absolute below."""
    return abs(value - reference) / max(abs(reference), 1.0)


def _profile_gap(a: ZeroMeanWave, b: ZeroMeanWave) -> float:
    n = max(a.n_modes, b.n_modes)
    grid = make_grid(n)
    return (phase_align(resample(a.psi, grid)) - phase_align(resample(b.psi, grid))).max_norm()


def _resolved_grid(make_profile: Callable, cfg: SolverConfig):
    n = cfg.n_min
    while True:
        grid = make_grid(n)
        profile = make_profile(grid)
        if spectral_tail_max(profile.phi, cfg.tail_window) <= 1e-2 * cfg.tail_tol or 2 * n > cfg.n_max:
            return grid, profile
        n *= 2


def _exact_check(report: VerificationReport, label: str, exact, cfg: SolverConfig) -> None:
    seed = from_exact(exact)
    wave = to_zero_mean(newton_solve(exact.alpha, seed, cfg, omega=exact.omega))
    reference = to_zero_mean(seed)
    report.add(f"{label}: c", _scaled_error(wave.c, exact.c), 1e-6)
    report.add(f"{label}: b", _scaled_error(wave.b, exact.b), 1e-6)
    report.add(f"{label}: profile", _profile_gap(wave, reference), 1e-8)


def exact_suite(alpha: float, cfg: SolverConfig, report: VerificationReport) -> None:
    """Newton seeded by the closed-form waves must reproduce them (alpha = 1 and 2 only)."""
    if alpha == 1.0:
        for c in BO_SPEEDS:
            gamma = bo_gamma_for_speed(c)
            _, exact = _resolved_grid(lambda g: bo_exact(gamma, g), cfg)
            _exact_check(report, f"BO c={c:g}", exact, cfg)
    elif alpha == 2.0:
        for k in KDV_MODULI:
            _, exact = _resolved_grid(lambda g: kdv_exact(k, g), cfg)
            _exact_check(report, f"KdV k={k:g}", exact, cfg)
        far_cfg = replace(cfg, step_max=max(cfg.step_max, 2.0))
        wave = solve_at_speed(alpha, KDV_FAR_SPEED, far_cfg)
        ratio = wave.b / wave.c ** 1.5 / (3.0 / np.pi)
        corrected = 1.0 + 6.0 / (np.pi * np.sqrt(wave.c))
        report.add("KdV b/c^1.5 approaches 3/pi", abs(ratio / corrected - 1.0), 0.05,
                   detail=f"ratio/(3/pi)={ratio:.4f} at c={wave.c:g}")


def _amplitude_wave(alpha: float, a: float, cfg: SolverConfig, n_modes: int = EXACT_N) -> ZeroMeanWave:
    seed = stokes_zero_mean(alpha, a, make_grid(n_modes))
    return newton_solve(alpha, seed, cfg, amplitude=a)


def stokes_order(alpha: float, cfg: SolverConfig, amplitudes: Sequence[float] = STOKES_AMPLITUDES) -> Tuple[float, float]:
    """OLS slope (and its standard error) of log |psi - psi_Stokes| against log a."""
    errors = []
    for a in amplitudes:
        wave = _amplitude_wave(alpha, a, cfg)
        stokes = stokes_zero_mean(alpha, a, wave.psi.grid)
        errors.append((wave.psi - stokes.psi).max_norm())
    fit = sm.OLS(np.log(errors), sm.add_constant(np.log(np.asarray(amplitudes)))).fit()
    return float(fit.params[1]), float(fit.bse[1])


def stokes_suite(alpha: float, cfg: SolverConfig, report: VerificationReport) -> None:
    slope, stderr = stokes_order(alpha, cfg)
    report.add("Stokes expansion order", abs(slope - STOKES_SLOPE), STOKES_SLOPE_TOL,
               detail=f"slope={slope:.3f} +/- {stderr:.3f}")


def _richardson(fn: Callable[[float], float], a: float) -> float:
    # errors are even in a and O(a^2)
    return (4.0 * fn(0.5 * a) - fn(a)) / 3.0


def small_amplitude_suite(alpha: float, cfg: SolverConfig, report: VerificationReport) -> None:
    """Extrapolated b'(c), c + 2b'(c) and mu'(omega) against their a -> 0 limits."""
    limits = small_amplitude_limits(alpha)
    cache: Dict[float, ZeroMeanWave] = {}

    def wave_at(a: float) -> ZeroMeanWave:
        if a not in cache:
            cache[a] = _amplitude_wave(alpha, a, cfg)
        return cache[a]

    def bprime_at(a: float) -> float:
        return analyze_point(wave_at(a), cfg).verdict.b_prime

    def s_at(a: float) -> float:
        w = wave_at(a)
        return w.c + 2.0 * bprime_at(a)

    report.add("b'(c) small-amplitude limit", _relative(_richardson(bprime_at, LIMIT_AMPLITUDE), limits["b_prime"]),
               0.02)
    report.add("c + 2b'(c) small-amplitude limit",
               _relative(_richardson(s_at, LIMIT_AMPLITUDE), limits["c_plus_2bprime"]), 0.02)

    if abs(stokes_coefficients(alpha).omega2) < 1e-3:
        report.add("mu'(omega) small-amplitude limit", 0.0, 0.05, detail="omega_2 ~ 0: slope unbounded, skipped")
        return

    def slope_at(a: float) -> float:
        w = wave_at(a)
        return (diagnostics(w).mu - 1.0) / (w.omega - 1.0)

    expected = mu_omega_slope_limit(alpha)
    report.add("mu'(omega) small-amplitude limit", _relative(_richardson(slope_at, SLOPE_AMPLITUDE), expected), 0.05,
               detail=f"limit={expected:.6g}")


def _neighbors(alpha: float, wave: ZeroMeanWave, cfg: SolverConfig, h: float = FD_STEP):
    return tuple(newton_solve(alpha, replace(wave, c=wave.c + d), cfg, c=wave.c + d) for d in (-h, h))


def _sample_indices(count: int, samples: int = SAMPLE_POINTS) -> List[int]:
    if count <= samples:
        return list(range(count))
    return sorted(set(np.linspace(0, count - 1, samples).round().astype(int).tolist()))


def _count_invariance(wave: ZeroMeanWave, cfg: SolverConfig, modes: int) -> bool:
    base = eigen_counts(assemble_linearized(wave, modes, cfg), cfg.zero_tol)
    doubled_modes = 2 * modes
    n = wave.n_modes if 2 * doubled_modes + 1 <= wave.n_modes else 2 * wave.n_modes
    wide = replace(wave, psi=resample(wave.psi, make_grid(n)))
    doubled = eigen_counts(assemble_linearized(wide, doubled_modes, cfg), cfg.zero_tol)
    return (base.n, base.z) == (doubled.n, doubled.z)


def branch_suite(branch: Branch, cfg: SolverConfig, report: VerificationReport) -> None:
    """Per-point identities, closed forms, counts and spectra on a sample of a traced branch."""
    alpha = branch.alpha
    if not branch.points:
        report.add("branch has points", 1.0, 0.0, passed=False)
        return

    worst: Dict[str, float] = {"range": 0.0, "bprime_gap": 0.0, "det_P": 0.0, "det_D": 0.0, "gamma_prime": 0.0}
    counts_ok = invariance_ok = lobes_ok = spectra_ok = True
    q_values: List[Tuple[float, float]] = []
    q_bound_gap = -np.inf

    for i in _sample_indices(len(branch.points)):
        wave = branch.waves[i]
        neighbors = _neighbors(alpha, wave, cfg)
        analysis = analyze_point(wave, cfg, neighbors=neighbors, with_constraints=True, with_spectrum=True)
        verdict = analysis.verdict
        if analysis.range_residuals:
            worst["range"] = max(worst["range"], max(analysis.range_residuals.values()))
        if math.isfinite(analysis.b_prime.method_gap):
            worst["bprime_gap"] = max(worst["bprime_gap"],
                                      analysis.b_prime.method_gap / max(1.0, abs(verdict.b_prime)))
        constraints = analysis.constraints
        if constraints is not None and not constraints.near_fold:
            worst["det_P"] = max(worst["det_P"], constraints.det_P_error)
            worst["det_D"] = max(worst["det_D"], constraints.det_D_error)

        left, right = (diagnostics(n).gamma for n in neighbors)
        gamma_prime = (right - left) / (2.0 * FD_STEP)
        worst["gamma_prime"] = max(worst["gamma_prime"], _relative(gamma_prime, 3.0 * wave.b))

        s = verdict.c_plus_2bprime
        if abs(s) > FOLD_GAP:
            counts_ok &= predicted_counts(s) == (analysis.counts.n, analysis.counts.z)
            invariance_ok &= _count_invariance(wave, cfg, analysis.b_prime.derivative.size - 1)
        lobes_ok &= is_single_lobe(wave.psi)

        spectrum = analysis.spectrum
        if verdict.b_prime < -cfg.bprime_tol:
            growing = spectrum.eigenvalues[spectrum.eigenvalues.real > 1e-4]
            spectra_ok &= growing.size == 1 and abs(growing[0].imag) < 1e-6
        elif verdict.b_prime > cfg.bprime_tol:
            spectra_ok &= spectrum.max_real_part < 1e-6

        q = diagnostics(wave).q_value
        if q is not None:
            q_values.append((wave.c, q))
            q_bound_gap = max(q_bound_gap, q - two_mode_bound(alpha, wave.c))

    report.add("range identities", worst["range"], 1e-6)
    report.add("b' linear solve vs finite difference", worst["bprime_gap"], 1e-4)
    report.add("det P(0) closed form", worst["det_P"], 1e-4)
    report.add("det D(0) closed form", worst["det_D"], 1e-4)
    report.add("gamma'(c) = 3b(c)", worst["gamma_prime"], 1e-3)
    report.add("eigenvalue counts match sign of c + 2b'", 0.0, 0.0, passed=counts_ok)
    report.add("eigenvalue counts unchanged under K -> 2K", 0.0, 0.0, passed=invariance_ok)
    report.add("profiles are single-lobe", 0.0, 0.0, passed=lobes_ok)
    report.add("unstable spectrum iff b' < 0", 0.0, 0.0, passed=spectra_ok)
    report.add("q below the two-mode bound", max(q_bound_gap, 0.0), 0.0, detail=f"max(q - bound)={q_bound_gap:.3e}")
    near = [q for c, q in sorted(q_values) if c <= -0.5]
    report.add("q increases away from c = -1", 0.0, 0.0, passed=bool(np.all(np.diff(near) > 0)))

    for event in branch.events:
        if event["kind"] != "fold":
            continue
        c_col = branch.column("c")
        idx = int(np.searchsorted(c_col, event["c_left"]))
        window = branch.column("b")[max(0, idx - 3): idx + 5]
        report.add(f"b(c) monotone through fold near c={event['c_left']:.4g}", 0.0, 0.0,
                   passed=bool(np.all(np.diff(window) > 0)))

    if alpha == 1.0:
        b_gap = float(np.max(np.abs(branch.column("b") - branch.column("c") - 1.0)))
        mu_gap = float(np.max(np.abs(branch.column("mu") - branch.column("omega"))))
        report.add("BO branch b = c + 1", b_gap, 1e-6)
        report.add("BO branch mu = omega", mu_gap, 1e-6)


def variational_suite(alpha: float, cfg: SolverConfig, c_range: Tuple[float, float],
                      report: VerificationReport) -> None:
    """Variational minimizer against Newton at one speed inside the range."""
    c = float(np.clip(0.0, *c_range))
    newton_wave = solve_at_speed(alpha, c, cfg)
    try:
        minimizer = variational_minimize(alpha, c, cfg)
    except SolverError as exc:
        report.add(f"variational minimizer at c={c:g}", math.inf, 1e-6, detail=str(exc))
        return
    report.add(f"variational vs Newton at c={c:g}", _profile_gap(minimizer, newton_wave), 1e-6)


def run_verify(alpha: float, c_range: Tuple[float, float], cfg: Optional[SolverConfig] = None) -> VerificationReport:
    """
    Run every suite that applies to alpha.

    Args:
        alpha: Dispersion exponent
        c_range: Speeds covered by the branch checks
        cfg: Solver settings

    Returns:
        VerificationReport; solver failures propagate
    """
    cfg = cfg or SolverConfig()
    report = VerificationReport(alpha=float(alpha))
    LOGGER.info(f"verifying alpha={alpha} over c in [{c_range[0]}, {c_range[1]}]")
    exact_suite(alpha, cfg, report)
    stokes_suite(alpha, cfg, report)
    small_amplitude_suite(alpha, cfg, report)
    branch = continue_branch(alpha, c_range, cfg, analyze=True)
    branch_suite(branch, cfg, report)
    if alpha >= 1.0:
        variational_suite(alpha, cfg, c_range, report)
    return report


def stokes_table(alpha: float, amplitudes: Sequence[float], cfg: Optional[SolverConfig] = None) -> List[Dict]:
    """Stokes prediction against Newton at fixed amplitude, one row per amplitude."""
    cfg = cfg or SolverConfig()
    rows = []
    for a in amplitudes:
        wave = _amplitude_wave(alpha, a, cfg)
        stokes = stokes_zero_mean(alpha, a, wave.psi.grid)
        rows.append({
            "a": a,
            "c_newton": wave.c,
            "c_stokes": stokes_speed(alpha, a),
            "b_newton": wave.b,
            "b_stokes": stokes.b,
            "profile_error": (wave.psi - stokes.psi).max_norm(),
        })
    return rows
