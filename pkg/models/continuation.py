"""Branch tracing: continuation of single-lobe waves in c with adaptive resolution.

Every accepted wave becomes a BranchPoint carrying its stability data, so a
traced Branch is the existence curve b(c) together with the verdicts.
"""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from analysis.stability_analysis import PointAnalysis, analyze_point
from models.galileo import NormalizedWave, ZeroMeanWave, to_zero_mean
from models.stokes_seed import (
    amplitude_for_speed,
    stokes_coefficients,
    stokes_speed,
    stokes_speed_derivative,
    stokes_wave,
    stokes_zero_mean,
)
from models.variational import variational_minimize
from models.wave_solvers import SolverConfig, newton_solve, petviashvili_solve
from utils.errors import (
    ConfigError,
    ConstantWaveError,
    ContinuationAbort,
    NearFoldError,
    NewtonConvergenceError,
    PetviashviliDivergenceError,
    ResolutionError,
    SolverError,
)
from utils.fourier_core import make_grid, resample, spectral_tail_max

LOGGER = logging.getLogger(__name__)

STEP_GROWTH = 1.5
EASY_NEWTON_ITERATIONS = 4
METHODS = ("newton", "petviashvili", "variational")


@dataclass(frozen=True)
class BranchPoint:
    c: float
    b: float
    omega: float
    mu: float
    gamma: float
    b_prime: float
    c_plus_2bprime: float
    n_neg: int
    z_zero: int
    verdict: str
    n_modes: int
    residual: float

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class Branch:
    alpha: float
    points: List[BranchPoint] = field(default_factory=list)
    metadata: Dict = field(default_factory=dict)
    waves: List[ZeroMeanWave] = field(default_factory=list, repr=False)
    events: List[Dict] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points], dtype=float)

    def append(self, point: BranchPoint, wave: ZeroMeanWave) -> None:
        if self.points and point.c <= self.points[-1].c:
            raise ValueError(f"branch points must increase in c ({point.c} after {self.points[-1].c})")
        self.points.append(point)
        self.waves.append(wave)

    def __len__(self) -> int:
        return len(self.points)


def make_point(wave: ZeroMeanWave, analysis: Optional[PointAnalysis]) -> BranchPoint:
    """Pack a solved wave and its stability analysis into a BranchPoint."""
    if analysis is None:
        nan = float("nan")
        return BranchPoint(c=wave.c, b=wave.b, omega=wave.omega, mu=nan, gamma=nan, b_prime=nan,
                           c_plus_2bprime=nan, n_neg=-1, z_zero=-1, verdict="", n_modes=wave.n_modes,
                           residual=wave.residual)
    v = analysis.verdict
    return BranchPoint(
        c=float(wave.c),
        b=float(wave.b),
        omega=float(wave.omega),
        mu=float(analysis.mu),
        gamma=float(analysis.gamma),
        b_prime=float(v.b_prime),
        c_plus_2bprime=float(v.c_plus_2bprime),
        n_neg=int(v.n_L),
        z_zero=int(v.z_L),
        verdict=v.kind.value,
        n_modes=int(wave.n_modes),
        residual=float(wave.residual),
    )


def _validate_range(c_range: Tuple[float, float]) -> Tuple[float, float]:
    c_lo, c_hi = (float(v) for v in c_range)
    if not c_lo > -1.0:
        raise ConfigError(f"c range must lie above -1, got c_min={c_lo}")
    if not c_lo <= c_hi:
        raise ConfigError(f"empty c range [{c_lo}, {c_hi}]")
    return c_lo, c_hi


def _refine_resolution(alpha: float, wave: ZeroMeanWave, cfg: SolverConfig) -> ZeroMeanWave:
    """Double N until the spectral tail of psi is below tail_tol."""
    while spectral_tail_max(wave.psi, cfg.tail_window) > cfg.tail_tol:
        n_new = 2 * wave.n_modes
        if n_new > cfg.n_max:
            raise ResolutionError(f"wave at c={wave.c:.6g} needs more than n_max={cfg.n_max} points")
        LOGGER.info(f"tail {spectral_tail_max(wave.psi, cfg.tail_window):.2e} > {cfg.tail_tol:.0e} "
                    f"at c={wave.c:.6g}: N {wave.n_modes} -> {n_new}")
        seed = ZeroMeanWave(alpha=alpha, c=wave.c, b=wave.b, psi=resample(wave.psi, make_grid(n_new)))
        wave = newton_solve(alpha, seed, cfg, c=wave.c)
    return wave


def _seed_wave(alpha: float, c_target: float, cfg: SolverConfig) -> Tuple[ZeroMeanWave, float]:
    """Newton-refined Stokes wave at the seed amplitude, or at c_target if that is closer to -1."""
    a_seed = min(cfg.stokes_seed_amplitude, amplitude_for_speed(alpha, c_target))
    grid = make_grid(cfg.n_min)
    c_seed = stokes_speed(alpha, a_seed)
    stokes = stokes_zero_mean(alpha, a_seed, grid)
    wave = newton_solve(alpha, stokes, cfg, c=c_seed)
    return _refine_resolution(alpha, wave, cfg), a_seed


class _Marcher:
    """Secant-predictor / Newton-corrector march in c."""

    def __init__(self, alpha: float, cfg: SolverConfig, branch: Branch):
        self.alpha = alpha
        self.cfg = cfg
        self.branch = branch
        self.step = cfg.continuation_step

    def _predict(self, current: ZeroMeanWave, previous: Optional[ZeroMeanWave], tangent, c_next: float):
        h = c_next - current.c
        if previous is None:
            psi = current.psi + resample(tangent, current.psi.grid).scaled(h)
        else:
            prev_psi = resample(previous.psi, current.psi.grid)
            psi = current.psi + (current.psi - prev_psi).scaled(h / (current.c - previous.c))
        return ZeroMeanWave(alpha=self.alpha, c=c_next, b=current.b, psi=psi)

    def _corrector(self, seed: ZeroMeanWave, c_next: float) -> Tuple[ZeroMeanWave, int]:
        history: List[float] = []
        wave = newton_solve(self.alpha, seed, self.cfg, c=c_next, history=history)
        return _refine_resolution(self.alpha, wave, self.cfg), len(history)

    def march(self, current: ZeroMeanWave, c_end: float, tangent,
              on_accept: Callable[[ZeroMeanWave, Optional[ZeroMeanWave]], None],
              stops: Sequence[float] = ()) -> ZeroMeanWave:
        previous: Optional[ZeroMeanWave] = None
        pending_stops = sorted(s for s in stops if s > current.c)
        while current.c < c_end - 1e-12:
            limit = min([c_end] + pending_stops)
            c_next = min(current.c + self.step, limit)
            seed = self._predict(current, previous, tangent, c_next)
            try:
                wave, iterations = self._corrector(seed, c_next)
            except (NewtonConvergenceError, NearFoldError) as exc:
                self.step *= 0.5
                LOGGER.warning(f"corrector failed at c={c_next:.6g} ({exc}); step -> {self.step:.3g}")
                if self.step < self.cfg.step_min:
                    raise ContinuationAbort(f"step fell below step_min={self.cfg.step_min} near c={current.c:.6g}",
                                            self.branch, exc.residual) from exc
                continue
            except ResolutionError as exc:
                raise ContinuationAbort(str(exc), self.branch) from exc
            previous, current = current, wave
            pending_stops = [s for s in pending_stops if s > current.c + 1e-12]
            on_accept(current, previous)
            if iterations <= EASY_NEWTON_ITERATIONS:
                self.step = min(self.step * STEP_GROWTH, self.cfg.step_max)
        return current


def _record_events(branch: Branch, point: BranchPoint, marcher: Optional[_Marcher]) -> None:
    if len(branch.points) < 2:
        return
    prev = branch.points[-2]
    if np.sign(prev.c_plus_2bprime) * np.sign(point.c_plus_2bprime) < 0:
        event = {"kind": "fold", "c_left": prev.c, "c_right": point.c,
                 "c_plus_2bprime": [prev.c_plus_2bprime, point.c_plus_2bprime]}
        branch.events.append(event)
        LOGGER.info(f"fold in omega bracketed in c in [{prev.c:.6g}, {point.c:.6g}]")
        if marcher is not None:
            marcher.step = max(0.5 * marcher.step, marcher.cfg.step_min)
    if np.sign(prev.b_prime) * np.sign(point.b_prime) < 0:
        event = {"kind": "stability_change", "c_left": prev.c, "c_right": point.c,
                 "b_prime": [prev.b_prime, point.b_prime]}
        branch.events.append(event)
        LOGGER.info(f"b'(c) changes sign in [{prev.c:.6g}, {point.c:.6g}]")


def _accept(branch: Branch, wave: ZeroMeanWave, cfg: SolverConfig, analyze: bool,
            marcher: Optional[_Marcher] = None) -> None:
    try:
        analysis = analyze_point(wave, cfg) if analyze else None
    except ResolutionError as exc:
        raise ContinuationAbort(f"stability analysis failed at c={wave.c:.6g}: {exc}", branch) from exc
    point = make_point(wave, analysis)
    branch.append(point, wave)
    LOGGER.info(f"alpha={branch.alpha} c={point.c:.6g} b={point.b:.10g} b'={point.b_prime:.6g} "
                f"(n,z)=({point.n_neg},{point.z_zero}) {point.verdict} N={point.n_modes}")
    if analyze:
        _record_events(branch, point, marcher)


def _new_branch(alpha: float, cfg: SolverConfig, method: str, c_range: Tuple[float, float]) -> Branch:
    return Branch(alpha=float(alpha), metadata={
        "alpha": float(alpha),
        "method": method,
        "c_range": [float(c_range[0]), float(c_range[1])],
        "config": cfg.snapshot(),
    })


def continue_branch(alpha: float, c_range: Tuple[float, float], cfg: Optional[SolverConfig] = None,
                    analyze: bool = True, samples: Sequence[float] = ()) -> Branch:
    """
    Trace the single-lobe branch over c_range by continuation in c.

    Starts from a Newton-refined Stokes wave near c = -1, marches to c_min
    without recording, then records every accepted wave up to c_max.

    Args:
        alpha: Dispersion exponent
        c_range: (c_min, c_max) with c_min > -1
        cfg: Solver settings
        analyze: Run the stability analysis on each accepted wave
        samples: Extra speeds the march must land on exactly

    Returns:
        Branch ordered by c; ContinuationAbort carries the partial branch on failure
    """
    cfg = cfg or SolverConfig()
    c_lo, c_hi = _validate_range(c_range)
    started = time.time()
    branch = _new_branch(alpha, cfg, "newton", (c_lo, c_hi))

    try:
        seed, a_seed = _seed_wave(alpha, c_lo, cfg)
    except SolverError as exc:
        raise ContinuationAbort(f"Stokes seed failed to converge: {exc}", branch, exc.residual) from exc
    branch.metadata["seed"] = {"source": "stokes_zero_mean", "amplitude": a_seed, "c": seed.c,
                               "n_modes": seed.n_modes}
    LOGGER.info(f"alpha={alpha}: Stokes seed a={a_seed:.4g} at c={seed.c:.6g}")

    marcher = _Marcher(alpha, cfg, branch)
    tangent = stokes_speed_derivative(alpha, a_seed, make_grid(cfg.n_min))

    def on_accept(wave: ZeroMeanWave, _previous) -> None:
        if wave.c >= c_lo - 1e-12:
            _accept(branch, wave, cfg, analyze, marcher)

    if seed.c >= c_lo - 1e-12:
        _accept(branch, seed, cfg, analyze, marcher)
    stops = [c_lo] + [s for s in samples if c_lo <= s <= c_hi]
    marcher.march(seed, c_hi, tangent, on_accept, stops=stops)
    branch.metadata["wall_time_s"] = time.time() - started
    branch.metadata["events"] = branch.events
    return branch


def solve_at_speed(alpha: float, c: float, cfg: Optional[SolverConfig] = None) -> ZeroMeanWave:
    """Single-lobe wave at speed c, continued from the Stokes seed without stability analysis."""
    cfg = cfg or SolverConfig()
    _validate_range((c, c))
    seed, a_seed = _seed_wave(alpha, c, cfg)
    if seed.c >= c - 1e-12:
        return seed
    branch = _new_branch(alpha, cfg, "newton", (c, c))
    marcher = _Marcher(alpha, cfg, branch)
    tangent = stokes_speed_derivative(alpha, a_seed, make_grid(cfg.n_min))
    return marcher.march(seed, c, tangent, lambda w, p: None)


def petviashvili_branch(alpha: float, c_range: Tuple[float, float], cfg: Optional[SolverConfig] = None,
                        analyze: bool = True, omega_step: Optional[float] = None) -> Branch:
    """
    Existence curve from Petviashvili solves on an increasing omega grid.

    omega starts just above 1 and grows until the zero-mean speed passes c_max;
    each converged wave is polished by Newton at its zero-mean speed. omega
    values where the iteration fails are logged and skipped.
    """
    cfg = cfg or SolverConfig()
    c_lo, c_hi = _validate_range(c_range)
    started = time.time()
    branch = _new_branch(alpha, cfg, "petviashvili", (c_lo, c_hi))
    omega_step = omega_step or cfg.continuation_step
    co = stokes_coefficients(alpha)
    a0 = cfg.stokes_seed_amplitude if co.omega2 > 0 else 0.5
    omega = 1.0 + max(co.omega2 * a0 * a0, omega_step)
    grid = make_grid(cfg.n_min)
    seed = stokes_wave(alpha, a0, grid)
    skipped: List[float] = []
    collected: List[ZeroMeanWave] = []

    while True:
        try:
            wave = petviashvili_solve(alpha, omega, NormalizedWave(alpha, omega, seed.phi), cfg)
            wave = _refine_normalized(alpha, wave, cfg)
            zero_mean = to_zero_mean(wave)
            zero_mean = newton_solve(alpha, zero_mean, cfg, c=zero_mean.c)
        except (PetviashviliDivergenceError, ConstantWaveError, NewtonConvergenceError, NearFoldError) as exc:
            LOGGER.warning(f"Petviashvili failed at omega={omega:.6g}: {exc}")
            skipped.append(omega)
            if len(skipped) > 20 and not collected:
                raise ContinuationAbort("Petviashvili sweep never converged", branch) from exc
            omega += omega_step
            continue
        except ResolutionError as exc:
            raise ContinuationAbort(str(exc), branch) from exc
        seed = wave
        if zero_mean.c > c_hi + 1e-12:
            break
        if zero_mean.c >= c_lo - 1e-12 and (not collected or zero_mean.c > collected[-1].c):
            collected.append(zero_mean)
        omega += omega_step

    for zero_mean in collected:
        _accept(branch, zero_mean, cfg, analyze)
    branch.metadata["seed"] = {"source": "stokes_wave", "amplitude": a0}
    branch.metadata["skipped_omega"] = skipped
    branch.metadata["wall_time_s"] = time.time() - started
    branch.metadata["events"] = branch.events
    return branch


def _refine_normalized(alpha: float, wave: NormalizedWave, cfg: SolverConfig) -> NormalizedWave:
    while spectral_tail_max(wave.phi, cfg.tail_window) > cfg.tail_tol:
        n_new = 2 * wave.n_modes
        if n_new > cfg.n_max:
            raise ResolutionError(f"wave at omega={wave.omega:.6g} needs more than n_max={cfg.n_max} points")
        seed = NormalizedWave(alpha, wave.omega, resample(wave.phi, make_grid(n_new)))
        wave = petviashvili_solve(alpha, wave.omega, seed, cfg)
    return wave


def variational_branch(alpha: float, c_range: Tuple[float, float], cfg: Optional[SolverConfig] = None,
                       analyze: bool = True) -> Branch:
    """Independent variational solves on a uniform c grid with spacing continuation_step."""
    cfg = cfg or SolverConfig()
    c_lo, c_hi = _validate_range(c_range)
    started = time.time()
    branch = _new_branch(alpha, cfg, "variational", (c_lo, c_hi))
    count = max(1, int(np.floor((c_hi - c_lo) / cfg.continuation_step + 1e-9)) + 1)
    for c in np.linspace(c_lo, c_lo + (count - 1) * cfg.continuation_step, count):
        try:
            wave = variational_minimize(alpha, float(c), cfg)
        except (SolverError, ResolutionError) as exc:
            raise ContinuationAbort(f"variational solve failed at c={c:.6g}: {exc}", branch) from exc
        _accept(branch, wave, cfg, analyze)
    branch.metadata["wall_time_s"] = time.time() - started
    branch.metadata["events"] = branch.events
    return branch


def trace_branch(alpha: float, c_range: Tuple[float, float], cfg: Optional[SolverConfig] = None,
                 method: str = "newton", analyze: bool = True) -> Branch:
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if method == "petviashvili":
        return petviashvili_branch(alpha, c_range, cfg, analyze)
    if method == "variational":
        return variational_branch(alpha, c_range, cfg, analyze)
    return continue_branch(alpha, c_range, cfg, analyze)


def waves_at_omega(branch: Branch, omega: float, cfg: Optional[SolverConfig] = None) -> List[NormalizedWave]:
    """
    All branch waves with normalized speed omega, refined by Newton at fixed omega.

    Every consecutive pair of points whose omega values bracket the target
    seeds one solve; below omega = 1 a branch with a fold yields two waves.
    Brackets are half-open so a target on a branch node is solved once.
    """
    cfg = cfg or SolverConfig()
    omegas = branch.column("omega")
    found: List[NormalizedWave] = []
    for i in range(len(omegas) - 1):
        lo, hi = omegas[i], omegas[i + 1]
        last = i == len(omegas) - 2
        if (lo - omega) * (hi - omega) > 0 or (hi == omega and not last):
            continue
        nearest = i if abs(lo - omega) <= abs(hi - omega) else i + 1
        seed = branch.waves[nearest]
        found.append(newton_solve(branch.alpha, seed, cfg, omega=omega))
    return found

