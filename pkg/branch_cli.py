#!/usr/bin/env python
"""
Command-line interface for periodic waves of the fractional KdV equation.

Usage:
    python branch_cli.py trace --alpha 1 --c-range -0.9:5
    python branch_cli.py trace --alpha 0.55 --method petviashvili --format csv,json,svg
    python branch_cli.py verify --alpha 2
    python branch_cli.py stokes --alpha 0.6
    python branch_cli.py spectrum --alpha 1 --c 0
    python branch_cli.py exact --alpha 2 --c-range -0.5:20

Exit codes: 0 success, 1 verification failure, 2 solver abort, 3 config error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.linalg import eigvalsh
from scipy.optimize import brentq
from tabulate import tabulate

from analysis.plotting import PLOT_KINDS, emit_plot
from analysis.stability_analysis import analyze_point, assemble_linearized, unstable_eigenvalue
from analysis.verification import STOKES_AMPLITUDES, stokes_table, write_report
from analysis.verification import run_verify as verify_alpha
from config import settings
from data.branch_io import (
    exact_frame,
    write_branch_csv,
    write_branch_json,
    write_exact_csv,
    write_spectrum_csv,
)
from models.continuation import METHODS, Branch, solve_at_speed, trace_branch
from models.variational import VARIATIONAL_TOL
from models.wave_solvers import SolverConfig
from utils.errors import (
    BranchCsvError,
    ConfigError,
    ContinuationAbort,
    DomainError,
    ResolutionError,
    SolverError,
)
from utils.special_functions import bo_gamma_for_speed, kdv_parameters

LOGGER = logging.getLogger("branch_cli")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_SOLVER_ABORT = 2
EXIT_CONFIG_ERROR = 3

COMMANDS = ("trace", "verify", "stokes", "spectrum", "exact")
FORMATS = frozenset({"csv", "json", "svg"})
DEFAULT_C_MIN = -0.9
VERIFY_C_MAX = 2.0
SPECTRUM_ROWS = 20
EXACT_POINTS = 40


@dataclass
class RunConfig:
    command: str
    alpha: float
    c_min: float
    c_max: float
    solver: SolverConfig = field(default_factory=SolverConfig)
    method: str = "newton"
    output_dir: Path = Path(settings.OUTPUT_DIR)
    formats: FrozenSet[str] = frozenset({"csv", "json"})
    c: Optional[float] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not 1.0 / 3.0 < self.alpha <= 2.0:
            raise ConfigError(f"alpha must lie in (1/3, 2], got {self.alpha}")
        if not self.c_min > -1.0:
            raise ConfigError(f"c_min must exceed -1, got {self.c_min}")
        if not self.c_min < self.c_max:
            raise ConfigError(f"c_min={self.c_min} must be below c_max={self.c_max}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {', '.join(METHODS)}, got {self.method!r}")
        unknown = set(self.formats) - FORMATS
        if unknown:
            raise ConfigError(f"unknown output format(s): {', '.join(sorted(unknown))}")
        if self.command == "spectrum" and (self.c is None or not self.c > -1.0):
            raise ConfigError("spectrum needs --c with c > -1")


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def parse_c_range(text: str) -> tuple:
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise ConfigError(f"--c-range expects <lo>:<hi>, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="branch_cli", description="Periodic waves of the fractional KdV equation")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--alpha", type=float, required=True, help="dispersion exponent in (1/3, 2]")
    parser.add_argument("--c-range", dest="c_range", default=None, help="speed interval <lo>:<hi>")
    parser.add_argument("--c", type=float, default=None, help="single speed (spectrum)")
    parser.add_argument("--modes", type=int, default=None, help="minimum number of collocation points N")
    parser.add_argument("--tol", type=float, default=None, help="residual tolerance")
    parser.add_argument("--tail-tol", dest="tail_tol", type=float, default=None, help="spectral tail tolerance")
    parser.add_argument("--method", choices=METHODS, default="newton")
    parser.add_argument("--step", type=float, default=None, help="initial continuation step in c")
    parser.add_argument("--out", default=settings.OUTPUT_DIR, help="output directory")
    parser.add_argument("--format", dest="formats", default="csv,json", help="comma list of csv,json,svg")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _join_negative_values(argv: Sequence[str]) -> List[str]:
    # argparse reads "-0.9:5" as an option
    out: List[str] = []
    it = iter(argv)
    for token in it:
        if token in ("--c-range", "--c"):
            value = next(it, None)
            out.append(token if value is None else f"{token}={value}")
        else:
            out.append(token)
    return out


def _solver_config(args) -> SolverConfig:
    overrides: Dict = {}
    if args.tol is not None:
        overrides["residual_tol"] = args.tol
    if args.tail_tol is not None:
        overrides["tail_tol"] = args.tail_tol
    if args.modes is not None:
        overrides["n_min"] = args.modes
        overrides["n_max"] = max(args.modes, settings.N_MAX)
    if args.step is not None:
        overrides["continuation_step"] = args.step
        overrides["step_max"] = max(args.step, settings.STEP_MAX)
        overrides["step_min"] = min(args.step, settings.STEP_MIN)
    return SolverConfig(**overrides)


def config_from_args(args) -> RunConfig:
    default_hi = VERIFY_C_MAX if args.command == "verify" else settings.DEFAULT_C_MAX
    c_min, c_max = parse_c_range(args.c_range) if args.c_range else (DEFAULT_C_MIN, default_hi)
    formats = frozenset(f.strip() for f in args.formats.split(",") if f.strip())
    return RunConfig(command=args.command, alpha=args.alpha, c_min=c_min, c_max=c_max,
                     solver=_solver_config(args), method=args.method, output_dir=Path(args.out),
                     formats=formats, c=args.c)


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if settings.LOG_FILE:
        handlers.append(logging.FileHandler(settings.LOG_FILE))
    logging.basicConfig(level=level, format=settings.LOG_FORMAT, handlers=handlers, force=True)


def _summary(branch: Branch) -> str:
    points = branch.points
    if not points:
        return "(no points)"
    shown = points if len(points) <= 12 else [points[i] for i in np.linspace(0, len(points) - 1, 12).astype(int)]
    rows = [{"c": p.c, "b": p.b, "omega": p.omega, "b'": p.b_prime, "c+2b'": p.c_plus_2bprime,
             "(n,z)": f"({p.n_neg},{p.z_zero})", "verdict": p.verdict, "N": p.n_modes} for p in shown]
    return tabulate(rows, headers="keys", tablefmt="grid", floatfmt=".6g")


def _write_branch(cfg: RunConfig, branch: Branch, status: str, message: Optional[str] = None) -> None:
    residual_tol = VARIATIONAL_TOL if cfg.method == "variational" else cfg.solver.residual_tol
    csv_path = None
    if "csv" in cfg.formats or "svg" in cfg.formats:
        csv_path = write_branch_csv(branch, cfg.output_dir, residual_tol)
    if "json" in cfg.formats:
        write_branch_json(branch, cfg.output_dir, status=status, message=message)
    if "svg" in cfg.formats and branch.points:
        for kind in PLOT_KINDS:
            emit_plot(csv_path, kind, cfg.output_dir / f"{kind}.svg")


def run_trace(cfg: RunConfig) -> int:
    try:
        branch = trace_branch(cfg.alpha, (cfg.c_min, cfg.c_max), cfg.solver, method=cfg.method)
    except ContinuationAbort as exc:
        LOGGER.error(f"continuation aborted: {exc}")
        if exc.branch is not None:
            _write_branch(cfg, exc.branch, status="aborted", message=str(exc))
        return EXIT_SOLVER_ABORT
    print(_summary(branch))
    for event in branch.events:
        LOGGER.info(f"{event['kind']} between c={event['c_left']:.6g} and c={event['c_right']:.6g}")
    _write_branch(cfg, branch, status="complete")
    return EXIT_OK


def run_verify(cfg: RunConfig) -> int:
    report = verify_alpha(cfg.alpha, (cfg.c_min, cfg.c_max), cfg.solver)
    write_report(report, cfg.output_dir)
    rows = [{"check": c.name, "measured": c.measured, "limit": c.threshold, "result": "PASS" if c.passed else "FAIL"}
            for c in report.checks]
    print(tabulate(rows, headers="keys", tablefmt="grid", floatfmt=".3e"))
    failure = report.first_failure
    if failure is not None:
        print(f"verification failed: {failure.name}")
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def run_stokes(cfg: RunConfig) -> int:
    rows = stokes_table(cfg.alpha, STOKES_AMPLITUDES, cfg.solver)
    print(tabulate(rows, headers="keys", tablefmt="grid", floatfmt=".10g"))
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.output_dir / f"stokes_alpha{cfg.alpha:g}.csv"
    pd.DataFrame(rows).to_csv(path, index=False, float_format=settings.CSV_FLOAT_FORMAT, lineterminator="\n")
    LOGGER.info(f"wrote Stokes comparison to {path}")
    return EXIT_OK


def run_spectrum(cfg: RunConfig) -> int:
    """Lowest eigenvalues of L and rightmost eigenvalues of d/dx L at a single speed."""
    wave = solve_at_speed(cfg.alpha, cfg.c, cfg.solver)
    analysis = analyze_point(wave, cfg.solver)
    lowest = eigvalsh(assemble_linearized(wave, None, cfg.solver).entries)[:SPECTRUM_ROWS]
    spectrum = unstable_eigenvalue(wave, None, cfg.solver)
    rightmost = spectrum.raw_eigenvalues[np.argsort(-spectrum.raw_eigenvalues.real, kind="stable")][:SPECTRUM_ROWS]
    rows = [{"operator": "L", "index": i, "real": float(v), "imag": 0.0} for i, v in enumerate(lowest)]
    rows += [{"operator": "dxL", "index": i, "real": float(v.real), "imag": float(v.imag)}
             for i, v in enumerate(rightmost)]
    write_spectrum_csv(rows, cfg.alpha, cfg.c, cfg.output_dir)
    verdict = analysis.verdict
    print(f"alpha={cfg.alpha:g} c={wave.c:g}: b={wave.b:.10g} b'={verdict.b_prime:.6g} "
          f"(n,z)=({verdict.n_L},{verdict.z_L}) {verdict.kind.value}; spectral abscissa {spectrum.max_real_part:.3e}")
    return EXIT_OK


def _kdv_modulus_for_speed(c: float) -> float:
    return brentq(lambda k: kdv_parameters(k)[1] - c, 1e-6, 1.0 - 1e-12)


def run_exact(cfg: RunConfig) -> int:
    speeds = np.linspace(cfg.c_min, cfg.c_max, EXACT_POINTS)
    if cfg.alpha == 1.0:
        parameters = [bo_gamma_for_speed(c) for c in speeds]
    elif cfg.alpha == 2.0:
        top = kdv_parameters(1.0 - 1e-12)[1]
        parameters = [_kdv_modulus_for_speed(c) for c in speeds if kdv_parameters(1e-6)[1] < c < top]
    else:
        raise ConfigError(f"closed-form waves exist only for alpha = 1 and alpha = 2, got {cfg.alpha}")
    frame = exact_frame(cfg.alpha, parameters)
    write_exact_csv(frame, cfg.alpha, cfg.output_dir)
    print(tabulate(frame.head(12), headers="keys", tablefmt="grid", floatfmt=".8g", showindex=False))
    return EXIT_OK


HANDLERS = {
    "trace": run_trace,
    "verify": run_verify,
    "stokes": run_stokes,
    "spectrum": run_spectrum,
    "exact": run_exact,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    verbose = "-v" in argv or "--verbose" in argv
    configure_logging(verbose)
    try:
        args = build_parser().parse_args(_join_negative_values(argv))
        cfg = config_from_args(args)
    except ConfigError as exc:
        LOGGER.error(f"configuration error: {exc}")
        return EXIT_CONFIG_ERROR
    LOGGER.info(f"{cfg.command}: alpha={cfg.alpha} c in [{cfg.c_min}, {cfg.c_max}] method={cfg.method}")
    try:
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        LOGGER.error(f"configuration error: {exc}")
        return EXIT_CONFIG_ERROR
    except (SolverError, DomainError, ResolutionError, BranchCsvError) as exc:
        LOGGER.error(f"solver failure: {exc}")
        return EXIT_SOLVER_ABORT


if __name__ == "__main__":
    sys.exit(main())
