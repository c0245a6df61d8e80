"""Configuration settings and solver defaults for the fractional KdV wave model.

Every constant may be overridden from the environment (or a `.env` file) by
prefixing its name with ``FKDV_``, e.g. ``FKDV_TAIL_TOL=1e-9``.
"""
from __future__ import annotations

import os
from typing import Optional

from dotenv import load_dotenv

load_dotenv()

ENV_PREFIX = "FKDV_"


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(ENV_PREFIX + name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ValueError(f"{ENV_PREFIX}{name} must be a number, got {raw!r}") from exc


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(ENV_PREFIX + name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"{ENV_PREFIX}{name} must be an integer, got {raw!r}") from exc


def _env_str(name: str, default: Optional[str]) -> Optional[str]:
    raw = os.getenv(ENV_PREFIX + name)
    return default if raw is None or raw == "" else raw


# Solver tolerances
RESIDUAL_TOL = _env_float("RESIDUAL_TOL", 1e-10)
PETVIASHVILI_MAX_ITER = _env_int("PETVIASHVILI_MAX_ITER", 10_000)
NEWTON_MAX_ITER = _env_int("NEWTON_MAX_ITER", 50)
PETVIASHVILI_EXPONENT = _env_float("PETVIASHVILI_EXPONENT", 2.0)
STABILIZER_TOL = 1e-10  # |M - 1| at acceptance

# Adaptive resolution
TAIL_TOL = _env_float("TAIL_TOL", 1e-8)
TAIL_WINDOW = _env_int("TAIL_WINDOW", 10)
N_MIN = _env_int("N_MIN", 64)
N_MAX = _env_int("N_MAX", 8192)
MAX_GALERKIN_MODES = _env_int("MAX_GALERKIN_MODES", 0)  # 0: n_max // 2 - 1

# Continuation in c
CONTINUATION_STEP = _env_float("CONTINUATION_STEP", 0.05)
STEP_MIN = _env_float("STEP_MIN", 1e-4)
STEP_MAX = _env_float("STEP_MAX", 0.5)
STOKES_SEED_AMPLITUDE = _env_float("STOKES_SEED_AMPLITUDE", 0.05)
DEFAULT_C_MAX = _env_float("DEFAULT_C_MAX", 30.0)

# Stability classification
ZERO_TOL = _env_float("ZERO_TOL", 1e-6)
BPRIME_TOL = _env_float("BPRIME_TOL", 1e-6)
DEGENERATE_TOL = _env_float("DEGENERATE_TOL", 1e-8)
FOLD_COND_LIMIT = _env_float("FOLD_COND_LIMIT", 1e10)

# Output
OUTPUT_DIR = _env_str("OUTPUT_DIR", "output")
CSV_FLOAT_FORMAT = "%.17g"
BRANCH_SCHEMA = "fkdv-branch/1"
VERIFY_SCHEMA = "fkdv-verify/1"
PLOT_WIDTH_PX = 700
PLOT_HEIGHT_PX = 600

# Logging
LOG_LEVEL = _env_str("LOG_LEVEL", "INFO")
LOG_FILE = _env_str("LOG_FILE", None)
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
