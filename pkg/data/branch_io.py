"""CSV and JSON interchange for traced branches, exact-solution tables and spectra.

The CSV files carry no timestamps so that a fixed configuration always
produces the same bytes; run provenance goes to the JSON sidecar.
"""
from __future__ import annotations

import json
import logging
import math
import time
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from config import settings
from models.continuation import Branch, BranchPoint
from utils.errors import BranchCsvError
from utils.fourier_core import make_grid
from utils.special_functions import bo_exact, kdv_exact

LOGGER = logging.getLogger(__name__)

BRANCH_COLUMNS = (
    "c", "b", "omega", "mu", "gamma", "b_prime", "c_plus_2bprime",
    "n_neg", "z_zero", "verdict", "n_modes", "residual",
)
INTEGER_COLUMNS = ("n_neg", "z_zero", "n_modes")
VERDICTS = ("Stable", "MarginallyStable", "Unstable", "DegenerateKernel", "")
EXACT_COLUMNS = ("c", "b", "omega", "mu", "parameter")
OMEGA_TOL = 1e-8
# left empty for points traced without stability analysis
OPTIONAL_COLUMNS = ("mu", "gamma", "b_prime", "c_plus_2bprime")


def branch_stem(alpha: float) -> str:
    return f"branch_alpha{alpha:g}"


def validate_point(point: BranchPoint, residual_tol: float, row: Optional[int] = None) -> None:
    """Check the invariants every emitted row must satisfy."""
    if point.b < 0.0:
        raise BranchCsvError(f"b = {point.b:.6g} is negative", row)
    omega_gap = abs(point.omega ** 2 - (point.c ** 2 + 4.0 * point.b))
    if omega_gap > OMEGA_TOL * max(1.0, point.omega ** 2):
        raise BranchCsvError(f"omega^2 differs from c^2 + 4b by {omega_gap:.3e}", row)
    if not point.residual < residual_tol:
        raise BranchCsvError(f"residual {point.residual:.3e} is not below {residual_tol:.1e}", row)
    if not math.isnan(point.mu) and point.mu < 0.0:
        raise BranchCsvError(f"mu = {point.mu:.6g} is negative", row)
    if point.verdict not in VERDICTS:
        raise BranchCsvError(f"unknown verdict {point.verdict!r}", row)


def branch_frame(points: Sequence[BranchPoint]) -> pd.DataFrame:
    frame = pd.DataFrame([p.to_dict() for p in points], columns=list(BRANCH_COLUMNS))
    for name in INTEGER_COLUMNS:
        frame[name] = frame[name].astype("int64")
    return frame


def write_branch_csv(branch: Branch, out_dir, residual_tol: float) -> Path:
    """
    Validate every point and write branch_alpha<alpha>.csv.

    Args:
        branch: Traced branch (possibly partial)
        out_dir: Output directory, created when missing
        residual_tol: Bound on the stored relative residual

    Returns:
        Path of the CSV file
    """
    for row, point in enumerate(branch.points, start=1):
        validate_point(point, residual_tol, row)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{branch_stem(branch.alpha)}.csv"
    branch_frame(branch.points).to_csv(path, index=False, float_format=settings.CSV_FLOAT_FORMAT,
                                       lineterminator="\n")
    LOGGER.info(f"wrote {len(branch.points)} points to {path}")
    return path


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_branch_json(branch: Branch, out_dir, status: str = "complete",
                      message: Optional[str] = None) -> Path:
    """JSON sidecar with configuration, seed provenance, events and wall time."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{branch_stem(branch.alpha)}.json"
    payload = {
        "schema": settings.BRANCH_SCHEMA,
        "alpha": branch.alpha,
        "status": status,
        "message": message,
        "n_points": len(branch.points),
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "metadata": branch.metadata,
        "events": branch.events,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(payload), f, indent=2, sort_keys=True)
    LOGGER.info(f"wrote metadata to {path}")
    return path


def _parse_float(raw: str, column: str, row: int) -> float:
    if raw == "" and column in OPTIONAL_COLUMNS:
        return float("nan")
    try:
        return float(raw)
    except ValueError:
        raise BranchCsvError(f"column {column!r} holds {raw!r}, expected a number", row) from None


def _parse_int(raw: str, column: str, row: int) -> int:
    try:
        return int(raw)
    except ValueError:
        raise BranchCsvError(f"column {column!r} holds {raw!r}, expected an integer", row) from None


def read_branch_csv(path) -> pd.DataFrame:
    """
    Read a branch CSV, checking the header and every row.

    Rows are numbered from 1 after the header in error messages.
    """
    path = Path(path)
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise BranchCsvError(f"{path} is empty") from None
    except pd.errors.ParserError as exc:
        raise BranchCsvError(f"{path} is not valid CSV: {exc}") from None
    if tuple(raw.columns) != BRANCH_COLUMNS:
        raise BranchCsvError(f"header {','.join(raw.columns)} does not match {','.join(BRANCH_COLUMNS)}", 0)
    if raw.empty:
        raise BranchCsvError(f"{path} has a header but no rows")

    records: List[Dict] = []
    for row, values in enumerate(raw.itertuples(index=False), start=1):
        record = {}
        for column, cell in zip(BRANCH_COLUMNS, values):
            if column == "verdict":
                if cell not in VERDICTS:
                    raise BranchCsvError(f"unknown verdict {cell!r}", row)
                record[column] = cell
            elif column in INTEGER_COLUMNS:
                record[column] = _parse_int(cell, column, row)
            else:
                record[column] = _parse_float(cell, column, row)
        records.append(record)
    return pd.DataFrame.from_records(records, columns=list(BRANCH_COLUMNS))


def exact_frame(alpha: float, parameters: Iterable[float], n_modes: int = 256) -> pd.DataFrame:
    """
    Closed-form branch points: BO waves over gamma (alpha = 1) or KdV over k (alpha = 2).
    """
    grid = make_grid(n_modes)
    if alpha == 1.0:
        waves = [bo_exact(p, grid) for p in parameters]
    elif alpha == 2.0:
        waves = [kdv_exact(p, grid) for p in parameters]
    else:
        raise ValueError(f"closed-form waves exist only for alpha = 1 and alpha = 2, got {alpha}")
    rows = [{"c": w.c, "b": w.b, "omega": w.omega, "mu": w.mu, "parameter": w.parameter} for w in waves]
    return pd.DataFrame(rows, columns=list(EXACT_COLUMNS)).sort_values("c", kind="mergesort")


def write_exact_csv(frame: pd.DataFrame, alpha: float, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"exact_alpha{alpha:g}.csv"
    frame.to_csv(path, index=False, float_format=settings.CSV_FLOAT_FORMAT, lineterminator="\n")
    LOGGER.info(f"wrote {len(frame)} exact points to {path}")
    return path


def write_spectrum_csv(rows: List[Dict], alpha: float, c: float, out_dir) -> Path:
    """Eigenvalue table with columns operator, index, real, imag."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"spectrum_alpha{alpha:g}_c{c:g}.csv"
    frame = pd.DataFrame(rows, columns=["operator", "index", "real", "imag"])
    frame.to_csv(path, index=False, float_format=settings.CSV_FLOAT_FORMAT, lineterminator="\n")
    LOGGER.info(f"wrote {len(frame)} eigenvalues to {path}")
    return path
