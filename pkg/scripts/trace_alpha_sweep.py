"""Trace branches for several alpha values in parallel processes.

Usage:
  python scripts/trace_alpha_sweep.py 0.45 0.55 0.6 1 2 --c-max 10 --jobs 4
"""
import argparse
import logging
import sys
from pathlib import Path

# Ensure repo root is on sys.path so imports like `models` and `data` work
REPO_ROOT = Path(__file__).resolve().parents[1]
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

from joblib import Parallel, delayed
from tabulate import tabulate

from config import settings
from data.branch_io import write_branch_csv, write_branch_json
from models.continuation import continue_branch
from models.wave_solvers import SolverConfig
from utils.errors import ContinuationAbort

logging.basicConfig(level=logging.INFO, format=settings.LOG_FORMAT)
logger = logging.getLogger(__name__)


def trace_one(alpha: float, c_min: float, c_max: float, out_dir: str) -> dict:
    """Trace and write one branch; returns a summary row."""
    cfg = SolverConfig()
    status = "complete"
    try:
        branch = continue_branch(alpha, (c_min, c_max), cfg)
    except ContinuationAbort as exc:
        logger.error(f"alpha={alpha}: {exc}")
        branch, status = exc.branch, "aborted"
    write_branch_csv(branch, out_dir, cfg.residual_tol)
    write_branch_json(branch, out_dir, status=status)
    folds = [e for e in branch.events if e["kind"] == "fold"]
    changes = [e for e in branch.events if e["kind"] == "stability_change"]
    return {
        "alpha": alpha,
        "points": len(branch.points),
        "status": status,
        "fold near c": folds[0]["c_left"] if folds else None,
        "b' sign change near c": changes[0]["c_left"] if changes else None,
    }


def main():
    parser = argparse.ArgumentParser(description="Trace branches for several alpha values")
    parser.add_argument("alphas", type=float, nargs="+")
    parser.add_argument("--c-min", type=float, default=-0.9)
    parser.add_argument("--c-max", type=float, default=settings.DEFAULT_C_MAX)
    parser.add_argument("--out", default=settings.OUTPUT_DIR)
    parser.add_argument("--jobs", type=int, default=-1)
    args = parser.parse_args()

    rows = Parallel(n_jobs=args.jobs)(
        delayed(trace_one)(alpha, args.c_min, args.c_max, args.out) for alpha in args.alphas
    )
    print(tabulate(rows, headers="keys", tablefmt="grid"))


if __name__ == "__main__":
    main()
