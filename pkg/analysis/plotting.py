"""Static SVG figures of traced branches: b versus c and mu versus omega."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from config import settings  # noqa: E402
from data.branch_io import read_branch_csv  # noqa: E402

LOGGER = logging.getLogger(__name__)

PLOT_KINDS = ("b_vs_c", "mu_vs_omega")
DPI = 100
STABLE_STYLE = {"color": "tab:blue", "marker": "o", "linestyle": "none", "markersize": 3, "label": "stable"}
UNSTABLE_STYLE = {"color": "tab:red", "marker": "x", "linestyle": "none", "markersize": 4, "label": "unstable"}
OTHER_STYLE = {"color": "tab:gray", "marker": ".", "linestyle": "none", "markersize": 3, "label": "unclassified"}


def _split(frame):
    stable = frame["verdict"].isin(["Stable", "MarginallyStable"])
    unstable = frame["verdict"] == "Unstable"
    return frame[stable], frame[unstable], frame[~(stable | unstable)]


def emit_plot(csv_path, kind: str, out_path: Optional[Path] = None) -> Path:
    """
    Render one figure from a branch CSV.

    Args:
        csv_path: CSV with the canonical branch header
        kind: "b_vs_c" or "mu_vs_omega"
        out_path: Target SVG; defaults to <kind>.svg next to the CSV

    Returns:
        Path of the SVG file
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {', '.join(PLOT_KINDS)}")
    frame = read_branch_csv(csv_path)
    out_path = Path(out_path) if out_path else Path(csv_path).with_name(f"{kind}.svg")
    x_col, y_col = ("c", "b") if kind == "b_vs_c" else ("omega", "mu")

    plt.rcParams["svg.hashsalt"] = "fkdv"
    fig, ax = plt.subplots(figsize=(settings.PLOT_WIDTH_PX / DPI, settings.PLOT_HEIGHT_PX / DPI), dpi=DPI)
    ax.plot(frame[x_col], frame[y_col], color="lightgray", linewidth=1.0, zorder=1)
    for part, style in zip(_split(frame), (STABLE_STYLE, UNSTABLE_STYLE, OTHER_STYLE)):
        if not part.empty:
            ax.plot(part[x_col], part[y_col], zorder=2, **style)

    if kind == "mu_vs_omega":
        # constant solution phi = omega
        lo = min(1.0, float(frame["omega"].min()))
        hi = float(frame["omega"].max())
        grid = np.linspace(max(0.0, lo - 0.05 * (hi - lo)), hi, 200)
        ax.plot(grid, grid ** 2, color="black", linestyle="--", linewidth=1.0, label=r"$\mu = \omega^2$")
        ax.set_xlabel(r"$\omega$")
        ax.set_ylabel(r"$\mu$", rotation=0)
    else:
        ax.set_xlabel(r"$c$")
        ax.set_ylabel(r"$b$", rotation=0)
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    LOGGER.info(f"wrote {kind} plot to {out_path}")
    return out_path
