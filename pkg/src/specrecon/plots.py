"""Diagnostic SVG plots: spectrum overlays, log-log error-vs-c with fitted
slope, and density overlays.  Output is byte-deterministic given the inputs."""
from __future__ import annotations

from typing import Dict, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import EmptySeriesError, SizeMismatchError  # noqa: E402

KINDS = ("spectrum_overlay", "error_vs_c", "density_overlay")

# Fixed hash salt so element ids inside the SVG do not depend on the
# process; combined with metadata Date=None this makes output files
# byte-identical across runs.
matplotlib.rcParams["svg.hashsalt"] = "specrecon"


def _check_series(series: Dict[str, Tuple[Sequence[float], Sequence[float]]]):
    if not series:
        raise EmptySeriesError("no series to plot")
    out = {}
    for name, (x, y) in series.items():
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.size == 0 or y.size == 0:
            raise EmptySeriesError(f"series {name!r} is empty")
        if x.size != y.size:
            raise SizeMismatchError(f"series {name!r} has mismatched x/y lengths")
        out[name] = (x, y)
    return out


def fit_loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(x), np.log(y)
    return float(np.polyfit(lx, ly, 1)[0])


def emit_plot(
    series: Dict[str, Tuple[Sequence[float], Sequence[float]]],
    kind: str,
    path: str,
) -> str:
    """Render the named series to a standalone SVG file and return the path."""
    if kind not in KINDS:
        raise ValueError(f"unknown plot kind {kind!r}")
    series = _check_series(series)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    try:
        if kind == "spectrum_overlay":
            for name, (x, y) in series.items():
                ax.plot(x, y, label=name, linewidth=1.2)
            ax.set_xlabel("index")
            ax.set_ylabel("eigenvalue")
            ax.set_title("spectrum overlay")
        elif kind == "density_overlay":
            for name, (x, y) in series.items():
                ax.plot(x, y, label=name, linewidth=1.2)
            ax.set_xlabel("x")
            ax.set_ylabel("density")
            ax.set_title("density overlay")
        else:  # error_vs_c
            slopes = []
            for name, (x, y) in series.items():
                ax.loglog(x, y, marker="o", label=name)
                if x.size >= 2 and np.all(x > 0) and np.all(y > 0):
                    slopes.append(fit_loglog_slope(x, y))
            ax.set_xlabel("c")
            ax.set_ylabel("error")
            ax.set_title("error vs aspect ratio")
            if slopes:
                ax.annotate(
                    f"fitted slope = {np.mean(slopes):.3f}",
                    xy=(0.05, 0.05),
                    xycoords="axes fraction",
                )
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return path
