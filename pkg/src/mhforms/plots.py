"""Figure rendering for the CLI report paths.

Figures are written to files next to the delimited output; nothing here is
interactive.  The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_bounds_grid_figure(rows: list[dict], path: str) -> str:
    """Lower/upper bound sweep per cone, log scale, one marker per shape."""
    cones = sorted({row["cone"] for row in rows})
    shapes = []
    for row in rows:
        if row["shape"] not in shapes:
            shapes.append(row["shape"])
    fig, ax = plt.subplots(figsize=(max(6.0, 1.2 * len(shapes)), 4.0))
    markers = {"pos": "o", "sq": "s", "lin": "^"}
    for cone in cones:
        xs, lowers, uppers = [], [], []
        for i, shape in enumerate(shapes):
            for row in rows:
                if row["shape"] == shape and row["cone"] == cone:
                    xs.append(i)
                    lowers.append(row["lower"])
                    uppers.append(row["upper"])
        ax.plot(xs, lowers, marker=markers.get(cone, "o"), linestyle="--",
                label=f"{cone} lower")
        ax.plot(xs, uppers, marker=markers.get(cone, "o"), linestyle="-",
                label=f"{cone} upper")
    ax.set_yscale("log")
    ax.set_xticks(range(len(shapes)))
    ax.set_xticklabels(shapes, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("normalized volume bound")
    ax.legend(fontsize=8, ncol=2)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_samples_figure(values, path: str, title: str, xlabel: str,
                        log_x: bool = False) -> str:
    """Histogram of per-sample values from a Monte Carlo dump."""
    values = np.asarray(values, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if log_x:
        positive = values[values > 0]
        if len(positive):
            bins = np.logspace(
                np.log10(positive.min()), np.log10(positive.max()), 50
            )
            ax.hist(positive, bins=bins, color="#4878a8", alpha=0.85)
            ax.set_xscale("log")
    else:
        ax.hist(values, bins=50, color="#4878a8", alpha=0.85)
    ax.axvline(values.mean(), color="#a84848", linestyle="--",
               label=f"mean = {values.mean():.6g}")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("count")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
