"""Render the five sweep figures from harness CSVs.

Only aggregate rows drive the drawn lines and bars; confidence bands come
from the ci95 aggregate rows.  Rendering is read-only over the CSVs and
idempotent over the output paths.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schema import SchemaError, aggregate_series, load_rows

_X_LABELS = {
    "fig2": "outer iteration",
    "fig3": "BST antennas N",
    "fig4": "(M, N)",
    "fig5": "circuit power P_c (W)",
    "fig6": "relay power P_r (W)",
}
_TITLES = {
    "fig2": "Convergence of the alternating optimization",
    "fig3": "Energy efficiency vs BST antennas",
    "fig4": "Energy efficiency vs AP/BST antenna counts",
    "fig5": "Energy efficiency vs circuit power",
    "fig6": "Energy efficiency vs relay power",
}
_SERIES = (("ee_coop", "coop", "tab:blue"),
           ("ee_noncoop", "non-coop", "tab:orange"))


@dataclass
class FigureJob:
    csv_path: str
    figure_id: str
    output_path: str
    style: dict = field(default_factory=dict)


def _finite(series):
    return any(math.isfinite(v) for v in series["mean"])


def render_figure(csv_path, figure_id, output_path, style=None):
    """Render one figure; returns the plotted mean series per label.

    The returned mapping (label -> list of y values, ordered as drawn) is
    what tests read back to verify the rendered data.
    """
    style = style or {}
    rows = load_rows(csv_path, figure_id)
    drawn = {}

    fig, ax = plt.subplots(figsize=style.get("figsize", (7.0, 4.5)))
    plotted_any = False
    if figure_id == "fig4":
        points = None
        bar_width = 0.35
        offsets = (-bar_width / 2, bar_width / 2)
        for (column, label, color), off in zip(_SERIES, offsets):
            points, series = aggregate_series(rows, figure_id, column)
            if not points or not _finite(series):
                continue
            x = np.arange(len(points)) + off
            means = series["mean"]
            err = [[m - lo for m, lo in zip(means, series["ci95_lo"])],
                   [hi - m for m, hi in zip(means, series["ci95_hi"])]]
            ax.bar(x, means, bar_width, yerr=err, capsize=3,
                   label=label, color=color)
            drawn[label] = list(means)
            plotted_any = True
        if points:
            ax.set_xticks(np.arange(len(points)))
            ax.set_xticklabels([f"({int(m)},{int(n)})" for m, n in points])
    else:
        for column, label, color in _SERIES:
            points, series = aggregate_series(rows, figure_id, column)
            if not points or not _finite(series):
                continue
            x = [p[0] for p in points]
            ax.plot(x, series["mean"], marker="o", label=label, color=color)
            ax.fill_between(x, series["ci95_lo"], series["ci95_hi"],
                            alpha=0.2, color=color)
            drawn[label] = list(series["mean"])
            plotted_any = True
        if figure_id == "fig2" and points:
            ax.set_xticks([p[0] for p in points])

    if not plotted_any:
        plt.close(fig)
        warnings.warn(f"{csv_path}: no aggregate rows to plot; skipping")
        return drawn

    ax.set_xlabel(_X_LABELS[figure_id])
    ax.set_ylabel("energy efficiency (Mbits/Joule)")
    ax.set_title(style.get("title", _TITLES[figure_id]))
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(output_path, dpi=style.get("dpi", 130))
    plt.close(fig)
    return drawn


def render_figures(jobs):
    """Run a batch of FigureJobs; returns per-job (job, drawn | error)."""
    results = []
    for job in jobs:
        try:
            drawn = render_figure(job.csv_path, job.figure_id,
                                  job.output_path, job.style)
            results.append((job, drawn))
        except (SchemaError, OSError) as exc:
            results.append((job, exc))
    return results
