"""Figure rendering for the study reports.

Each study command renders one figure next to its delimited output. Figures
are produced on the Agg backend from the already-written StudyRecord rows, so
a plot never contains anything the data file does not.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bounds import expected_distance_bound
from .reporting import StudyRecord

__all__ = [
    "save_study_figure",
    "variance_figure",
    "markov_figure",
    "frontier_figure",
    "tradeoff_figure",
]

_SCENARIO_STYLE = {
    "ideal": ("s-", "black"),
    "lossy": ("o-", "tab:red"),
    "distinguishable": ("o-", "tab:blue"),
}


def variance_figure(record: StudyRecord):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    scenarios = sorted(set(record.column("scenario")), key=record.column("scenario").index)
    for name in scenarios:
        rows = [r for r in record.rows if r[0] == name]
        js = [r[1] for r in rows]
        nv = [r[3] for r in rows]
        se = [r[4] for r in rows]
        style, color = _SCENARIO_STYLE.get(name, ("^-", None))
        ax.errorbar(js, nv, yerr=[5 * s for s in se], fmt=style, color=color,
                    ms=4, capsize=2, label=name)
        bound = [r[5] for r in rows]
        ax.plot(js, bound, "-", color=color, alpha=0.35, lw=1)
    ax.set_yscale("log")
    ax.set_xlabel("interference order j")
    ax.set_ylabel("Var(c_j x^j) / Var(c_0)")
    ax.set_title("Suppression of high-order interference (lines: (eta x^2)^j)")
    ax.legend()
    fig.tight_layout()
    return fig


def markov_figure(record: StudyRecord):
    ds = np.sort(np.asarray(record.column("d"), dtype=float))
    alpha = float(record.metadata["alpha"])
    k = int(record.metadata["k"])
    bound = expected_distance_bound(alpha, k)
    cdf = np.arange(1, len(ds) + 1) / len(ds)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.plot(ds, cdf, "k-", lw=1.5, label="empirical CDF of d")
    grid = np.linspace(ds.min(), max(ds.max(), 2.2 * bound), 400)
    markov = np.clip(1.0 - bound / np.maximum(grid, 1e-12), 0.0, 1.0)
    ax.plot(grid, markov, "r--", lw=1.2, label="Markov lower bound")
    ax.axvline(bound, color="tab:blue", lw=1, ls=":", label=f"mean bound {bound:.4f}")
    ax.set_xlabel("L1 distance d")
    ax.set_ylabel("cumulative probability")
    ax.set_title("Distance of the truncated distribution over random networks")
    ax.legend(loc="lower right")
    fig.tight_layout()
    return fig


def frontier_figure(record: StudyRecord):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    eps_values = sorted(set(record.column("epsilon")), reverse=True)
    for eps in eps_values:
        rows = [r for r in record.rows if r[0] == eps]
        ax.plot([r[1] for r in rows], [r[2] for r in rows], lw=1.5, label=f"accuracy {eps}")
    ax.axhline(50, color="gray", ls="--", lw=1)
    ax.axvline(0.88, color="gray", ls="--", lw=1)
    ax.set_yscale("log")
    ax.set_xlabel("transmission eta")
    ax.set_ylabel("maximum simulable interference order k")
    ax.set_title("Truncation-order frontier vs transmission")
    ax.legend()
    fig.tight_layout()
    return fig


def tradeoff_figure(record: StudyRecord):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    x2_grid = np.linspace(0.7, 1.0, 200)
    for row in record.rows:
        alpha, k = row[4], row[5]
        ax.plot(x2_grid, np.clip(alpha / x2_grid, 0, 1), lw=0.8, alpha=0.5,
                label=f"k = {k}")
    for row in record.rows:
        marker = "s" if row[1] == "QD" else "o"
        ax.plot(row[3], row[2], marker, color="black", ms=5)
        ax.annotate(row[0], (row[3], row[2]), fontsize=7,
                    textcoords="offset points", xytext=(4, 2))
    ax.set_xlabel("overlap x^2")
    ax.set_ylabel("transmission eta")
    ax.set_title("Loss-distinguishability tradeoff at fixed figure of merit")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    return fig


_FIGURES = {
    "variance-study": variance_figure,
    "markov-study": markov_figure,
    "k-eta-frontier": frontier_figure,
    "tradeoff-table": tradeoff_figure,
}


def save_study_figure(record: StudyRecord, path: str | Path) -> Path | None:
    """Render the figure matching `record.name`, if it has one."""
    maker = _FIGURES.get(record.name)
    if maker is None:
        return None
    fig = maker(record)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
