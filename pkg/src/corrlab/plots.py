"""Figure rendering for report outputs.

Every CLI path that writes a delimited report also renders a matplotlib
figure next to it (same stem, .png); headless Agg backend only.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .corr import CorrelationSeries  # noqa: E402


def plot_series(series: CorrelationSeries, path: str | Path,
                title: str = "") -> Path:
    """Correlation values against the prediction, plus normalized errors."""
    path = Path(path)
    has_mt = series.main_terms is not None
    fig, axes = plt.subplots(2 if has_mt else 1, 1, figsize=(8, 6), sharex=True,
                             squeeze=False)
    ax = axes[0][0]
    ax.plot(series.shifts, series.values, ".", ms=2, label="correlation")
    if has_mt:
        ax.plot(series.shifts, series.main_terms, "-", lw=0.8, label="main term")
        ax2 = axes[1][0]
        ax2.plot(series.shifts, series.errors() / series.norm, ".", ms=2)
        ax2.axhline(0.0, color="k", lw=0.5)
        ax2.set_ylabel("normalized error")
        ax2.set_xlabel("h")
    else:
        ax.set_xlabel("h")
    ax.set_ylabel("C(h)")
    ax.legend(loc="best", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_ratios(names: Sequence[str], ratios: Sequence[float], path: str | Path,
                title: str = "") -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(range(len(names)), ratios)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("lhs / rhs shape")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
