"""Matplotlib report figures written alongside the delimited outputs: the
log-log box-count fit for a single field, and the per-frame dimension track
of a zoom sequence."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .fracdim import BoxCountResult


def save_boxcount_figure(result: BoxCountResult, path) -> None:
    """Log-log plot of occupied boxes vs box size with the fitted slope."""
    sizes = [e.box_size for e in result.entries if e.occupied > 0]
    counts = [e.occupied for e in result.entries if e.occupied > 0]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(sizes, counts, "o-", color="#1a33d9", label="occupied boxes")
    ax.set_xlabel("box size (px)")
    ax.set_ylabel("occupied boxes")
    ax.set_title(f"dimension {result.dimension:.3f}  (r² {result.fit_r2:.4f})")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_zoom_dimension_figure(dimensions: list[float], median: float, path) -> None:
    """Per-frame dimension estimates across a zoom with the median marked."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(dimensions)), dimensions, "o-", color="#d9261a",
            label="frame dimension")
    ax.axhline(median, color="#1a33d9", linestyle="--",
               label=f"median {median:.3f}")
    ax.set_xlabel("zoom frame")
    ax.set_ylabel("box-count dimension")
    ax.set_ylim(0, 2)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
