"""Report figures rendered to files next to the delimited output.

Plots use the Agg backend so report commands work headless. Every function
takes already-computed data, writes one PNG, closes the figure, and returns
the path it wrote.
"""

from __future__ import annotations

import os
from collections.abc import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .analysis import Metrics

LABEL_ORDER = ("U", "E", "M", "H")
LABEL_TITLES = {"U": "Unsolvable", "E": "Easy", "M": "Medium", "H": "Hard"}


def save_difficulty_distribution(
    label_counts: dict[str, int], path: str | os.PathLike
) -> str:
    """Bar chart of instance counts per difficulty label."""
    counts = [label_counts.get(label, 0) for label in LABEL_ORDER]
    fig, ax = plt.subplots(figsize=(6, 4))
    bars = ax.bar(
        [LABEL_TITLES[label] for label in LABEL_ORDER],
        counts,
        color=["#999999", "#4daf4a", "#ff7f00", "#e41a1c"],
    )
    ax.bar_label(bars, fmt="%d")
    ax.set_ylabel("instances")
    ax.set_title("Difficulty distribution")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return os.fspath(path)


def save_per_bag_solvable_histogram(
    per_bag_counts: Sequence[int], path: str | os.PathLike, n_targets: int = 900
) -> str:
    """Histogram of solvable-target counts per bag."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(per_bag_counts, bins=45, range=(0, n_targets), color="#377eb8")
    ax.set_xlabel("solvable targets per bag")
    ax.set_ylabel("bags")
    ax.set_title("Per-bag solvability")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return os.fspath(path)


def save_confusion_matrix(metrics: Metrics, path: str | os.PathLike) -> str:
    """Heatmap of a Metrics confusion matrix, counts annotated per cell."""
    matrix = metrics.confusion
    k = len(metrics.classes)
    fig, ax = plt.subplots(figsize=(5, 4.5))
    image = ax.imshow(matrix, cmap="Blues")
    ax.set_xticks(range(k), metrics.classes)
    ax.set_yticks(range(k), metrics.classes)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(f"Confusion matrix (accuracy {metrics.accuracy:.4f})")
    threshold = matrix.max() / 2 if matrix.max() else 0
    for i in range(k):
        for j in range(k):
            ax.text(
                j,
                i,
                str(int(matrix[i, j])),
                ha="center",
                va="center",
                color="white" if matrix[i, j] > threshold else "black",
            )
    fig.colorbar(image, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return os.fspath(path)
