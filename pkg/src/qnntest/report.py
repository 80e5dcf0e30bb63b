"""Matplotlib renderings of campaign and experiment outputs.

Every function writes a PNG next to the delimited output it illustrates and
returns the path.  The CSV/JSONL files remain the canonical interface; these
figures are for eyeballing runs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .sampling import wilson_epsilon


def training_curves(log_rows: Sequence[dict], path: str | Path) -> Path:
    path = Path(path)
    epochs = [r["epoch"] for r in log_rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(epochs, [r["train_loss"] for r in log_rows], "o-", color="tab:blue")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("train loss")
    ax2.plot(epochs, [r["train_acc"] for r in log_rows], "o-", label="train")
    test = [r["test_acc"] for r in log_rows]
    if not all(np.isnan(test)):
        ax2.plot(epochs, test, "s-", label="test")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("accuracy")
    ax2.set_ylim(0, 1.02)
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def iteration_histogram(records, path: str | Path) -> Path:
    path = Path(path)
    iters = [r.iterations_used for r in records if r.accepted]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if iters:
        bins = np.arange(0.5, max(iters) + 1.5)
        ax.hist(iters, bins=bins, color="tab:blue", edgecolor="white")
    ax.set_xlabel("iterations to accepted sample")
    ax.set_ylabel("count")
    ax.set_title(f"{len(iters)} accepted / {len(records)} seeds")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def similarity_distributions(records, path: str | Path) -> Path:
    path = Path(path)
    fids = [r.fidelity for r in records]
    tds = [r.trace_distance for r in records]
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.5))
    for ax, vals, name in ((axes[0], fids, "fidelity"), (axes[1], tds, "trace distance")):
        ax.boxplot([vals], tick_labels=[name])
        ax.axhline(float(np.mean(vals)), color="tab:green", ls="--",
                   label=f"mean {np.mean(vals):.3f}")
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def sampling_curves(rows: Sequence[dict], ideal: dict | None, path: str | Path) -> Path:
    path = Path(path)
    n = [r["n_shots"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    err = np.array([r["error_rate_mean"] for r in rows])
    std = np.array([r["error_rate_std"] for r in rows])
    ax1.plot(n, err, "o-", color="tab:red")
    ax1.fill_between(n, err - std, err + std, color="tab:red", alpha=0.2)
    ax1.set_xscale("log")
    ax1.set_xlabel("shots")
    ax1.set_ylabel("error rate vs ideal prediction")
    for key, marker in (("accuracy", "o"), ("precision", "s"), ("recall", "^"), ("f1", "d")):
        ax2.plot(n, [r[key] for r in rows], marker + "-", label=key)
        if ideal is not None:
            ax2.axhline(ideal[key], ls=":", alpha=0.4)
    ax2.set_xscale("log")
    ax2.set_xlabel("shots")
    ax2.set_ylabel("quality indicator")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def wilson_cost_curves(path: str | Path, z: float = 2.58,
                       shots: Sequence[int] = (100, 1_000, 10_000, 100_000)) -> Path:
    path = Path(path)
    p_grid = np.linspace(0.0, 1.0, 201)
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    for n in shots:
        ax.plot(p_grid, [wilson_epsilon(p, n, z) for p in p_grid], label=f"N = {n:g}")
    ax.set_xlabel("estimated probability")
    ax.set_ylabel("Wilson interval half-width")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def retrain_comparison(before: float, after: float, path: str | Path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(4, 3.5))
    bars = ax.bar(["before", "after"], [before, after], color=["tab:gray", "tab:blue"])
    for bar, v in zip(bars, [before, after]):
        ax.text(bar.get_x() + bar.get_width() / 2, v + 0.01, f"{v:.3f}", ha="center")
    ax.set_ylabel("clean test accuracy")
    ax.set_ylim(0, 1.1)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
