"""PNG figures for CLI reports; rendered headless and without timestamps so reruns are byte-identical."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

PNG_METADATA = {"Software": None}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, format="png", dpi=100, metadata=PNG_METADATA)
    plt.close(fig)
    return path


def plot_losses(curves: Sequence[Sequence[dict]], labels: Sequence[str], path: str | Path, smooth: int = 25) -> Path:
    """Total training loss per step, one line per run, with a running mean."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for curve, label in zip(curves, labels):
        y = np.array([row["total"] for row in curve])
        if len(y) == 0:
            continue
        k = max(1, min(smooth, len(y)))
        run = np.convolve(y, np.ones(k) / k, mode="valid")
        ax.plot(np.arange(len(y)), y, alpha=0.25, lw=0.6)
        ax.plot(np.arange(k - 1, len(y)), run, lw=1.2, label=label)
    ax.set_xlabel("step")
    ax.set_ylabel("total loss")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_ablation(rows: Sequence[dict], path: str | Path, metric: str = "CC") -> Path:
    """Bar per modality mask; labels spell out which social cues were present."""
    labels = ["+".join(m for m in ("GE", "GF", "FER") if r[m]) or "none" for r in rows]
    vals = [r[metric] for r in rows]
    errs = [r.get(f"{metric}_std", 0.0) for r in rows]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.bar(range(len(rows)), vals, yerr=errs, color="tab:blue", capsize=3)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel(metric)
    ax.set_xlabel("social cues present")
    return _save(fig, path)


def plot_contribution(names: Sequence[str], shares: Sequence[float], path: str | Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(range(len(names)), shares, color="tab:orange")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names)
    ax.set_ylim(0, 1)
    ax.set_ylabel("gate share")
    if title:
        ax.set_title(title, fontsize=9)
    return _save(fig, path)


def plot_metrics(rows: Sequence[dict], path: str | Path, metric: str = "CC") -> Path:
    """Per-seed metric values for each model label."""
    models = sorted({r["model"] for r in rows})
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for i, m in enumerate(models):
        vals = [r[metric] for r in rows if r["model"] == m]
        ax.scatter([i] * len(vals), vals, s=14)
        ax.hlines(np.mean(vals), i - 0.25, i + 0.25, color="k", lw=1)
    ax.set_xticks(range(len(models)))
    ax.set_xticklabels(models, fontsize=8)
    ax.set_ylabel(metric)
    return _save(fig, path)
