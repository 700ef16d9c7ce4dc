"""Report figures rendered to PNG with matplotlib's Agg backend."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# PNG metadata without a version string keeps reruns byte-identical
_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, format="png", dpi=100, metadata=_META)
    plt.close(fig)
    return path


def plot_roc(points, auc: float, path) -> Path:
    fig, ax = plt.subplots(figsize=(4, 4))
    xs, ys = zip(*points) if points else ((0, 1), (0, 1))
    ax.plot(xs, ys, drawstyle="steps-post", label=f"AUC = {auc:.3f}")
    ax.plot([0, 1], [0, 1], linestyle=":", color="grey")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.legend(loc="lower right")
    return _save(fig, path)


def plot_cdf(values, path, xlabel: str, log_x: bool = False) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    v = np.sort(np.asarray(values, dtype=float))
    if len(v):
        ax.step(v, np.arange(1, len(v) + 1) / len(v), where="post")
    if log_x and len(v) and v.min() > 0:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("CDF")
    ax.set_ylim(0, 1.02)
    return _save(fig, path)


def plot_lifetimes(groups: dict[str, list[int]], path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name in sorted(groups):
        v = np.sort(np.asarray(groups[name], dtype=float))
        if len(v):
            ax.step(v, np.arange(1, len(v) + 1) / len(v), where="post", label=name)
    ax.set_xlabel("lifetime (days)")
    ax.set_ylabel("CDF")
    if groups:
        ax.legend(loc="lower right")
    return _save(fig, path)


def plot_positions(hist: dict[str, dict[str, int]], path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    engines = sorted(hist)
    brackets = list(next(iter(hist.values())).keys()) if hist else []
    width = 0.8 / max(1, len(brackets))
    for i, b in enumerate(brackets):
        ax.bar(np.arange(len(engines)) + i * width, [hist[e][b] for e in engines], width, label=b)
    ax.set_xticks(np.arange(len(engines)) + width * (len(brackets) - 1) / 2)
    ax.set_xticklabels(engines)
    ax.set_ylabel("distinct TSS URIs")
    if brackets:
        ax.legend(title="position")
    return _save(fig, path)


def plot_pollution(stats: dict[str, dict], path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    bands = list(stats)
    boxes = [{"label": b, "whislo": s["min"], "q1": s["q1"], "med": s["median"], "q3": s["q3"],
              "whishi": s["max"], "fliers": []} for b, s in stats.items()]
    if boxes:
        ax.bxp(boxes, showfliers=False)
    ax.set_xlabel("average monthly searches")
    ax.set_ylabel("TSS URIs per phrase")
    ax.set_xticks(range(1, len(bands) + 1))
    ax.set_xticklabels(bands, fontsize=7)
    return _save(fig, path)


def plot_phone_age(years: dict[str, float], path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    keys = list(years)
    ax.bar(range(len(keys)), [years[k] for k in keys])
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(keys, fontsize=8)
    ax.set_ylabel("% of numbers")
    return _save(fig, path)
