"""Render evaluation figures to image files.

Every renderer takes data already computed by the metrics layer and
writes one PNG next to the corresponding CSV. The CSVs stay the
canonical artifact; these files exist so a report directory is
readable without loading anything into a plotting tool. The Agg
backend keeps rendering headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .metrics import BoxStats, YearBucket  # noqa: E402
from .textsim import PaperScores  # noqa: E402


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def render_pr_curve(points, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot([r for r, _ in points], [p for _, p in points], drawstyle="steps-post")
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.set_title("precision-recall")
    ax.grid(alpha=0.3)
    return _save(fig, path)


def render_roc_curve(points, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot([x for x, _ in points], [y for _, y in points])
    ax.plot([0, 1], [0, 1], linestyle="--", color="gray", linewidth=0.8)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.set_title("ROC")
    ax.grid(alpha=0.3)
    return _save(fig, path)


def render_f1_by_year(buckets: list[YearBucket], path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    years = [b.year for b in buckets]
    ax.bar(years, [b.f1 for b in buckets],
           color=["lightgray" if b.flagged else "steelblue" for b in buckets])
    for b in buckets:
        ax.annotate(str(b.count), (b.year, b.f1), ha="center",
                    va="bottom", fontsize=7)
    ax.set_xlabel("year")
    ax.set_ylabel("macro F1")
    ax.set_ylim(0, 1.05)
    ax.set_title("macro F1 by year (low-count buckets grayed)")
    return _save(fig, path)


def _bxp_dict(s: BoxStats) -> dict:
    return {
        "label": f"{s.feature}\nclass {s.cls}",
        "whislo": s.whisker_lo, "q1": s.q1, "med": s.median,
        "q3": s.q3, "whishi": s.whisker_hi, "mean": s.mean,
        "fliers": [],
    }


def render_feature_distributions(stats: list[BoxStats], path: str | Path) -> Path:
    """One box per (feature, class), whiskers precomputed at 1.5 IQR."""
    features: list[str] = []
    for s in stats:
        if s.feature not in features:
            features.append(s.feature)
    fig, axes = plt.subplots(1, len(features),
                             figsize=(2.2 * len(features), 4), squeeze=False)
    for ax, feature in zip(axes[0], features):
        group = [s for s in stats if s.feature == feature]
        ax.bxp([_bxp_dict(s) for s in group], showmeans=True, showfliers=False)
        ax.set_xticklabels([f"class {s.cls}" for s in group], fontsize=8)
        ax.set_title(feature, fontsize=9)
        ax.tick_params(axis="y", labelsize=8)
    fig.tight_layout()
    return _save(fig, path)


def render_phi_theta(scores: list[PaperScores], path: str | Path) -> Path:
    """Histograms of the two textual scores, winners vs the rest."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, attr in zip(axes, ("phi", "theta")):
        for label, name, color in ((0, "non-winners", "steelblue"),
                                   (1, "winners", "darkorange")):
            values = [getattr(s, attr) for s in scores
                      if s.label == label and getattr(s, attr) is not None]
            if values:
                ax.hist(values, bins=30, alpha=0.55, label=name,
                        color=color, density=True)
        ax.set_xlabel(attr)
        ax.set_ylabel("density")
        ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
