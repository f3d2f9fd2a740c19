"""Evaluation metrics and plot-ready summaries.

Thresholded predictions call a sample positive when score >= threshold
(ties go to the positive class, matching the prediction rule). Ratios
with a 0/0 numerator and denominator are defined as 0.

roc_auc integrates the ROC step curve with trapezoids over tie blocks.
The accumulated area is kept in exact integer arithmetic (twice the
area, in units of positive*negative pairs) and divided once at the end,
so the result equals the Mann-Whitney pair statistic (ties 0.5) down to
the last bit.

pr_auc is average precision: sum over descending-score prefixes of
(recall increment * precision at that prefix), with tied scores
processed as one block. No interpolation.

Quantiles use linear interpolation between order statistics; box
summaries carry Tukey whiskers at 1.5 * IQR.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass
class ScoredSample:
    score: float
    label: int
    year: int | None = None
    group: str | None = None


@dataclass
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)


def confusion(samples: list[ScoredSample], threshold: float) -> ConfusionMatrix:
    if not samples:
        raise ValueError("no samples")
    tp = fp = tn = fn = 0
    for s in samples:
        predicted = s.score >= threshold
        if s.label == 1:
            if predicted:
                tp += 1
            else:
                fn += 1
        else:
            if predicted:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp, fp, tn, fn)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def _f1(precision: float, recall: float) -> float:
    s = precision + recall
    return 2.0 * precision * recall / s if s else 0.0


def f1_macro(conf: ConfusionMatrix) -> float:
    """Unweighted mean of the positive-class and negative-class F1."""
    f1_pos = _f1(_ratio(conf.tp, conf.tp + conf.fp), _ratio(conf.tp, conf.tp + conf.fn))
    f1_neg = _f1(_ratio(conf.tn, conf.tn + conf.fn), _ratio(conf.tn, conf.tn + conf.fp))
    return (f1_pos + f1_neg) / 2.0


def _tie_blocks(samples: list[ScoredSample]):
    """Per distinct score, descending: (score, positives, negatives)."""
    scores = np.array([s.score for s in samples], dtype=np.float64)
    labels = np.array([s.label for s in samples], dtype=np.int64)
    uniq, inv = np.unique(scores, return_inverse=True)
    pos = np.bincount(inv[labels == 1], minlength=uniq.size)
    neg = np.bincount(inv[labels == 0], minlength=uniq.size)
    order = range(uniq.size - 1, -1, -1)
    return [(float(uniq[i]), int(pos[i]), int(neg[i])) for i in order]


def roc_auc(samples: list[ScoredSample]) -> float:
    blocks = _tie_blocks(samples)
    p = sum(bp for _, bp, _ in blocks)
    n = sum(bn for _, _, bn in blocks)
    if p == 0 or n == 0:
        raise ValueError("roc_auc undefined: needs both classes")
    tp = 0
    area2 = 0  # twice the area under the step curve, in pair units
    for _, bp, bn in blocks:
        area2 += bn * (2 * tp + bp)
        tp += bp
    return area2 / (2 * p * n)


def roc_curve(samples: list[ScoredSample]) -> list[tuple[float, float]]:
    """(fpr, tpr) points from (0,0) to (1,1), one per distinct score."""
    blocks = _tie_blocks(samples)
    p = sum(bp for _, bp, _ in blocks)
    n = sum(bn for _, _, bn in blocks)
    if p == 0 or n == 0:
        raise ValueError("roc curve undefined: needs both classes")
    tp = fp = 0
    points = [(0.0, 0.0)]
    for _, bp, bn in blocks:
        tp += bp
        fp += bn
        points.append((fp / n, tp / p))
    return points


def pr_auc(samples: list[ScoredSample]) -> float:
    blocks = _tie_blocks(samples)
    p = sum(bp for _, bp, _ in blocks)
    if p == 0:
        raise ValueError("pr_auc undefined: no positive samples")
    tp = fp = 0
    ap = 0.0
    for _, bp, bn in blocks:
        tp += bp
        fp += bn
        if bp:
            ap += (tp / (tp + fp)) * bp
    return ap / p


def pr_curve(samples: list[ScoredSample]) -> list[tuple[float, float]]:
    """(recall, precision) points, one per distinct score, preceded by (0,1)."""
    blocks = _tie_blocks(samples)
    p = sum(bp for _, bp, _ in blocks)
    if p == 0:
        raise ValueError("pr curve undefined: no positive samples")
    tp = fp = 0
    points = [(0.0, 1.0)]
    for _, bp, bn in blocks:
        tp += bp
        fp += bn
        points.append((tp / p, tp / (tp + fp)))
    return points


@dataclass
class YearBucket:
    year: int
    f1: float
    count: int
    flagged: bool  # below the minimum count, treat with caution
    conf: ConfusionMatrix


def f1_by_year(samples: list[ScoredSample], threshold: float,
               min_count: int = 5) -> list[YearBucket]:
    by_year: dict[int, list[ScoredSample]] = {}
    for s in samples:
        if s.year is None:
            raise ValueError("f1_by_year needs a year on every sample")
        by_year.setdefault(s.year, []).append(s)
    out = []
    for year in sorted(by_year):
        conf = confusion(by_year[year], threshold)
        out.append(YearBucket(year=year, f1=f1_macro(conf), count=conf.total,
                              flagged=conf.total < min_count, conf=conf))
    return out


def best_threshold_f1(samples: list[ScoredSample]) -> tuple[float, float]:
    """(threshold, macro-F1) maximizing macro-F1 over distinct scores."""
    blocks = _tie_blocks(samples)
    p = sum(bp for _, bp, _ in blocks)
    n = sum(bn for _, _, bn in blocks)
    best_t, best_f1 = float("inf"), f1_macro(ConfusionMatrix(0, 0, n, p))
    tp = fp = 0
    for score, bp, bn in blocks:
        tp += bp
        fp += bn
        f1 = f1_macro(ConfusionMatrix(tp, fp, n - fp, p - tp))
        if f1 > best_f1:
            best_t, best_f1 = score, f1
    return best_t, best_f1


# ---------------------------------------------------------------------------
# Distribution summaries (box-plot data)
# ---------------------------------------------------------------------------

@dataclass
class BoxStats:
    feature: str
    cls: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float
    whisker_lo: float
    whisker_hi: float
    count: int


def _box_stats(feature: str, cls: int, values: np.ndarray) -> BoxStats:
    q1, med, q3 = (float(q) for q in
                   np.quantile(values, [0.25, 0.5, 0.75], method="linear"))
    iqr = q3 - q1
    inside = values[(values >= q1 - 1.5 * iqr) & (values <= q3 + 1.5 * iqr)]
    return BoxStats(feature=feature, cls=cls,
                    min=float(values.min()), q1=q1, median=med, q3=q3,
                    max=float(values.max()), mean=float(values.mean()),
                    whisker_lo=float(inside.min()), whisker_hi=float(inside.max()),
                    count=int(values.size))


def feature_distributions(X, labels, feature_names: list[str]) -> list[BoxStats]:
    """Per (feature, class) box summary; classes in {0,1}, both required
    to be present only if they appear in labels."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != labels.size:
        raise ValueError("feature matrix and labels disagree")
    if X.shape[1] != len(feature_names):
        raise ValueError("feature names do not match matrix width")
    out = []
    for j, name in enumerate(feature_names):
        for cls in (0, 1):
            values = X[labels == cls, j]
            if values.size:
                out.append(_box_stats(name, cls, values))
    return out


# ---------------------------------------------------------------------------
# Emitted files
# ---------------------------------------------------------------------------

def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_pr_curve_csv(path: str | Path, points) -> None:
    _write_csv(path, ("recall", "precision"),
               [(repr(r), repr(p)) for r, p in points])


def write_roc_curve_csv(path: str | Path, points) -> None:
    _write_csv(path, ("fpr", "tpr"), [(repr(x), repr(y)) for x, y in points])


def write_f1_by_year_csv(path: str | Path, buckets: list[YearBucket]) -> None:
    _write_csv(path, ("year", "f1", "count"),
               [(b.year, repr(b.f1), b.count) for b in buckets])


def write_feature_dist_csv(path: str | Path, stats: list[BoxStats]) -> None:
    _write_csv(path, ("feature", "class", "min", "q1", "median", "q3", "max", "mean"),
               [(s.feature, s.cls, repr(s.min), repr(s.q1), repr(s.median),
                 repr(s.q3), repr(s.max), repr(s.mean)) for s in stats])


@dataclass
class ModelMetrics:
    roc_auc: float
    pr_auc: float
    f1_macro: float
    f1_best: float | None = None
    f1_best_threshold: float | None = None


def compute_model_metrics(samples: list[ScoredSample],
                          threshold: float = 0.5) -> ModelMetrics:
    best_t, best = best_threshold_f1(samples)
    return ModelMetrics(roc_auc=roc_auc(samples), pr_auc=pr_auc(samples),
                        f1_macro=f1_macro(confusion(samples, threshold)),
                        f1_best=best, f1_best_threshold=best_t)


def write_metrics_json(path: str | Path, per_model: dict[str, ModelMetrics]) -> None:
    """per_model keys name the model rows: topological, textual, mixed."""
    payload = {}
    for name, m in per_model.items():
        entry = {"roc_auc": m.roc_auc, "pr_auc": m.pr_auc, "f1_macro": m.f1_macro}
        if m.f1_best is not None:
            entry["f1_best"] = m.f1_best
            entry["f1_best_threshold"] = m.f1_best_threshold
        payload[name] = entry
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
