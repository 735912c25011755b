"""Confusion-matrix accumulation and per-class segmentation scores.

Overall accuracy is the conventional correct/counted ratio over pixels
whose ground truth is an included class. Summing TP/FP/TN/FN over all
classes in the denominator would count every pixel K times.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional

import numpy as np

from .data.classmap import ISPRS, ClassMap
from .errors import DataError


@dataclass
class ConfusionMatrix:
    """Rows are ground truth, columns are predictions."""

    num_classes: int
    ignore_index: int = 255
    counts: np.ndarray = None
    ignored_pixels: int = 0
    class_map: Optional[ClassMap] = None

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros((self.num_classes, self.num_classes), dtype=np.int64)

    @classmethod
    def for_class_map(cls, class_map: ClassMap = ISPRS):
        return cls(class_map.num_classes, class_map.ignore_index, class_map=class_map)

    @property
    def total(self):
        return int(self.counts.sum())

    def tp(self):
        return np.diag(self.counts).copy()

    def fp(self):
        return self.counts.sum(axis=0) - self.tp()

    def fn(self):
        return self.counts.sum(axis=1) - self.tp()

    def tn(self):
        return self.total - self.tp() - self.fp() - self.fn()

    def merge(self, other):
        return ConfusionMatrix(
            self.num_classes,
            self.ignore_index,
            self.counts + other.counts,
            self.ignored_pixels + other.ignored_pixels,
            self.class_map,
        )

    __add__ = merge


def accumulate(conf: ConfusionMatrix, pred, gt) -> ConfusionMatrix:
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise DataError(f"prediction shape {pred.shape} != ground truth shape {gt.shape}")
    k = conf.num_classes
    ignored = gt == conf.ignore_index
    g = gt[~ignored].astype(np.int64)
    p = pred[~ignored].astype(np.int64)
    if g.size and (g.min() < 0 or g.max() >= k):
        raise DataError(f"ground-truth class {int(g[(g < 0) | (g >= k)][0])} out of range")
    if p.size and (p.min() < 0 or p.max() >= k):
        raise DataError(f"predicted class {int(p[(p < 0) | (p >= k)][0])} out of range")
    conf.counts += np.bincount(g * k + p, minlength=k * k).reshape(k, k)
    conf.ignored_pixels += int(ignored.sum())
    return conf


def _ratio(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


@dataclass
class MetricsReport:
    class_names: List[str]
    precision: np.ndarray
    recall: np.ndarray
    specificity: np.ndarray
    f1: np.ndarray
    oa: float
    mean_f1: float
    included_classes: FrozenSet[int]
    absent_classes: FrozenSet[int] = frozenset()
    counts: Dict[str, np.ndarray] = field(default_factory=dict)

    def per_class(self, name):
        i = self.class_names.index(name)
        return {
            "precision": float(self.precision[i]),
            "recall": float(self.recall[i]),
            "specificity": float(self.specificity[i]),
            "f1": float(self.f1[i]),
        }


def metrics(conf: ConfusionMatrix, excluded=None, oa_include_excluded=False) -> MetricsReport:
    """Precision, recall, specificity and F1 per class; OA and mean F1.

    ``excluded`` defaults to the class map's OA exclusions (Clutter for
    ISPRS). Excluded classes are left out of OA and mean F1. With
    ``oa_include_excluded`` their pixels still count in the OA denominator.
    Classes with a zero denominator score 0 and are listed in
    ``absent_classes``.
    """
    if conf.total == 0:
        raise DataError("confusion matrix is empty; nothing to score")
    k = conf.num_classes
    if excluded is None:
        excluded = conf.class_map.excluded_from_oa if conf.class_map is not None else frozenset()
    excluded = frozenset(int(e) for e in excluded)
    included = frozenset(range(k)) - excluded
    tp, fp, fn, tn = conf.tp(), conf.fp(), conf.fn(), conf.tn()
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    specificity = _ratio(tn, tn + fp)
    f1 = _ratio(2 * precision * recall, precision + recall)
    absent = frozenset(int(i) for i in np.flatnonzero((tp + fp == 0) | (tp + fn == 0)))

    inc = np.array(sorted(included), dtype=np.int64)
    correct = tp[inc].sum()
    if oa_include_excluded:
        denom = conf.total
    else:
        denom = conf.counts[inc].sum()
    oa = float(correct / denom) if denom else 0.0
    mean_f1 = float(f1[inc].mean()) if inc.size else 0.0
    if conf.class_map is not None:
        names = conf.class_map.names
    else:
        names = [f"class{i}" for i in range(k)]
    return MetricsReport(
        names, precision, recall, specificity, f1, oa, mean_f1, included, absent,
        {"tp": tp, "fp": fp, "tn": tn, "fn": fn},
    )


ROWS = (("Specificity", "specificity"), ("Precision", "precision"), ("Recall", "recall"), ("F1 score", "f1"))


def report_table(report: MetricsReport) -> str:
    """Fixed-column percentage table: one row per score, one column per
    included class plus their mean."""
    cols = [i for i in range(len(report.class_names)) if i in report.included_classes]
    headers = [report.class_names[i] for i in cols] + ["Mean"]
    width = max(8, *(len(h) for h in headers))
    label_w = max(len(r[0]) for r in ROWS)
    lines = [" " * label_w + "".join(f"  {h:>{width}}" for h in headers)]
    for label, attr in ROWS:
        vals = getattr(report, attr)
        cells = [100 * vals[i] for i in cols]
        cells.append(100 * float(np.mean([vals[i] for i in cols])) if cols else 0.0)
        lines.append(f"{label:<{label_w}}" + "".join(f"  {v:>{width}.2f}" for v in cells))
    lines.append(f"OA: {100 * report.oa:.2f}  mF1: {100 * report.mean_f1:.2f}")
    return "\n".join(lines) + "\n"


def report_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class", "tp", "fp", "tn", "fn", "precision", "recall", "specificity", "f1"])
    c = report.counts
    for i, name in enumerate(report.class_names):
        w.writerow([
            name, int(c["tp"][i]), int(c["fp"][i]), int(c["tn"][i]), int(c["fn"][i]),
            f"{report.precision[i]:.6f}", f"{report.recall[i]:.6f}",
            f"{report.specificity[i]:.6f}", f"{report.f1[i]:.6f}",
        ])
    w.writerow(["oa", "", "", "", "", "", "", "", f"{report.oa:.6f}"])
    w.writerow(["mean_f1", "", "", "", "", "", "", "", f"{report.mean_f1:.6f}"])
    return buf.getvalue()


def parse_report_csv(text):
    """Read back :func:`report_csv` output as ``{class: {metric: value}}``."""
    body = [l for l in text.splitlines() if not l.startswith("#")]
    rows = list(csv.DictReader(body))
    out = {}
    for r in rows:
        if r["class"] in ("oa", "mean_f1"):
            out[r["class"]] = float(r["f1"])
        else:
            out[r["class"]] = {k: float(v) for k, v in r.items() if k != "class"}
    return out
