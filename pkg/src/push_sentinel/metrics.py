"""Evaluation metrics: confusion counts, accuracy, F1, ROC/AUC, timings.

Conventions: "pushing" is the positive class. Ratios with a zero
denominator evaluate to 0.0 and the report carries an explicit warning
instead of failing, so batch evaluation stays total.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from push_sentinel.errors import EmptyCounts, SingleClassInput

__all__ = [
    "ConfusionCounts",
    "EvalReport",
    "TimingReport",
    "TimingStats",
    "accuracy",
    "precision",
    "recall",
    "f1_score",
    "macro_f1",
    "roc_auc",
    "counts_from_verdicts",
    "evaluate",
    "format_report",
    "time_stage",
]


@dataclass(frozen=True)
class ConfusionCounts:
    """TP/TN count correctly classified pushing and non-pushing patches."""

    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def swapped(self) -> "ConfusionCounts":
        """Counts from the non-pushing class's point of view."""
        return ConfusionCounts(tp=self.tn, tn=self.tp, fp=self.fn, fn=self.fp)


def accuracy(c: ConfusionCounts) -> float:
    """(TP+TN) / (TP+FP+TN+FN)."""
    if c.total == 0:
        raise EmptyCounts("no samples counted")
    return (c.tp + c.tn) / c.total


def _ratio(num: int, denom: int, label: str, warnings_out: list[str] | None) -> float:
    if denom == 0:
        if warnings_out is not None:
            warnings_out.append(f"{label} undefined (zero denominator); reported as 0")
        return 0.0
    return num / denom


def precision(c: ConfusionCounts, warnings_out: list[str] | None = None) -> float:
    return _ratio(c.tp, c.tp + c.fp, "precision", warnings_out)


def recall(c: ConfusionCounts, warnings_out: list[str] | None = None) -> float:
    return _ratio(c.tp, c.tp + c.fn, "recall", warnings_out)


def f1_score(c: ConfusionCounts, warnings_out: list[str] | None = None) -> float:
    """Harmonic mean of precision and recall."""
    p = precision(c, warnings_out)
    r = recall(c, warnings_out)
    if p + r == 0:
        if warnings_out is not None:
            warnings_out.append("f1 undefined (precision + recall = 0); reported as 0")
        return 0.0
    return 2 * p * r / (p + r)


def macro_f1(c: ConfusionCounts, warnings_out: list[str] | None = None) -> float:
    """Mean of the pushing-class and non-pushing-class F1 scores."""
    return (f1_score(c, warnings_out) + f1_score(c.swapped(), warnings_out)) / 2


def roc_auc(scores: list[tuple[float, bool]]) -> tuple[list[tuple[float, float]], float]:
    """ROC sweep and trapezoidal AUC over (delta, is_pushing) pairs.

    Thresholds run over the distinct scores in descending order; a sample is
    predicted pushing when its delta >= threshold. Equal scores share one
    threshold, which gives ties exactly half credit: the returned AUC equals
    P(delta_pos > delta_neg) + 0.5 * P(delta_pos == delta_neg).
    """
    pos = sorted((d for d, y in scores if y), reverse=True)
    neg = sorted((d for d, y in scores if not y), reverse=True)
    if not pos or not neg:
        raise SingleClassInput("ROC needs at least one pushing and one non-pushing score")

    points = [(0.0, 0.0)]
    np_, nn = len(pos), len(neg)
    pi = ni = 0
    for thr in sorted({d for d, _ in scores}, reverse=True):
        while pi < np_ and pos[pi] >= thr:
            pi += 1
        while ni < nn and neg[ni] >= thr:
            ni += 1
        points.append((ni / nn, pi / np_))

    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2
    return points, auc


def counts_from_verdicts(pairs: list[tuple[bool, bool]]) -> ConfusionCounts:
    """Confusion counts from (predicted_pushing, actual_pushing) pairs."""
    tp = sum(1 for p, a in pairs if p and a)
    tn = sum(1 for p, a in pairs if not p and not a)
    fp = sum(1 for p, a in pairs if p and not a)
    fn = sum(1 for p, a in pairs if not p and a)
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


@dataclass(frozen=True)
class EvalReport:
    """Full metric suite for one evaluation run."""

    counts: ConfusionCounts
    accuracy: float
    precision_p: float
    recall_p: float
    f1_p: float
    precision_np: float
    recall_np: float
    f1_np: float
    macro_f1: float
    roc_points: list[tuple[float, float]] | None = None
    auc: float | None = None
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        data = {
            "counts": {"tp": self.counts.tp, "tn": self.counts.tn,
                       "fp": self.counts.fp, "fn": self.counts.fn},
            "accuracy": self.accuracy,
            "pushing": {"precision": self.precision_p, "recall": self.recall_p,
                        "f1": self.f1_p},
            "non_pushing": {"precision": self.precision_np, "recall": self.recall_np,
                            "f1": self.f1_np},
            "macro_f1": self.macro_f1,
            "auc": self.auc,
            "roc_points": self.roc_points,
            "warnings": self.warnings,
        }
        return json.dumps(data, indent=2, sort_keys=True)


def evaluate(counts: ConfusionCounts,
             scores: list[tuple[float, bool]] | None = None) -> EvalReport:
    """Compute the full report from counts (and ROC/AUC when scores given)."""
    warns: list[str] = []
    swapped = counts.swapped()
    roc_points = auc = None
    if scores is not None:
        roc_points, auc = roc_auc(scores)
    return EvalReport(
        counts=counts,
        accuracy=accuracy(counts),
        precision_p=precision(counts, warns),
        recall_p=recall(counts, warns),
        f1_p=f1_score(counts, None),
        precision_np=precision(swapped, warns),
        recall_np=recall(swapped, warns),
        f1_np=f1_score(swapped, None),
        macro_f1=macro_f1(counts, None),
        roc_points=roc_points,
        auc=auc,
        warnings=warns,
    )


def format_report(report: EvalReport) -> str:
    """Plain-text table with percentages rounded to whole numbers."""
    pct = lambda x: f"{round(x * 100):d}%"  # noqa: E731
    c = report.counts
    lines = [
        "confusion matrix (rows: actual, cols: predicted)",
        f"              pushing  non-pushing",
        f"  pushing     {c.tp:7d}  {c.fn:11d}",
        f"  non-pushing {c.fp:7d}  {c.tn:11d}",
        "",
        f"accuracy   {pct(report.accuracy)}",
        f"precision  {pct(report.precision_p)} (pushing)  {pct(report.precision_np)} (non-pushing)",
        f"recall     {pct(report.recall_p)} (pushing)  {pct(report.recall_np)} (non-pushing)",
        f"f1         {pct(report.f1_p)} (pushing)  {pct(report.f1_np)} (non-pushing)",
        f"macro f1   {pct(report.macro_f1)}",
    ]
    if report.auc is not None:
        lines.append(f"auc        {pct(report.auc)}")
    for w in report.warnings:
        lines.append(f"warning: {w}")
    return "\n".join(lines)


@dataclass(frozen=True)
class TimingReport:
    """Per-component durations for one 2 s stream segment."""

    preprocess_s: float
    descriptor_s: float
    detect_annotate_s: float
    deadline_met: bool

    @property
    def total_s(self) -> float:
        return self.preprocess_s + self.descriptor_s + self.detect_annotate_s


@dataclass(frozen=True)
class TimingStats:
    samples_s: list[float]

    @property
    def mean_s(self) -> float:
        return sum(self.samples_s) / len(self.samples_s)

    @property
    def max_s(self) -> float:
        return max(self.samples_s)


def time_stage(stage_fn, stage_input, repeats: int = 20) -> tuple[object, TimingStats]:
    """Run a stage `repeats` times on the same input, monotonic-clock timed.

    Returns the last result together with mean/max statistics.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    samples = []
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = stage_fn(stage_input)
        samples.append(time.perf_counter() - start)
    return result, TimingStats(samples_s=samples)
