"""Action-level evaluation: per-class rates, confusion matrix, report files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .classifier import BACKGROUND, ActionDecision

__all__ = [
    "EvalReport",
    "compute_metrics",
    "report_to_json",
    "format_report_table",
    "metrics_tsv",
    "confusion_tsv",
]


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Per-class recognition/error/miss rates plus the confusion matrix.

    ``confusion`` has one row per class and one column per predicted class
    plus a final background column; each row sums to that class's sample
    count. Rates of a class with no samples are zero and excluded from the
    averages.
    """

    classes: tuple[int, ...]
    counts: np.ndarray
    recognition: np.ndarray
    error: np.ndarray
    miss: np.ndarray
    confusion: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("counts", "recognition", "error", "miss", "confusion"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def _sampled(self) -> np.ndarray:
        return self.counts > 0

    @property
    def avg_recognition(self) -> float:
        return float(self.recognition[self._sampled()].mean())

    @property
    def avg_error(self) -> float:
        return float(self.error[self._sampled()].mean())

    @property
    def avg_miss(self) -> float:
        return float(self.miss[self._sampled()].mean())


def compute_metrics(decisions, classes=None, metadata=None) -> EvalReport:
    """Score action-level decisions against their true labels.

    ``decisions`` is an iterable of (true label, :class:`ActionDecision`).
    Recognition, error and miss are the fractions of a class's samples that
    were labeled correctly, labeled as another class, or rejected to the
    background; the three always sum to one. Averages are unweighted means
    over the classes. A predicted label outside the class set is an error.
    """
    decisions = list(decisions)
    if not decisions:
        raise ValueError("no decisions to score")
    true_labels = sorted({true for true, _ in decisions})
    if classes is None:
        classes = true_labels
    classes = tuple(sorted(set(classes)))
    index_of = {cls: i for i, cls in enumerate(classes)}
    m = len(classes)

    confusion = np.zeros((m, m + 1), dtype=np.int64)
    for true, decision in decisions:
        if true not in index_of:
            raise ValueError(f"true label {true!r} not in class set {classes}")
        if not isinstance(decision, ActionDecision):
            raise TypeError("decisions must pair labels with ActionDecision values")
        predicted = decision.label
        if predicted == BACKGROUND:
            confusion[index_of[true], m] += 1
        elif predicted in index_of:
            confusion[index_of[true], index_of[predicted]] += 1
        else:
            raise ValueError(f"unknown predicted label {predicted!r}")

    counts = confusion.sum(axis=1)
    safe = np.maximum(counts, 1)
    correct = np.diag(confusion[:, :m])
    missed = confusion[:, m]
    wrong = counts - correct - missed
    recognition = np.where(counts > 0, correct / safe, 0.0)
    error = np.where(counts > 0, wrong / safe, 0.0)
    miss = np.where(counts > 0, missed / safe, 0.0)
    return EvalReport(
        classes=classes,
        counts=counts,
        recognition=recognition,
        error=error,
        miss=miss,
        confusion=confusion,
        metadata=dict(metadata or {}),
    )


def report_to_json(report: EvalReport) -> str:
    document = {
        "classes": list(report.classes),
        "per_class": [
            {
                "class": cls,
                "samples": int(report.counts[i]),
                "recognition_rate": float(report.recognition[i]),
                "error_rate": float(report.error[i]),
                "miss_rate": float(report.miss[i]),
            }
            for i, cls in enumerate(report.classes)
        ],
        "averages": {
            "recognition_rate": report.avg_recognition,
            "error_rate": report.avg_error,
            "miss_rate": report.avg_miss,
        },
        "confusion": {
            "columns": [str(cls) for cls in report.classes] + ["background"],
            "rows": [
                {"class": cls, "counts": [int(v) for v in report.confusion[i]]}
                for i, cls in enumerate(report.classes)
            ],
        },
        "metadata": report.metadata,
    }
    return json.dumps(document, indent=2)


def format_report_table(report: EvalReport) -> str:
    """Aligned plain-text table of per-class and average rates."""
    header = f"{'Class':>8}  {'Recognition':>11}  {'Error':>7}  {'Miss':>7}  {'Samples':>7}"
    rule = "-" * len(header)
    lines = [header, rule]
    for i, cls in enumerate(report.classes):
        lines.append(
            f"{cls:>8}  {report.recognition[i]:>11.4f}  {report.error[i]:>7.4f}  "
            f"{report.miss[i]:>7.4f}  {report.counts[i]:>7d}"
        )
    lines.append(rule)
    lines.append(
        f"{'Avg.':>8}  {report.avg_recognition:>11.4f}  {report.avg_error:>7.4f}  "
        f"{report.avg_miss:>7.4f}  {int(report.counts.sum()):>7d}"
    )
    return "\n".join(lines) + "\n"


def metrics_tsv(report: EvalReport) -> str:
    """Tab-separated per-class rates with a final average row."""
    lines = ["class\tsamples\trecognition_rate\terror_rate\tmiss_rate"]
    for i, cls in enumerate(report.classes):
        lines.append(
            f"{cls}\t{int(report.counts[i])}\t{float(report.recognition[i])!r}\t"
            f"{float(report.error[i])!r}\t{float(report.miss[i])!r}"
        )
    lines.append(
        f"avg\t{int(report.counts.sum())}\t{report.avg_recognition!r}\t"
        f"{report.avg_error!r}\t{report.avg_miss!r}"
    )
    return "\n".join(lines) + "\n"


def confusion_tsv(report: EvalReport) -> str:
    """Tab-separated confusion counts, background in the last column."""
    columns = [str(cls) for cls in report.classes] + ["background"]
    lines = ["true\\predicted\t" + "\t".join(columns)]
    for i, cls in enumerate(report.classes):
        lines.append(f"{cls}\t" + "\t".join(str(int(v)) for v in report.confusion[i]))
    return "\n".join(lines) + "\n"
