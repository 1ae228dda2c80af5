"""Binary classification metrics with Real as the positive class."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .verdict import Verdict


@dataclass
class MetricsReport:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float

    def as_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "accuracy": self.accuracy, "precision": self.precision,
            "recall": self.recall, "f1": self.f1,
        }


def compute_metrics(predictions: list[Verdict],
                    golds: list[Verdict]) -> MetricsReport:
    if len(predictions) != len(golds):
        raise ValidationError("predictions and golds differ in length")
    tp = fp = tn = fn = 0
    for pred, gold in zip(predictions, golds):
        if pred == Verdict.REAL:
            if gold == Verdict.REAL:
                tp += 1
            else:
                fp += 1
        else:
            if gold == Verdict.REAL:
                fn += 1
            else:
                tn += 1
    total = tp + fp + tn + fn
    accuracy = (tp + tn) / total if total else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    return MetricsReport(tp, fp, tn, fn, accuracy, precision, recall, f1)


def format_metrics(report: MetricsReport, population: int | None = None) -> str:
    lines = [f"{'metric':<12}{'value':>10}"]
    for name in ("accuracy", "precision", "recall", "f1"):
        lines.append(f"{name:<12}{getattr(report, name):>10.4f}")
    lines.append(f"{'tp/fp/tn/fn':<12}{report.tp}/{report.fp}/"
                 f"{report.tn}/{report.fn:>}")
    if population is not None:
        lines.append(f"{'population':<12}{population:>10}")
    return "\n".join(lines)
