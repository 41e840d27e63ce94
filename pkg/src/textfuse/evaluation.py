"""Confusion-matrix metrics, macro-F1, and constant-predictor baselines.

Macro-F1 (the unweighted mean of the two per-class F1 scores) is the
headline and model-selection metric throughout; it is insensitive to how
lopsided the class counts are.  Zero denominators yield 0 everywhere, so
a predictor that never emits a class gets precision 0 for it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyGolds, LengthMismatch, UnknownLabel


@dataclass
class ConfusionMatrix:
    """counts[gold][predicted] over (negative, positive) label order."""

    labels: tuple[str, str]
    counts: list[list[int]]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    labels: tuple[str, str]
    per_class: dict[str, ClassMetrics]
    macro_f1: float
    accuracy: float

    def kv_lines(self) -> list[str]:
        out = []
        for label in self.labels:
            cm = self.per_class[label]
            out.append(f"precision.{label}={cm.precision:.6f}")
            out.append(f"recall.{label}={cm.recall:.6f}")
            out.append(f"f1.{label}={cm.f1:.6f}")
            out.append(f"support.{label}={cm.support}")
        out.append(f"macro_f1={self.macro_f1:.6f}")
        out.append(f"accuracy={self.accuracy:.6f}")
        return out

    @staticmethod
    def tsv_header(prefix: str = "") -> str:
        cols = [
            f"{prefix}precision_neg", f"{prefix}recall_neg", f"{prefix}f1_neg",
            f"{prefix}precision_pos", f"{prefix}recall_pos", f"{prefix}f1_pos",
            f"{prefix}macro_f1",
        ]
        return "\t".join(cols)

    def tsv_row(self) -> str:
        neg, pos = self.labels
        cells = []
        for label in (neg, pos):
            cm = self.per_class[label]
            cells.extend([f"{cm.precision:.4f}", f"{cm.recall:.4f}", f"{cm.f1:.4f}"])
        cells.append(f"{self.macro_f1:.4f}")
        return "\t".join(cells)


def confusion(
    golds: list[str], preds: list[str], labels: tuple[str, str]
) -> ConfusionMatrix:
    """Exact 2x2 counts indexed (gold, predicted)."""
    if len(golds) != len(preds):
        raise LengthMismatch(len(golds), len(preds))
    index = {labels[0]: 0, labels[1]: 1}
    counts = [[0, 0], [0, 0]]
    for line_no, (g, p) in enumerate(zip(golds, preds), start=1):
        if g not in index:
            raise UnknownLabel(line_no, g)
        if p not in index:
            raise UnknownLabel(line_no, p)
        counts[index[g]][index[p]] += 1
    return ConfusionMatrix(labels=labels, counts=counts)


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def metrics(cm: ConfusionMatrix) -> EvalReport:
    per_class: dict[str, ClassMetrics] = {}
    f1s = []
    correct = cm.counts[0][0] + cm.counts[1][1]
    for i, label in enumerate(cm.labels):
        tp = cm.counts[i][i]
        fp = cm.counts[1 - i][i]
        fn = cm.counts[i][1 - i]
        precision = _safe_div(tp, tp + fp)
        recall = _safe_div(tp, tp + fn)
        f1 = _safe_div(2 * precision * recall, precision + recall)
        per_class[label] = ClassMetrics(
            precision=precision, recall=recall, f1=f1, support=tp + fn
        )
        f1s.append(f1)
    return EvalReport(
        labels=cm.labels,
        per_class=per_class,
        macro_f1=sum(f1s) / 2.0,
        accuracy=_safe_div(correct, cm.total),
    )


def baseline_all(
    label: str, golds: list[str], labels: tuple[str, str]
) -> EvalReport:
    """Metrics of the constant predictor that always answers ``label``."""
    if not golds:
        raise EmptyGolds("baselines need at least one gold label")
    return metrics(confusion(golds, [label] * len(golds), labels))
