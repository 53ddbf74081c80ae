from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .labels import ATTITUDES


@dataclass
class MetricsReport:
    classes: tuple
    confusion: np.ndarray  # rows: true label, columns: predicted
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    accuracy: float

    def as_rows(self) -> list[dict]:
        rows = []
        for i, c in enumerate(self.classes):
            rows.append({"class": str(c), "precision": self.precision[i], "recall": self.recall[i],
                         "f1": self.f1[i], "support": int(self.confusion[i].sum())})
        return rows


def accuracy(y_true: Sequence, y_pred: Sequence) -> float:
    if not y_true:
        raise ValueError("empty evaluation set")
    return sum(a == b for a, b in zip(y_true, y_pred)) / len(y_true)


def metrics_from_confusion(confusion: np.ndarray, classes=ATTITUDES) -> MetricsReport:
    cm = np.asarray(confusion, dtype=np.int64)
    tp = np.diag(cm).astype(float)
    pred_tot = cm.sum(axis=0)
    true_tot = cm.sum(axis=1)
    precision = np.divide(tp, pred_tot, out=np.zeros_like(tp), where=pred_tot > 0)
    recall = np.divide(tp, true_tot, out=np.zeros_like(tp), where=true_tot > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    return MetricsReport(tuple(classes), cm, precision, recall, f1, float(tp.sum() / cm.sum()))


def evaluate_labels(y_true: Sequence, y_pred: Sequence, classes=ATTITUDES) -> MetricsReport:
    if len(y_true) == 0:
        raise ValueError("test set is empty")
    pos = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        cm[pos[t], pos[p]] += 1
    return metrics_from_confusion(cm, classes)


@dataclass
class AgreementReport:
    alpha: float
    observed: float
    expected: float
    n_pairable: int
    degenerate: bool = False


def coincidence_matrix(coder_labels: Sequence[Sequence[Hashable | None]]):
    """Nominal coincidence counts ``o[c][k]`` over units with >= 2 values."""
    values = sorted({v for unit in coder_labels for v in unit if v is not None}, key=str)
    index = {v: i for i, v in enumerate(values)}
    o = np.zeros((len(values), len(values)))
    for unit in coder_labels:
        vals = [v for v in unit if v is not None]
        m = len(vals)
        if m < 2:
            continue
        counts = Counter(index[v] for v in vals)
        for c, nc in counts.items():
            for k, nk in counts.items():
                pairs = nc * (nc - 1) if c == k else nc * nk
                o[c, k] += pairs / (m - 1)
    return values, o


def krippendorff_alpha(coder_labels: Sequence[Sequence[Hashable | None]]) -> AgreementReport:
    """Krippendorff's alpha at the nominal level.

    ``coder_labels`` is units x coders; ``None`` marks a missing judgement.
    """
    units = [list(u) for u in coder_labels]
    if len(units) < 2 or max((len(u) for u in units), default=0) < 2:
        raise ValueError("need at least 2 units and 2 coders")
    _, o = coincidence_matrix(units)
    n_c = o.sum(axis=1)
    n = n_c.sum()
    if n < 2:
        raise ValueError("no unit has two or more labels")
    d_o = (n - np.trace(o)) / n
    d_e = (n * n - (n_c * n_c).sum()) / (n * (n - 1))
    if d_e == 0:
        return AgreementReport(1.0, float(d_o), 0.0, int(round(n)), degenerate=True)
    return AgreementReport(float(1.0 - d_o / d_e), float(d_o), float(d_e), int(round(n)))
