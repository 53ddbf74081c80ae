"""Multicollinearity screening and stepwise AIC selection on linear fits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_VIF_THRESHOLD = 5.0
_COLLINEAR_TOL = 1e-10


def _rss(y: np.ndarray, X: np.ndarray) -> float:
    """Residual sum of squares of ``y`` on ``[1, X]``."""
    A = np.column_stack([np.ones(len(y)), X]) if X.size else np.ones((len(y), 1))
    beta, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ beta
    return float(r @ r)


def variance_inflation(X: np.ndarray) -> np.ndarray:
    """VIF of each column; exact collinearity gives ``inf``."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    out = np.empty(p)
    for j in range(p):
        col = X[:, j]
        tss = float(((col - col.mean()) ** 2).sum())
        if tss == 0.0:
            out[j] = math.inf
            continue
        rest = np.delete(X, j, axis=1)
        one_minus_r2 = _rss(col, rest) / tss
        out[j] = math.inf if one_minus_r2 < _COLLINEAR_TOL else 1.0 / one_minus_r2
    return out


@dataclass
class VifReport:
    labels: list[str]
    vif: dict[str, float]
    excluded: list[tuple[str, float]] = field(default_factory=list)
    initial_vif: dict[str, float] = field(default_factory=dict)

    @property
    def retained(self) -> list[str]:
        return [lab for lab in self.labels if lab in self.vif]

    @property
    def infinite(self) -> list[str]:
        return [lab for lab, v in self.excluded if math.isinf(v)]


def vif_filter(X, labels: Sequence[str], threshold: float = DEFAULT_VIF_THRESHOLD) -> VifReport:
    """Drop the highest-VIF column until every VIF is at most ``threshold``.

    Ties (including several infinite VIFs) drop the column listed later.
    """
    X = np.asarray(X, dtype=float)
    labels = list(labels)
    n, p = X.shape
    if p != len(labels):
        raise ValueError("one label per column required")
    if p and n <= p:
        raise ValueError(f"need more rows than columns, got {n} x {p}")
    keep = list(range(p))
    excluded = []
    initial = None
    while keep:
        v = variance_inflation(X[:, keep]) if len(keep) > 1 else np.ones(1)
        if initial is None:
            initial = {labels[j]: float(x) for j, x in zip(keep, v)}
        worst = max(v)
        if worst <= threshold:
            break
        ties = [k for k, x in enumerate(v) if x == worst or (math.isfinite(worst) and
                                                            math.isclose(x, worst, rel_tol=1e-9))]
        drop = ties[-1]
        excluded.append((labels[keep[drop]], float(v[drop])))
        keep.pop(drop)
    final = variance_inflation(X[:, keep]) if len(keep) > 1 else np.ones(len(keep))
    return VifReport(labels, {labels[j]: float(x) for j, x in zip(keep, final)}, excluded, initial or {})


@dataclass(frozen=True)
class StepwiseStep:
    action: str          # "start", "drop" or "add"
    variable: str | None
    aic: float
    selected: tuple[str, ...]


@dataclass
class StepwiseTrace:
    steps: list[StepwiseStep]

    @property
    def aics(self) -> list[float]:
        return [s.aic for s in self.steps]

    @property
    def selected(self) -> tuple[str, ...]:
        return self.steps[-1].selected


def gaussian_aic(y: np.ndarray, X: np.ndarray) -> float:
    """``n ln(RSS/n) + 2k`` for ``y`` on ``[1, X]``, ``k`` counting the intercept.

    RSS is floored at a tiny fraction of the total sum of squares so exact
    fits stay finite and comparable.
    """
    n = len(y)
    tss = float(((y - y.mean()) ** 2).sum())
    rss = max(_rss(y, X), 1e-12 * tss, 1e-300)
    k = 1 + (X.shape[1] if X.size else 0)
    return n * math.log(rss / n) + 2 * k


def stepwise_aic(y, X, labels: Sequence[str], direction: str = "backward"):
    """Greedy AIC selection; returns ``(selected labels, StepwiseTrace)``.

    ``backward`` starts from all columns, ``forward`` from none and
    ``both`` from all while allowing re-entry. Each step takes the move
    with the lowest AIC and stops once no move lowers it.
    """
    if direction not in ("backward", "forward", "both"):
        raise ValueError(f"direction must be backward, forward or both, got {direction!r}")
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    labels = list(labels)
    current = list(range(len(labels))) if direction != "forward" else []

    def aic(cols):
        return gaussian_aic(y, X[:, sorted(cols)])

    def names(cols):
        return tuple(labels[j] for j in sorted(cols))

    best = aic(current)
    steps = [StepwiseStep("start", None, best, names(current))]
    while True:
        moves = []
        if direction in ("backward", "both"):
            moves += [("drop", j, [c for c in current if c != j]) for j in current]
        if direction in ("forward", "both"):
            moves += [("add", j, current + [j]) for j in range(len(labels)) if j not in current]
        if not moves:
            break
        scored = [(aic(cols), k, act, j, cols) for k, (act, j, cols) in enumerate(moves)]
        value, _, act, j, cols = min(scored, key=lambda t: (t[0], t[1]))
        if not value < best - 1e-10:
            break
        best, current = value, sorted(cols)
        steps.append(StepwiseStep(act, labels[j], value, names(current)))
    trace = StepwiseTrace(steps)
    return list(trace.selected), trace
