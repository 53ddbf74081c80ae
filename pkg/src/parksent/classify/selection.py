"""Stratified K-fold grid search."""
from __future__ import annotations

import itertools
import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .labels import ATTITUDES, LabeledExample
from .metrics import MetricsReport, accuracy, evaluate_labels
from .models import ModelKind, fit_text_classifier, predict

logger = logging.getLogger(__name__)

# Default search grids per model kind; stochastic logistic solvers (sag, saga) are left out.
CLASSIFIER_GRIDS = {
    ModelKind.FOREST: {
        "n_estimators": [100, 200, 300, 400],
        "max_depth": [10, 20, 40, 80, 100, 120],
        "min_samples_leaf": [1, 2, 4],
    },
    ModelKind.SGD: {
        "alpha": [1e-4, 1e-3, 1e-2, 1e-1, 1, 10],
        "max_iter": [500, 800, 1000, 2000, 3000],
        "penalty": ["l2", "l1", "elasticnet"],
    },
    ModelKind.LOGISTIC: {
        "C": [0.1, 0.5, 1, 2, 5, 10, 20],
        "max_iter": [10, 20, 50, 100, 200],
        "solver": ["lbfgs", "newton-cg"],
    },
}


@dataclass
class CvReport:
    k: int
    results: list[tuple[dict[str, Any], float, list[float]]] = field(default_factory=list)
    best_params: dict[str, Any] = field(default_factory=dict)
    best_score: float = float("nan")
    folds: list[np.ndarray] = field(default_factory=list)


def _sort_value(v):
    if v is None:
        return (0, 0.0, "")
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return (1, float(v), "")
    return (2, 0.0, str(v))


def param_key(params: dict) -> tuple:
    return tuple((k, _sort_value(params[k])) for k in sorted(params))


def expand_grid(grid: dict[str, Sequence]) -> list[dict[str, Any]]:
    names = sorted(grid)
    points = [dict(zip(names, combo)) for combo in itertools.product(*(grid[n] for n in names))]
    return sorted(points, key=param_key)


def load_grid(path: str | Path) -> dict[str, list]:
    with open(path, encoding="utf-8") as fh:
        grid = json.load(fh)
    if not isinstance(grid, dict) or not all(isinstance(v, list) and v for v in grid.values()):
        raise ValueError(f"{path}: grid must map each hyperparameter to a non-empty list")
    return grid


def stratified_folds(labels: Sequence, k: int, seed: int = 0) -> list[np.ndarray]:
    """Partition indices into ``k`` folds, dealing each class round-robin.

    The deal continues where the previous class stopped, so fold sizes differ
    by at most one and each class's per-fold count differs by at most one.
    """
    labels = list(labels)
    if k < 2:
        raise ValueError("K must be at least 2")
    if len(labels) < k:
        raise ValueError(f"need at least K={k} examples, got {len(labels)}")
    rng = np.random.default_rng(seed)
    classes = sorted(set(labels), key=str)
    folds: list[list[int]] = [[] for _ in range(k)]
    pos = 0
    for c in classes:
        idx = np.array([i for i, lab in enumerate(labels) if lab == c])
        if len(idx) < k:
            warnings.warn(f"class {c!s} has {len(idx)} < K={k} members; stratification relaxed",
                          stacklevel=2)
        for i in rng.permutation(idx):
            folds[pos % k].append(int(i))
            pos += 1
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def cross_validate(kind, grid: dict[str, Sequence], examples: Sequence[LabeledExample], k: int = 10,
                   seed: int = 0, min_df: int = 2, ngram_range=(1, 2), classes=ATTITUDES):
    """Grid search by mean validation accuracy; returns ``(best_params, CvReport)``.

    Ties go to the lexicographically smallest hyperparameter tuple.
    """
    kind = ModelKind.parse(kind)
    texts = [e.text for e in examples]
    labels = [e.label for e in examples]
    folds = stratified_folds(labels, k, seed)
    report = CvReport(k=k, folds=folds)
    all_idx = np.arange(len(examples))
    best = None
    for params in expand_grid(grid):
        scores = []
        for fold in folds:
            train = np.setdiff1d(all_idx, fold)
            model = fit_text_classifier(kind, [texts[i] for i in train], [labels[i] for i in train],
                                        params, seed, min_df, ngram_range, classes)
            pred = predict(model, [texts[i] for i in fold])
            scores.append(accuracy([labels[i] for i in fold], pred))
        mean = float(np.mean(scores))
        report.results.append((params, mean, scores))
        logger.debug("cv %s %s -> %.4f", kind.value, params, mean)
        if best is None or mean > best[1]:
            best = (params, mean)
    report.best_params, report.best_score = dict(best[0]), best[1]
    return report.best_params, report


def evaluate(model, examples: Sequence[LabeledExample]) -> MetricsReport:
    """Score ``model`` on held-out examples."""
    if not examples:
        raise ValueError("test set is empty")
    pred = predict(model, [e.text for e in examples])
    classes = getattr(model, "classes", ATTITUDES)
    return evaluate_labels([e.label for e in examples], pred, classes)
