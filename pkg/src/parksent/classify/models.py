"""Attitude classifiers.

Linear kinds are one-vs-rest; prediction takes the class with the largest
decision value, ties going to the earlier class.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import scipy.sparse as sp
from scipy import optimize
from scipy.special import expit

from .. import kernels
from ..textfilter import tokenize
from .labels import ATTITUDES, AttitudeLabel
from .tfidf import TfidfModel, build_tfidf


class ModelKind(str, Enum):
    LOGISTIC = "logistic"
    SGD = "sgd"
    FOREST = "forest"
    LEXICON = "lexicon"
    EXTERNAL = "external"

    @classmethod
    def parse(cls, raw) -> "ModelKind":
        return raw if isinstance(raw, cls) else cls(str(raw).lower())


DEFAULTS = {
    ModelKind.LOGISTIC: {"C": 1.0, "max_iter": 100, "solver": "lbfgs"},
    ModelKind.SGD: {"alpha": 1e-4, "max_iter": 1000, "penalty": "l2", "l1_ratio": 0.15, "tol": 1e-3},
    ModelKind.FOREST: {"n_estimators": 100, "max_depth": None, "min_samples_leaf": 1,
                       "max_features": "sqrt", "bootstrap": True},
}
LOGISTIC_SOLVERS = ("gd", "lbfgs", "newton-cg")
SGD_PENALTIES = ("l2", "l1", "elasticnet")


# --- logistic -----------------------------------------------------------------


def _binary_logistic(X, y, C, max_iter, solver):
    """Minimise 0.5*|w|^2 + C*sum(log(1+exp(-y*(Xw+b)))); intercept unpenalised."""
    n, d = X.shape

    def fun(theta):
        w, b = theta[:d], theta[d]
        m = y * (X @ w + b)
        loss = np.logaddexp(0.0, -m).sum()
        return 0.5 * w @ w + C * loss

    def grad(theta):
        w, b = theta[:d], theta[d]
        m = y * (X @ w + b)
        g = -C * y * expit(-m)
        return np.concatenate([w + X.T @ g, [g.sum()]])

    def hessp(theta, p):
        w, b = theta[:d], theta[d]
        s = expit(y * (X @ w + b))
        r = C * s * (1.0 - s)
        xp = X @ p[:d] + p[d]
        rx = r * xp
        return np.concatenate([p[:d] + X.T @ rx, [rx.sum()]])

    theta = np.zeros(d + 1)
    if solver == "lbfgs":
        res = optimize.minimize(fun, theta, jac=grad, method="L-BFGS-B",
                                options={"maxiter": max_iter, "gtol": 1e-6})
        return res.x
    if solver == "newton-cg":
        res = optimize.minimize(fun, theta, jac=grad, hessp=hessp, method="Newton-CG",
                                options={"maxiter": max_iter, "xtol": 1e-8})
        return res.x
    # full-batch gradient descent with Armijo backtracking
    f = fun(theta)
    step = 1.0
    for _ in range(max_iter):
        g = grad(theta)
        gg = g @ g
        if gg < 1e-12:
            break
        while True:
            cand = theta - step * g
            fc = fun(cand)
            if fc <= f - 0.5 * step * gg or step < 1e-12:
                break
            step *= 0.5
        theta, f = cand, fc
        step *= 2.0
    return theta


@dataclass
class LinearOvR:
    coef: np.ndarray        # (n_classes, d)
    intercept: np.ndarray   # (n_classes,)

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X @ self.coef.T) + self.intercept

    def predict_index(self, X) -> np.ndarray:
        return np.argmax(self.decision_function(X), axis=1)


def fit_logistic(X, y_idx, n_classes, C=1.0, max_iter=100, solver="lbfgs") -> LinearOvR:
    if solver not in LOGISTIC_SOLVERS:
        raise ValueError(
            f"logistic solver {solver!r} not supported; deterministic solvers are {LOGISTIC_SOLVERS}")
    X = sp.csr_matrix(X, dtype=float)
    d = X.shape[1]
    coef = np.zeros((n_classes, d))
    intercept = np.zeros(n_classes)
    for c in range(n_classes):
        y = np.where(y_idx == c, 1.0, -1.0)
        theta = _binary_logistic(X, y, float(C), int(max_iter), solver)
        coef[c], intercept[c] = theta[:d], theta[d]
    return LinearOvR(coef, intercept)


# --- SGD ------------------------------------------------------------------------


def fit_sgd(X, y_idx, n_classes, alpha=1e-4, max_iter=1000, penalty="l2", l1_ratio=0.15,
            tol=1e-3, n_iter_no_change=5, seed=0) -> LinearOvR:
    """Hinge-loss SGD, learning rate ``eta0 / (1 + eta0*alpha*t)``.

    The L2 part is applied per step through a weight scale; the L1 part as a
    soft-threshold at the end of each epoch using the epoch's summed step size.
    """
    if penalty not in SGD_PENALTIES:
        raise ValueError(f"SGD penalty must be one of {SGD_PENALTIES}, got {penalty!r}")
    l1_part = {"l2": 0.0, "l1": 1.0, "elasticnet": float(l1_ratio)}[penalty]
    l2_part = 1.0 - l1_part
    alpha = float(alpha)
    eta0 = min(0.1, 0.5 / alpha)
    X = sp.csr_matrix(X, dtype=float)
    X.sort_indices()
    data = np.ascontiguousarray(X.data, dtype=np.float64)
    indices = np.ascontiguousarray(X.indices, dtype=np.int64)
    indptr = np.ascontiguousarray(X.indptr, dtype=np.int64)
    n, d = X.shape
    coef = np.zeros((n_classes, d))
    intercept = np.zeros(n_classes)
    for c in range(n_classes):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), c]))
        y = np.where(y_idx == c, 1.0, -1.0)
        v = np.zeros(d)
        scale, b, t = 1.0, 0.0, 0.0
        best, stall = math.inf, 0
        for _ in range(int(max_iter)):
            order = rng.permutation(n).astype(np.int64)
            scale, b, t, loss, eta_sum = kernels.sgd_hinge_epoch(
                data, indices, indptr, y, order, v, scale, b, t, alpha, l2_part, eta0)
            if l1_part > 0.0:
                w = v * scale
                w = np.sign(w) * np.maximum(np.abs(w) - alpha * l1_part * eta_sum, 0.0)
                v[:] = w
                scale = 1.0
            loss /= n
            if loss > best - tol:
                stall += 1
                if stall >= n_iter_no_change:
                    break
            else:
                stall = 0
            best = min(best, loss)
        coef[c] = v * scale
        intercept[c] = b
    return LinearOvR(coef, intercept)


# --- random forest ----------------------------------------------------------------


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # class counts per node

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.left[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.left[node] >= 0
        return node

    def predict_index(self, X) -> np.ndarray:
        return np.argmax(self.value[self.apply(X)], axis=1)


def _max_features(spec, d: int) -> int:
    if spec is None:
        return d
    if spec == "sqrt":
        return max(1, int(math.sqrt(d)))
    if spec == "log2":
        return max(1, int(math.log2(d)))
    return max(1, min(d, int(spec)))


def fit_tree(X, y_idx, n_classes, max_depth=None, min_samples_leaf=1, max_features=None,
             rng=None) -> Tree:
    """CART with Gini impurity; left branch is ``x <= threshold``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y_idx = np.ascontiguousarray(y_idx, dtype=np.int64)
    n, d = X.shape
    mtry = _max_features(max_features, d)
    rng = rng if rng is not None else np.random.default_rng(0)
    depth_cap = math.inf if max_depth is None else int(max_depth)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(np.bincount(y_idx[rows], minlength=n_classes))
        return len(feature) - 1

    root = new_node(np.arange(n))
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, rows, depth = stack.pop()
        counts = value[node]
        if depth >= depth_cap or np.count_nonzero(counts) <= 1 or len(rows) < 2 * min_samples_leaf:
            continue
        sub = X[rows]
        cand = _candidate_features(sub, rng, d, mtry)
        if cand.size == 0:
            continue
        Xn = np.ascontiguousarray(sub[:, cand])
        order = np.ascontiguousarray(np.argsort(Xn, axis=0, kind="stable"), dtype=np.int64)
        f, thr, _ = kernels.gini_best_split(Xn, y_idx[rows], order, n_classes, min_samples_leaf)
        if f < 0:
            continue
        f = int(cand[f])
        mask = X[rows, f] <= thr
        feature[node], threshold[node] = f, float(thr)
        lrows, rrows = rows[mask], rows[~mask]
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
                np.array(right, dtype=np.int64), np.array(value))


def _candidate_features(sub: np.ndarray, rng, d: int, mtry: int) -> np.ndarray:
    """Draw features until ``mtry`` non-constant ones are found or all are seen."""
    if mtry >= d:
        perm = np.arange(d)
    else:
        perm = rng.permutation(d)
    found = []
    for start in range(0, d, mtry):
        chunk = perm[start:start + mtry]
        block = sub[:, chunk]
        varying = chunk[block.max(axis=0) > block.min(axis=0)]
        found.extend(varying.tolist())
        if len(found) >= mtry:
            break
    return np.array(sorted(found[:mtry]), dtype=np.int64)


@dataclass
class Forest:
    trees: list[Tree]
    n_classes: int

    def predict_index(self, X) -> np.ndarray:
        X = X.toarray() if sp.issparse(X) else np.asarray(X, dtype=float)
        votes = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            votes[rows, tree.predict_index(X)] += 1
        return np.argmax(votes, axis=1)


def fit_forest(X, y_idx, n_classes, n_estimators=100, max_depth=None, min_samples_leaf=1,
               max_features="sqrt", bootstrap=True, seed=0) -> Forest:
    X = X.toarray() if sp.issparse(X) else np.asarray(X, dtype=float)
    n = X.shape[0]
    trees = []
    for child in np.random.SeedSequence(int(seed)).spawn(int(n_estimators)):
        rng = np.random.default_rng(child)
        rows = rng.integers(0, n, n) if bootstrap else np.arange(n)
        trees.append(fit_tree(X[rows], y_idx[rows], n_classes, max_depth, min_samples_leaf,
                              max_features, rng))
    return Forest(trees, n_classes)


# --- lexicon and external ------------------------------------------------------------


@dataclass
class Lexicon:
    valence: dict[str, float]

    def score(self, text: str) -> tuple[float, int]:
        total, matched = 0.0, 0
        for tok in tokenize(text):
            v = self.valence.get(tok.text.lower())
            if v is not None:
                total += v
                matched += 1
        return total, matched

    def label(self, text: str) -> AttitudeLabel:
        total, matched = self.score(text)
        if matched == 0:
            return AttitudeLabel.UNRELATED
        if total > 0:
            return AttitudeLabel.POSITIVE
        if total < 0:
            return AttitudeLabel.NEGATIVE
        return AttitudeLabel.NEUTRAL


def load_lexicon(path: str | Path) -> Lexicon:
    valence = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            valence[row["term"].strip().lower()] = float(row["valence"])
    return Lexicon(valence)


@dataclass
class ExternalLabels:
    labels: dict[str, AttitudeLabel]

    def lookup(self, uids: Sequence[str]) -> list[AttitudeLabel]:
        missing = [u for u in uids if u not in self.labels]
        if missing:
            shown = ", ".join(missing[:20]) + (" ..." if len(missing) > 20 else "")
            raise KeyError(f"external label sidecar lacks {len(missing)} sentence id(s): {shown}")
        return [self.labels[u] for u in uids]


def external_model(path: str | Path) -> ClassifierModel:
    return ClassifierModel(ModelKind.EXTERNAL, ATTITUDES, {"sidecar": str(path)}, load_sidecar(path))


def load_sidecar(path: str | Path) -> ExternalLabels:
    labels = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                rec = json.loads(line)
                labels[str(rec["sentence_uid"])] = AttitudeLabel.parse(rec["label"])
    return ExternalLabels(labels)


def write_sidecar(path: str | Path, uids: Sequence[str], labels: Sequence) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for uid, lab in zip(uids, labels):
            fh.write(json.dumps({"sentence_uid": uid, "label": str(AttitudeLabel.parse(lab))}) + "\n")


# --- unified model -------------------------------------------------------------------


@dataclass
class ClassifierModel:
    kind: ModelKind
    classes: tuple
    params: dict[str, Any] = field(default_factory=dict)
    estimator: Any = None
    vectorizer: TfidfModel | None = None

    def predict_features(self, X) -> list:
        idx = self.estimator.predict_index(X)
        return [self.classes[i] for i in idx]


def _index_labels(labels, classes) -> np.ndarray:
    pos = {c: i for i, c in enumerate(classes)}
    present = set(labels)
    for c in classes:
        if c not in present:
            raise ValueError(f"class {c!s} is absent from the training labels")
    try:
        return np.array([pos[lab] for lab in labels], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]!r} is not among the model classes") from None


def train_classifier(kind, features, labels, hyperparameters=None, seed=0, classes=ATTITUDES,
                     lexicon: Lexicon | None = None) -> ClassifierModel:
    kind = ModelKind.parse(kind)
    classes = tuple(classes)
    if kind is ModelKind.LEXICON:
        if lexicon is None:
            raise ValueError("the lexicon kind needs a lexicon")
        return ClassifierModel(kind, ATTITUDES, {}, lexicon)
    if kind is ModelKind.EXTERNAL:
        raise ValueError("external models are loaded from a sidecar, not trained")
    if classes == ATTITUDES:
        labels = [AttitudeLabel.parse(lab) for lab in labels]
    params = {**DEFAULTS[kind], **(hyperparameters or {})}
    unknown = set(params) - set(DEFAULTS[kind])
    if unknown:
        raise ValueError(f"unknown {kind.value} hyperparameter(s): {sorted(unknown)}")
    y = _index_labels(list(labels), classes)
    k = len(classes)
    if kind is ModelKind.LOGISTIC:
        est = fit_logistic(features, y, k, params["C"], params["max_iter"], params["solver"])
    elif kind is ModelKind.SGD:
        est = fit_sgd(features, y, k, params["alpha"], params["max_iter"], params["penalty"],
                      params["l1_ratio"], params["tol"], seed=seed)
    else:
        est = fit_forest(features, y, k, params["n_estimators"], params["max_depth"],
                         params["min_samples_leaf"], params["max_features"], params["bootstrap"], seed)
    return ClassifierModel(kind, classes, params, est)


def fit_text_classifier(kind, texts, labels, hyperparameters=None, seed=0, min_df=2,
                        ngram_range=(1, 2), classes=ATTITUDES, lexicon=None) -> ClassifierModel:
    kind = ModelKind.parse(kind)
    if kind is ModelKind.LEXICON:
        return train_classifier(kind, None, labels, seed=seed, lexicon=lexicon)
    vec = build_tfidf(texts, min_df=min_df, ngram_range=ngram_range)
    model = train_classifier(kind, vec.transform(texts), labels, hyperparameters, seed, classes)
    model.vectorizer = vec
    return model


def predict(model: ClassifierModel | ExternalLabels | Lexicon, sentences) -> list:
    """One label per sentence, order preserved.

    ``sentences`` holds :class:`~parksent.textfilter.Sentence` objects,
    ``(uid, text)`` pairs, or plain strings (not for the external kind).
    """
    items = list(sentences)
    if not items:
        return []
    uids, texts = [], []
    for s in items:
        if isinstance(s, str):
            uids.append(None)
            texts.append(s)
        elif isinstance(s, tuple):
            uids.append(s[0])
            texts.append(s[1])
        else:
            uids.append(s.uid)
            texts.append(s.text)
    if isinstance(model, ClassifierModel) and model.kind is ModelKind.EXTERNAL:
        model = model.estimator
    if isinstance(model, ExternalLabels):
        if any(u is None for u in uids):
            raise ValueError("external labels need sentence ids")
        return model.lookup(uids)
    if isinstance(model, ClassifierModel) and model.kind is ModelKind.LEXICON:
        model = model.estimator
    if isinstance(model, Lexicon):
        return [model.label(t) for t in texts]
    if model.vectorizer is None:
        raise ValueError("model has no vectorizer; use predict_features on feature rows")
    return model.predict_features(model.vectorizer.transform(texts))
