import json
import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from parksent.classify import (
    ATTITUDES, AttitudeLabel, LabeledExample, Lexicon, ModelKind, build_tfidf, cross_validate, evaluate,
    evaluate_labels, expand_grid, external_model, fit_text_classifier, krippendorff_alpha,
    load_labeled_examples, load_sidecar, predict, stratified_folds, train_classifier, write_sidecar,
)
from parksent.config import bundled

P, N, G, U = ATTITUDES


# --- TF-IDF ----------------------------------------------------------------------------

def test_tfidf_idf_hand_values():
    m = build_tfidf(["a a", "a b"], min_df=1, ngram_range=(1, 1))
    assert list(m.vocabulary) == ["a", "b"]
    idf = dict(zip(m.vocabulary, m.idf))
    assert idf["a"] == pytest.approx(math.log(3 / 3) + 1)
    assert idf["b"] == pytest.approx(math.log(3 / 2) + 1)
    assert idf["b"] > idf["a"]


def test_tfidf_single_document():
    m = build_tfidf(["x y z"], min_df=1)
    assert np.all(m.idf == 1.0)


def test_tfidf_zero_vector_and_norms():
    m = build_tfidf(["good lot", "good spot", "bad lot"], min_df=1)
    X = m.transform(["zzz qqq", "good lot", "lot lot spot"])
    assert X[0].nnz == 0
    norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
    assert norms[1:] == pytest.approx([1.0, 1.0])
    with pytest.raises(ValueError):
        build_tfidf([])


def test_tfidf_min_df_and_sorted_vocab():
    m = build_tfidf(["free parking", "free parking lot", "lot"], min_df=2)
    assert list(m.vocabulary) == sorted(m.vocabulary) == ["free", "free parking", "lot", "parking"]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.sampled_from("abcde"), min_size=1, max_size=6), min_size=2, max_size=6),
       st.integers(1, 4))
def test_tfidf_linear_in_counts(docs, times):
    texts = [" ".join(d) for d in docs]
    m = build_tfidf(texts, min_df=1, ngram_range=(1, 1))
    once = m.counts(texts) @ sp.diags(m.idf)
    many = m.counts([" ".join([t] * times) for t in texts]) @ sp.diags(m.idf)
    np.testing.assert_allclose(many.toarray(), times * once.toarray())
    np.testing.assert_allclose(m.transform([" ".join([t] * times) for t in texts]).toarray(),
                               m.transform(texts).toarray(), atol=1e-12)


# --- training --------------------------------------------------------------------------

def test_logistic_separable():
    X = sp.csr_matrix(np.array([[1, 0], [2, 0], [0, 1], [0, 3]], dtype=float))
    y = ["a", "a", "b", "b"]
    model = train_classifier("logistic", X, y, {"C": 10}, classes=("a", "b"))
    assert model.predict_features(X) == y


def test_missing_class_is_named():
    X = sp.csr_matrix(np.eye(3))
    with pytest.raises(ValueError, match="unrelated"):
        train_classifier("logistic", X, ["positive", "negative", "neutral"])


def _best_stump(x, y):
    """Enumerate every midpoint split and return the Gini-optimal one."""
    xs = sorted(set(x))
    best = None
    for lo, hi in zip(xs, xs[1:]):
        t = (lo + hi) / 2
        score = 0.0
        for side in ([b for a, b in zip(x, y) if a <= t], [b for a, b in zip(x, y) if a > t]):
            p = sum(side) / len(side)
            score += len(side) * (1 - p * p - (1 - p) ** 2)
        if best is None or score < best[0] - 1e-12:
            best = (score, t)
    return best[1]


def test_forest_single_stump():
    x = list(range(20))
    y = [int(v >= 8) for v in x]
    y[3] = 1
    t = _best_stump(x, y)
    assert t == 7.5
    X = np.array(x, dtype=float)[:, None]
    model = train_classifier("forest", X, ["ab"[v] for v in y],
                             {"n_estimators": 1, "max_depth": 1, "bootstrap": False}, classes=("a", "b"))
    tree = model.estimator.trees[0]
    assert tree.feature[0] == 0 and len(tree.feature) == 3
    grid = np.linspace(-1, 20, 85)[:, None]
    assert model.predict_features(grid) == ["a" if g <= t else "b" for g in grid[:, 0]]


def _labeled():
    return load_labeled_examples(bundled("labeled.csv"))


@pytest.mark.parametrize("kind, params", [("logistic", {"C": 1}), ("sgd", {"alpha": 1e-3}),
                                          ("forest", {"n_estimators": 5, "max_depth": 10})])
def test_seeded_training_is_bitwise_stable(kind, params):
    ex = [e for e in _labeled() if e.split == "train"][:300]
    texts, labels = [e.text for e in ex], [e.label for e in ex]
    a = fit_text_classifier(kind, texts, labels, params, seed=7)
    b = fit_text_classifier(kind, texts, labels, params, seed=7)
    assert predict(a, texts) == predict(b, texts)
    if kind != "forest":
        assert np.array_equal(a.estimator.coef, b.estimator.coef)


def test_logistic_solvers_agree_and_reject_stochastic():
    ex = [e for e in _labeled() if e.split == "train"][:200]
    texts, labels = [e.text for e in ex], [e.label for e in ex]
    preds = [predict(fit_text_classifier("logistic", texts, labels, {"solver": s, "max_iter": 200}), texts)
             for s in ("lbfgs", "newton-cg")]
    assert sum(a == b for a, b in zip(*preds)) / len(texts) > 0.98
    with pytest.raises(ValueError, match="solver"):
        fit_text_classifier("logistic", texts, labels, {"solver": "saga"})


# --- cross validation ------------------------------------------------------------------

def test_single_point_grid():
    ex = [e for e in _labeled() if e.split == "train"][:80]
    best, report = cross_validate("logistic", {"C": [2.0]}, ex, k=2)
    assert best == {"C": 2.0}
    assert len(report.results) == 1


def test_two_folds_four_balanced():
    folds = stratified_folds([P, N, P, N], 2, seed=3)
    assert len(folds) == 2
    labels = [P, N, P, N]
    for f in folds:
        assert sorted(labels[i] for i in f) == sorted([P, N])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(ATTITUDES), min_size=10, max_size=80), st.integers(2, 10), st.integers(0, 99))
def test_folds_partition_and_stratify(labels, k, seed):
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        folds = stratified_folds(labels, k, seed)
    flat = np.concatenate(folds)
    assert sorted(flat.tolist()) == list(range(len(labels)))
    for c in set(labels):
        per = [sum(labels[i] == c for i in f) for f in folds]
        assert max(per) - min(per) <= 1


def test_small_class_warns():
    with pytest.warns(UserWarning, match="stratification relaxed"):
        stratified_folds([P] * 10 + [N], 5)


def test_grid_tie_break_is_lexicographic():
    pts = expand_grid({"C": [10, 1], "solver": ["newton-cg", "lbfgs"]})
    assert pts[0] == {"C": 1, "solver": "lbfgs"}
    ex = [LabeledExample(t, lab) for t, lab in
          [("good spot", P), ("great lot", P), ("bad spot", G), ("awful lot", G)] * 3]
    best, _ = cross_validate("logistic", {"C": [10, 1]}, ex, k=2, min_df=1,
                             classes=(P, G))
    assert best == {"C": 1}


# --- metrics ---------------------------------------------------------------------------

def test_metrics_perfect_and_constant():
    y = [P, N, G, U] * 5
    rep = evaluate_labels(y, y)
    assert rep.accuracy == 1.0
    assert np.count_nonzero(rep.confusion - np.diag(np.diag(rep.confusion))) == 0
    assert evaluate_labels(y, [P] * 20).accuracy == 0.25


def test_metrics_hand_case():
    true = [P, P, P, N, N, G, G, G, U, U]
    pred = [P, P, G, N, P, G, G, U, U, P]
    rep = evaluate_labels(true, pred)
    assert rep.confusion.tolist() == [[2, 0, 1, 0], [1, 1, 0, 0], [0, 0, 2, 1], [1, 0, 0, 1]]
    assert rep.precision.tolist() == pytest.approx([1 / 2, 1, 2 / 3, 1 / 2])
    assert rep.recall.tolist() == pytest.approx([2 / 3, 1 / 2, 2 / 3, 1 / 2])
    assert rep.f1.tolist() == pytest.approx([4 / 7, 2 / 3, 2 / 3, 1 / 2])
    assert rep.accuracy == pytest.approx(0.6)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(ATTITUDES), st.sampled_from(ATTITUDES)), min_size=1, max_size=40),
       st.randoms(use_true_random=False))
def test_metrics_order_invariant(pairs, rnd):
    rep = evaluate_labels([a for a, _ in pairs], [b for _, b in pairs])
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    rep2 = evaluate_labels([a for a, _ in shuffled], [b for _, b in shuffled])
    assert np.array_equal(rep.f1, rep2.f1)
    assert rep.accuracy == pytest.approx(np.trace(rep.confusion) / rep.confusion.sum())
    for p, r, f in zip(rep.precision, rep.recall, rep.f1):
        assert f == pytest.approx(0 if p + r == 0 else 2 * p * r / (p + r))


def test_evaluate_model_on_examples():
    ex = _labeled()
    model = fit_text_classifier("lexicon", [], [], lexicon=Lexicon({"easy": 1.0}))
    rep = evaluate(model, [e for e in ex if e.split == "test"])
    assert rep.confusion.sum() == 200


# --- agreement -------------------------------------------------------------------------

def test_krippendorff_worked_example(fixtures_dir):
    data = json.loads((fixtures_dir / "krippendorff_nominal.json").read_text())
    hand = data["hand"]
    rep = krippendorff_alpha(data["units"])
    assert rep.n_pairable == hand["pairable_values"]
    assert rep.observed == pytest.approx(float(Fraction(*hand["observed_disagreement"])), abs=1e-12)
    assert rep.expected == pytest.approx(float(Fraction(*hand["expected_disagreement"])), abs=1e-12)
    assert abs(rep.alpha - float(Fraction(*hand["alpha"]))) < 1e-9
    assert round(rep.alpha, 3) == 0.743


def test_krippendorff_perfect_and_degenerate():
    rng = np.random.default_rng(1)
    labels = rng.integers(0, 4, 10).tolist()
    assert krippendorff_alpha([[v, v] for v in labels]).alpha == 1.0
    flat = krippendorff_alpha([["x", "x"]] * 5)
    assert flat.alpha == 1.0 and flat.degenerate


def test_krippendorff_independent_coders():
    rng = np.random.default_rng(20240917)
    units = rng.integers(0, 4, size=(10_000, 2)).tolist()
    assert abs(krippendorff_alpha(units).alpha) < 0.05


def _pairwise_alpha(units):
    """Independent oracle: count pairable value pairs directly."""
    pairs_within, values = Fraction(0), []
    n_pairs_within = Fraction(0)
    for u in units:
        vals = [v for v in u if v is not None]
        m = len(vals)
        if m < 2:
            continue
        values += vals
        dis = sum(a != b for i, a in enumerate(vals) for j, b in enumerate(vals) if i != j)
        pairs_within += Fraction(dis, m - 1)
        n_pairs_within += m
    n = len(values)
    d_o = pairs_within / n_pairs_within
    d_e = Fraction(sum(a != b for i, a in enumerate(values) for j, b in enumerate(values) if i != j),
                   n * (n - 1))
    return None if d_e == 0 else 1 - d_o / d_e


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.one_of(st.none(), st.integers(0, 3)), min_size=3, max_size=3),
                min_size=2, max_size=12))
def test_krippendorff_matches_pair_oracle(units):
    if not any(sum(v is not None for v in u) >= 2 for u in units):
        with pytest.raises(ValueError):
            krippendorff_alpha(units)
        return
    rep = krippendorff_alpha(units)
    want = _pairwise_alpha(units)
    if want is None:
        assert rep.degenerate and rep.alpha == 1.0
    else:
        assert rep.alpha == pytest.approx(float(want), abs=1e-9)
        assert rep.alpha <= 1.0


# --- prediction ------------------------------------------------------------------------

def test_predict_empty_and_lexicon():
    lex = Lexicon({"plenty": 1.0, "free": 1.0, "tight": -1.0})
    model = train_classifier("lexicon", None, [], lexicon=lex)
    assert predict(model, []) == []
    assert predict(model, ["plenty of free parking"]) == [AttitudeLabel.POSITIVE]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(["plenty", "free", "tight", "awful", "lot", "the", "ok"]), max_size=8))
def test_lexicon_sign_rule(words):
    val = {"plenty": 1.0, "free": 0.5, "tight": -1.0, "awful": -2.0, "ok": 0.0}
    got = predict(Lexicon(val), [" ".join(words)])[0]
    matched = [val[w] for w in words if w in val]
    total = sum(matched)
    want = U if not matched else (P if total > 0 else G if total < 0 else N)
    assert got == want


def test_external_sidecar(tmp_path):
    path = tmp_path / "labels.jsonl"
    uids = ["r1:0", "r1:1", "r2:0"]
    write_sidecar(path, uids, [P, "negative", U])
    assert load_sidecar(path).labels == dict(zip(uids, [P, G, U]))
    model = external_model(path)
    assert predict(model, [(u, "") for u in uids]) == [P, G, U]
    with pytest.raises(KeyError, match="r9:0"):
        predict(model, [("r1:0", ""), ("r9:0", "")])


def test_model_kind_parse():
    assert ModelKind.parse("Forest") is ModelKind.FOREST
