import itertools
import math
from collections import defaultdict
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parksent.classify import ATTITUDES, predict
from parksent.classify.models import load_lexicon
from parksent.config import bundled
from parksent.corpus import Corpus
from parksent.sentiment import (
    RegionSentiment, ScoredSentence, aggregate_poi, aggregate_region, pairwise_wilcoxon, rank_regions,
    score_labels, score_sentences, wilcoxon_ranksum,
)
from parksent.textfilter import extract_parking_sentences

P, N, G, U = ATTITUDES


class _Assign:
    def __init__(self, cbg, cbsa):
        self.cbg_id, self.cbsa_id = cbg, cbsa


def _scored(poi, scores):
    lab = {1.0: P, 0.0: N, -1.0: G}
    return [ScoredSentence(poi, f"{poi}:{i}", lab[s], s) for i, s in enumerate(scores)]


# --- scoring ---------------------------------------------------------------------------

def test_score_examples():
    assert score_labels([P, G]) == [1.0, -1.0]
    assert [s for s in score_labels([U]) if s is not None] == []
    mixed = score_labels(["positive", "neutral", "negative", "positive", "unrelated"])
    included = [s for s in mixed if s is not None]
    assert sum(included) / len(included) == pytest.approx((1 + 0 - 1 + 1) / 4)
    assert score_labels([N], neutral="exclude") == [None]


# --- POI aggregation -------------------------------------------------------------------

def test_poi_mean_and_threshold():
    res = aggregate_poi(_scored("a", [1, 1, -1]) + _scored("b", [1] * 9), min_count=1)
    assert res[0].weighted_sentiment == pytest.approx(1 / 3)
    res10 = aggregate_poi(_scored("b", [1.0] * 9), min_count=10)
    assert res10[0].excluded and res10[0].n_parking_sentences == 9


def _bundled_scored():
    corpus = Corpus.load(*(bundled(f) for f in ("reviews.jsonl", "pois.csv", "regions.csv", "covariates.csv")))
    poi_of = {r.review_id: r.poi_id for r in corpus.reviews}
    mentions = extract_parking_sentences(corpus.reviews)
    labels = predict(load_lexicon(bundled("lexicon.csv")), [m.sentence.text for m in mentions])
    records = [(poi_of[m.sentence.review_id], m.sentence.uid, lab) for m, lab in zip(mentions, labels)]
    return corpus, records


def test_bundled_poi_means_match_recount():
    corpus, records = _bundled_scored()
    sums, counts = defaultdict(int), defaultdict(int)
    for poi, _, lab in records:
        v = {"positive": 1, "neutral": 0, "negative": -1}.get(str(lab))
        if v is not None:
            sums[poi] += v
            counts[poi] += 1
    got = aggregate_poi(score_sentences(records), min_count=3)
    assert [p.poi_id for p in got] == sorted(counts)
    for p in got:
        assert p.n_parking_sentences == counts[p.poi_id]
        if counts[p.poi_id] >= 3:
            assert p.weighted_sentiment == pytest.approx(sums[p.poi_id] / counts[p.poi_id], abs=1e-15)
        else:
            assert p.excluded


def test_bundled_cbsa_means_match_recount():
    corpus, records = _bundled_scored()
    scored = score_sentences(records)
    sums, counts = defaultdict(Fraction), defaultdict(int)
    for s in scored:
        a = corpus.assignments.get(s.poi_id)
        if a is not None and s.score is not None:
            sums[a.cbsa_id] += Fraction(s.score)
            counts[a.cbsa_id] += 1
    agg = aggregate_region(scored, corpus.assignments, level="cbsa", min_reviews=10)
    assert len(agg.regions) + agg.n_excluded == len(counts) == 3
    for r in agg.regions:
        assert r.n_reviews == counts[r.region_id]
        assert r.mean_sentiment == pytest.approx(float(sums[r.region_id] / counts[r.region_id]), abs=1e-15)
    ordered = sorted(counts, key=lambda c: (-sums[c] / counts[c], c))
    top, bottom = rank_regions(agg.regions, k=3)
    assert [r.region_id for r in top] == ordered
    assert [r.region_id for r in bottom] == sorted(counts, key=lambda c: (sums[c] / counts[c], c))


# --- region aggregation ----------------------------------------------------------------

def test_region_symmetric_and_threshold():
    assign = {"p1": _Assign("g1", "X"), "p2": _Assign("g2", "X")}
    scored = _scored("p1", [1.0, 0.0, -1.0] * 10) + _scored("p2", [1.0] * 9)
    agg = aggregate_region(scored, assign, level="cbg")
    assert agg.by_id()["g1"].mean_sentiment == 0.0
    assert agg.excluded == ["g2"]
    cbsa = aggregate_region(scored, assign, level="cbsa")
    assert cbsa.regions[0].n_reviews == 39 and cbsa.regions[0].n_cbgs == 2


def test_region_pooled_vs_poi_mean():
    assign = {"p1": _Assign("g", "X"), "p2": _Assign("g", "X")}
    scored = _scored("p1", [1.0] * 9) + _scored("p2", [-1.0] * 3)
    pooled = aggregate_region(scored, assign, min_reviews=1).regions[0].mean_sentiment
    poi_mean = aggregate_region(scored, assign, min_reviews=1, method="poi-mean").regions[0].mean_sentiment
    assert pooled == pytest.approx(6 / 12)
    assert poi_mean == 0.0


_records = st.lists(st.tuples(st.sampled_from(["p1", "p2", "p3", "p4"]), st.sampled_from(ATTITUDES)),
                    min_size=1, max_size=60)
_ASSIGN = {"p1": _Assign("g1", "X"), "p2": _Assign("g1", "X"), "p3": _Assign("g2", "Y"), "p4": _Assign("g3", "Y")}


@settings(max_examples=80, deadline=None)
@given(_records, st.randoms(use_true_random=False), st.integers(0, 5))
def test_aggregation_invariants(recs, rnd, min_reviews):
    scored = score_sentences((p, f"u{i}", lab) for i, (p, lab) in enumerate(recs))
    shuffled = list(scored)
    rnd.shuffle(shuffled)
    for level in ("cbg", "cbsa"):
        base = aggregate_region(scored, _ASSIGN, level, min_reviews)
        assert aggregate_region(shuffled, _ASSIGN, level, min_reviews) == base
        extra = scored + [ScoredSentence("p1", "extra", U, None)]
        assert aggregate_region(extra, _ASSIGN, level, min_reviews) == base
        for r in base.regions:
            vals = [s.score for s in scored if s.score is not None and
                    (_ASSIGN[s.poi_id].cbg_id if level == "cbg" else _ASSIGN[s.poi_id].cbsa_id) == r.region_id]
            assert min(vals) - 1e-12 <= r.mean_sentiment <= max(vals) + 1e-12
    assert aggregate_poi(shuffled, 1) == aggregate_poi(scored, 1)


# --- ranking ---------------------------------------------------------------------------

def test_rank_examples():
    regs = [RegionSentiment("a", "cbsa", 10, 0.2, n_cbgs=60), RegionSentiment("b", "cbsa", 10, -0.4, n_cbgs=60),
            RegionSentiment("c", "cbsa", 10, 0.9, n_cbgs=49)]
    top, bottom = rank_regions(regs, k=1)
    assert top[0].region_id == "c" and bottom[0].region_id == "b"
    top, _ = rank_regions(regs, k=1, min_cbgs=50)
    assert top[0].region_id == "a"
    tied = [RegionSentiment(r, "cbsa", 10, 0.0) for r in "zyx"]
    assert [r.region_id for r in rank_regions(tied, k=3)[0]] == ["x", "y", "z"]


# --- Wilcoxon --------------------------------------------------------------------------

def _brute_force(a, b):
    """Two-sided p by listing every split of the pooled sample."""
    pooled = list(a) + list(b)
    n_a = len(a)
    nab = len(a) * len(b)

    def u_of(idx):
        xs = [pooled[i] for i in idx]
        ys = [pooled[i] for i in range(len(pooled)) if i not in idx]
        return sum(Fraction(int(x > y)) + Fraction(int(x == y), 2) for x in xs for y in ys)

    u_obs = u_of(tuple(range(n_a)))
    dev = abs(2 * u_obs - nab)
    splits = list(itertools.combinations(range(len(pooled)), n_a))
    hits = sum(abs(2 * u_of(s) - nab) >= dev for s in splits)
    return float(u_obs), Fraction(hits, len(splits))


def test_wilcoxon_hand_example():
    res = wilcoxon_ranksum([1, 2, 3], [4, 5, 6])
    assert res.u == 0 and res.method == "exact"
    assert res.p_value == pytest.approx(0.1, abs=1e-15)
    assert res.u + res.u_prime == 9


def test_wilcoxon_identical_samples():
    assert wilcoxon_ranksum([1, 2, 3, 4], [1, 2, 3, 4], method="exact").p_value == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        wilcoxon_ranksum([], [1.0])


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=1, max_size=6), st.lists(st.integers(-3, 3), min_size=1, max_size=6))
def test_wilcoxon_exact_matches_enumeration(a, b):
    u, p = _brute_force(a, b)
    res = wilcoxon_ranksum(a, b, method="exact")
    assert res.u == u
    assert res.p_value == pytest.approx(float(p), abs=1e-12)
    assert 0 < res.p_value <= 1


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=15),
       st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=15), st.sampled_from(["auto", "normal"]))
def test_wilcoxon_swap_symmetry(a, b, method):
    ab, ba = wilcoxon_ranksum(a, b, method), wilcoxon_ranksum(b, a, method)
    assert ba.u == pytest.approx(ab.u_prime)
    assert ab.u + ab.u_prime == len(a) * len(b)
    assert ba.p_value == pytest.approx(ab.p_value, abs=1e-12)


def test_wilcoxon_exact_vs_normal_eight_by_eight():
    rng = np.random.default_rng(20240917)
    worst = 0.0
    for _ in range(50):
        a, b = rng.normal(size=8), rng.normal(0.7, size=8)
        ex, nm = wilcoxon_ranksum(a, b, "exact"), wilcoxon_ranksum(a, b, "normal")
        assert ex.method == "exact" and nm.method == "normal"
        worst = max(worst, abs(ex.p_value - nm.p_value))
    assert worst < 0.02


def test_wilcoxon_auto_switch():
    assert wilcoxon_ranksum(range(8), range(10, 18)).method == "exact"
    assert wilcoxon_ranksum(range(9), range(10, 18)).method == "normal"
    assert wilcoxon_ranksum([1, 1, 2], [3, 4]).method == "normal"


def test_wilcoxon_normal_large_sample_reference():
    # hand-computed: U=0, n=10+10, var = 100*21/12 = 175, z = (50-0.5)/sqrt(175)
    res = wilcoxon_ranksum(range(10), range(10, 20), "normal")
    z = 49.5 / math.sqrt(175)
    assert res.p_value == pytest.approx(math.erfc(z / math.sqrt(2)), rel=1e-12)


def test_pairwise_matrix():
    m = pairwise_wilcoxon({"A": [1, 2, 3], "B": [4, 5, 6], "C": [], "D": [1, 2, 3]})
    assert m.groups == ["A", "B", "D"]
    assert m.p_values[0, 1] == m.p_values[1, 0] == pytest.approx(0.1)
    assert np.all(np.diag(m.p_values) == 1.0)
    assert set(m.results) == {("A", "B"), ("A", "D"), ("B", "D")}
