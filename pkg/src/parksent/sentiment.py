"""Numeric sentiment, POI and region aggregation, rank-sum comparisons."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import comb
from scipy.stats import norm, rankdata

from . import kernels
from .classify.labels import AttitudeLabel

SCORE_MAP = {
    AttitudeLabel.POSITIVE: 1.0,
    AttitudeLabel.NEUTRAL: 0.0,
    AttitudeLabel.NEGATIVE: -1.0,
    AttitudeLabel.UNRELATED: None,
}
DEFAULT_MIN_COUNT = 10
EXACT_AUTO_MAX_N = 16
EXACT_MAX_N = 60


def score_labels(labels: Iterable, neutral: str = "zero") -> list[float | None]:
    """Map labels to +1/0/-1; ``None`` marks an excluded (unrelated) label.

    With ``neutral="exclude"`` neutral labels are excluded as well.
    """
    if neutral not in ("zero", "exclude"):
        raise ValueError(f"neutral must be 'zero' or 'exclude', got {neutral!r}")
    out = []
    for lab in labels:
        lab = AttitudeLabel.parse(lab)
        if neutral == "exclude" and lab is AttitudeLabel.NEUTRAL:
            out.append(None)
        else:
            out.append(SCORE_MAP[lab])
    return out


@dataclass(frozen=True)
class ScoredSentence:
    poi_id: str
    sentence_uid: str
    label: AttitudeLabel
    score: float | None


def score_sentences(records: Iterable[tuple[str, str, object]], neutral: str = "zero") -> list[ScoredSentence]:
    """``records`` holds ``(poi_id, sentence_uid, label)`` triples."""
    records = list(records)
    scores = score_labels((r[2] for r in records), neutral)
    return [ScoredSentence(p, u, AttitudeLabel.parse(lab), s) for (p, u, lab), s in zip(records, scores)]


@dataclass(frozen=True)
class PoiSentiment:
    poi_id: str
    category: str
    n_parking_sentences: int
    weighted_sentiment: float | None

    @property
    def excluded(self) -> bool:
        return self.weighted_sentiment is None


def _scores_by(scored: Iterable[ScoredSentence], key) -> dict[str, list[float]]:
    groups: dict[str, list[float]] = defaultdict(list)
    for s in scored:
        if s.score is not None:
            groups[key(s)].append(s.score)
    return groups


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def aggregate_poi(scored: Iterable[ScoredSentence], min_count: int = DEFAULT_MIN_COUNT,
                  categories: Mapping[str, object] | None = None) -> list[PoiSentiment]:
    """Per-POI mean of included scores, sorted by POI id.

    POIs below ``min_count`` come back with ``weighted_sentiment=None``.
    """
    categories = categories or {}
    out = []
    for poi_id, vals in sorted(_scores_by(scored, lambda s: s.poi_id).items()):
        cat = categories.get(poi_id, "")
        cat = getattr(cat, "value", cat)
        mean = _mean(vals) if len(vals) >= min_count else None
        out.append(PoiSentiment(poi_id, str(cat), len(vals), mean))
    return out


@dataclass(frozen=True)
class RegionSentiment:
    region_id: str
    level: str
    n_reviews: int
    mean_sentiment: float
    n_pois: int = 0
    n_cbgs: int = 0


@dataclass
class RegionAggregation:
    level: str
    regions: list[RegionSentiment]
    excluded: list[str] = field(default_factory=list)

    @property
    def n_excluded(self) -> int:
        return len(self.excluded)

    def by_id(self) -> dict[str, RegionSentiment]:
        return {r.region_id: r for r in self.regions}


LEVELS = ("cbg", "cbsa")


def aggregate_region(scored: Iterable[ScoredSentence], assignments: Mapping, level: str = "cbg",
                     min_reviews: int = DEFAULT_MIN_COUNT, method: str = "pooled") -> RegionAggregation:
    """Region means over included sentence scores.

    ``assignments`` maps POI id to an object with ``cbg_id`` and ``cbsa_id``.
    ``method="pooled"`` averages all sentence scores in the region;
    ``"poi-mean"`` averages per-POI means instead. Sentences of POIs
    without an assignment are skipped.
    """
    level = level.lower()
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}, got {level!r}")
    if method not in ("pooled", "poi-mean"):
        raise ValueError(f"method must be 'pooled' or 'poi-mean', got {method!r}")
    per_poi = _scores_by((s for s in scored if s.poi_id in assignments), lambda s: s.poi_id)
    members: dict[str, list[str]] = defaultdict(list)
    for poi_id in sorted(per_poi):
        a = assignments[poi_id]
        members[a.cbg_id if level == "cbg" else a.cbsa_id].append(poi_id)
    kept, excluded = [], []
    for region, pois in sorted(members.items()):
        n = sum(len(per_poi[p]) for p in pois)
        if n < min_reviews:
            excluded.append(region)
            continue
        if method == "pooled":
            mean = _mean([v for p in pois for v in per_poi[p]])
        else:
            mean = _mean([_mean(per_poi[p]) for p in pois])
        n_cbgs = len({assignments[p].cbg_id for p in pois})
        kept.append(RegionSentiment(region, level, n, mean, len(pois), n_cbgs))
    return RegionAggregation(level, kept, excluded)


def rank_regions(regions: Iterable[RegionSentiment], k: int = 10, min_cbgs: int = 0):
    """Top-``k`` and bottom-``k`` regions by mean sentiment.

    Regions with fewer than ``min_cbgs`` block groups are dropped first; ties
    are broken by region id.
    """
    pool = [r for r in regions if r.n_cbgs >= min_cbgs]
    top = sorted(pool, key=lambda r: (-r.mean_sentiment, r.region_id))[:k]
    bottom = sorted(pool, key=lambda r: (r.mean_sentiment, r.region_id))[:k]
    return top, bottom


# --- Wilcoxon rank-sum ---------------------------------------------------------


@dataclass(frozen=True)
class WilcoxonResult:
    group_a: str
    group_b: str
    n_a: int
    n_b: int
    u: float
    p_value: float
    method: str

    @property
    def u_prime(self) -> float:
        return self.n_a * self.n_b - self.u


def _tied_null_counts(doubled_ranks: np.ndarray, n_a: int) -> np.ndarray:
    """Count subsets of size ``n_a`` by their sum of doubled mid-ranks."""
    total = int(doubled_ranks.sum())
    counts = np.zeros((n_a + 1, total + 1), dtype=np.int64)
    counts[0, 0] = 1
    for r in doubled_ranks.astype(np.int64):
        counts[1:, r:] += counts[:-1, :total + 1 - r].copy()
    return counts[n_a]


def wilcoxon_ranksum(sample_a: Sequence[float], sample_b: Sequence[float], method: str = "auto",
                     group_a: str = "a", group_b: str = "b") -> WilcoxonResult:
    """Two-sided Wilcoxon rank-sum (Mann-Whitney U) test.

    ``U`` counts pairs with ``a > b`` plus half the ties. ``method="auto"``
    enumerates the exact null when ``n_a + n_b <= 16`` and no value is tied,
    otherwise it uses the normal approximation with tie and continuity
    corrections. ``method="exact"`` also handles ties by enumerating the
    mid-rank null.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("samples must be finite")
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"method must be auto, exact or normal, got {method!r}")
    n_a, n_b = a.size, b.size
    n = n_a + n_b
    pooled = np.concatenate([a, b])
    ranks = rankdata(pooled)
    doubled = np.rint(2 * ranks).astype(np.int64)
    # doubled U keeps everything integral: 2U = sum(2 r_a) - n_a (n_a + 1)
    u2 = int(doubled[:n_a].sum()) - n_a * (n_a + 1)
    u = u2 / 2
    has_ties = np.unique(pooled).size < n
    if method == "auto":
        method = "exact" if n <= EXACT_AUTO_MAX_N and not has_ties else "normal"
    if method == "exact":
        if n > EXACT_MAX_N:
            raise ValueError(f"exact method supports n_a + n_b <= {EXACT_MAX_N}")
        mu2 = n_a * n_b
        if has_ties:
            counts = _tied_null_counts(doubled, n_a)
            support = np.arange(counts.size) - n_a * (n_a + 1)
        else:
            counts = np.asarray(kernels.mwu_null_counts(n_a, n_b), dtype=np.int64)
            support = 2 * np.arange(counts.size)
        extreme = np.abs(support - mu2) >= abs(u2 - mu2)
        total = int(comb(n, n_a, exact=True))
        p = int(counts[extreme].sum()) / total
    else:
        _, tie_sizes = np.unique(pooled, return_counts=True)
        tie_term = float((tie_sizes ** 3 - tie_sizes).sum()) / (n * (n - 1))
        var = n_a * n_b / 12.0 * ((n + 1) - tie_term)
        dev = max(abs(u - n_a * n_b / 2.0) - 0.5, 0.0)
        p = 1.0 if var <= 0 else min(1.0, 2.0 * float(norm.sf(dev / math.sqrt(var))))
    return WilcoxonResult(str(group_a), str(group_b), n_a, n_b, u, p, method)


@dataclass
class WilcoxonMatrix:
    groups: list[str]
    p_values: np.ndarray
    results: dict[tuple[str, str], WilcoxonResult]


def pairwise_wilcoxon(samples: Mapping[str, Sequence[float]], method: str = "auto") -> WilcoxonMatrix:
    """All pairwise rank-sum tests; groups with no values are skipped."""
    groups = [g for g, v in samples.items() if len(v) > 0]
    k = len(groups)
    p = np.ones((k, k))
    results = {}
    for i in range(k):
        for j in range(i + 1, k):
            res = wilcoxon_ranksum(samples[groups[i]], samples[groups[j]], method, groups[i], groups[j])
            results[(groups[i], groups[j])] = res
            p[i, j] = p[j, i] = res.p_value
    return WilcoxonMatrix(groups, p, results)
