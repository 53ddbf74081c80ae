"""Pearson correlations within and between CBSAs, and cohort comparisons."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from ..sentiment import wilcoxon_ranksum

SIGNIFICANCE_DISPLAY = 0.001


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Pearson r with a two-sided t-test p-value on ``n - 2`` degrees of freedom."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d and of equal length")
    n = x.size
    if n < 3:
        raise ValueError(f"need at least 3 pairs, got {n}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = dx @ dx, dy @ dy
    if sxx <= 1e-300 or syy <= 1e-300:
        raise ValueError("constant input: correlation is undefined")
    r = float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, float(2.0 * stats.t.sf(abs(t), n - 2))


@dataclass(frozen=True)
class GroupCorrelation:
    group: str
    n: int
    r: float
    p_value: float


@dataclass
class FactorCorrelation:
    factor: str
    r: float
    p_value: float
    n: int
    groups: list[GroupCorrelation] = field(default_factory=list)
    mean_r: float = float("nan")
    median_r: float = float("nan")
    fraction_significant: float = float("nan")


@dataclass
class CorrelationReport:
    scope: str
    factors: list[FactorCorrelation]
    skipped_groups: list[str] = field(default_factory=list)
    segment: str | None = None

    @property
    def n_skipped(self) -> int:
        return len(self.skipped_groups)

    def by_factor(self) -> dict[str, FactorCorrelation]:
        return {f.factor: f for f in self.factors}


def _safe_pearson(x, y):
    try:
        return pearson(x, y)
    except ValueError:
        return float("nan"), float("nan")


def within_cbsa_correlations(response: Sequence[float], groups: Sequence[str],
                             factors: Mapping[str, Sequence[float]], min_cbgs: int = 10) -> CorrelationReport:
    """Per-CBSA correlations of each factor with the response.

    Each factor gets three summaries: mean and median of the per-CBSA r,
    and a pooled r computed after centring both variables within CBSA.
    ``fraction_significant`` is the share of CBSAs with ``p < 0.001``.
    """
    y = np.asarray(response, dtype=float)
    groups = [str(g) for g in groups]
    members: dict[str, list[int]] = defaultdict(list)
    for i, g in enumerate(groups):
        members[g].append(i)
    kept = {g: np.array(ix) for g, ix in sorted(members.items()) if len(ix) >= min_cbgs}
    skipped = sorted(g for g in members if g not in kept)
    out = []
    for name, values in factors.items():
        x = np.asarray(values, dtype=float)
        per = []
        for g, ix in kept.items():
            r, p = _safe_pearson(x[ix], y[ix])
            if not math.isnan(r):
                per.append(GroupCorrelation(g, len(ix), r, p))
        if kept:
            rows = np.concatenate(list(kept.values()))
            xc = np.concatenate([x[ix] - x[ix].mean() for ix in kept.values()])
            yc = np.concatenate([y[ix] - y[ix].mean() for ix in kept.values()])
            r_pool, p_pool = _safe_pearson(xc, yc)
            n_pool = rows.size
        else:
            r_pool, p_pool, n_pool = float("nan"), float("nan"), 0
        rs = np.array([g.r for g in per])
        fc = FactorCorrelation(name, r_pool, p_pool, n_pool, per)
        if per:
            fc.mean_r = float(rs.mean())
            fc.median_r = float(np.median(rs))
            fc.fraction_significant = sum(g.p_value < SIGNIFICANCE_DISPLAY for g in per) / len(per)
        out.append(fc)
    return CorrelationReport("within_cbsa", out, skipped)


def between_cbsa_correlations(response: Mapping[str, float], factors: Mapping[str, Mapping[str, float]],
                              by_poi_type: Mapping[str, Mapping[str, float]] | None = None):
    """Correlate CBSA-level sentiment with CBSA-level factors.

    ``response`` maps CBSA to sentiment and each factor maps CBSA to a
    value; only CBSAs present in both enter a given correlation. With
    ``by_poi_type`` (category -> CBSA -> sentiment) a dict of reports keyed
    by category is returned alongside the overall report.
    """
    def one(resp: Mapping[str, float], segment: str | None) -> CorrelationReport:
        out = []
        for name, fac in factors.items():
            ids = sorted(set(resp) & set(fac))
            if len(ids) < 3:
                out.append(FactorCorrelation(name, float("nan"), float("nan"), len(ids)))
                continue
            r, p = _safe_pearson([fac[i] for i in ids], [resp[i] for i in ids])
            out.append(FactorCorrelation(name, r, p, len(ids)))
        return CorrelationReport("between_cbsa", out, segment=segment)

    overall = one(response, None)
    if by_poi_type is None:
        return overall
    return overall, {cat: one(resp, cat) for cat, resp in by_poi_type.items()}


@dataclass(frozen=True)
class CohortDifference:
    variable: str
    mean_with: float
    mean_without: float
    difference: float
    absolute: bool
    p_value: float


def cohort_difference(covariates: Mapping[str, Sequence[float]], has_reviews: Sequence[bool]) -> list[CohortDifference]:
    """Relative difference of cohort means, ``(with - without) / without``.

    A zero ``without`` mean switches that variable to the absolute
    difference and sets ``absolute``. Missing values (NaN) are ignored per
    variable.
    """
    flag = np.asarray(has_reviews, dtype=bool)
    if flag.all() or not flag.any():
        raise ValueError("both cohorts (with and without reviews) must be non-empty")
    out = []
    for name, values in covariates.items():
        v = np.asarray(values, dtype=float)
        a, b = v[flag], v[~flag]
        a, b = a[np.isfinite(a)], b[np.isfinite(b)]
        if a.size == 0 or b.size == 0:
            raise ValueError(f"{name}: a cohort has no observed values")
        ma, mb = float(a.mean()), float(b.mean())
        absolute = mb == 0.0
        diff = ma - mb if absolute else (ma - mb) / mb
        p = wilcoxon_ranksum(a, b).p_value
        out.append(CohortDifference(name, ma, mb, diff, absolute, p))
    return out
