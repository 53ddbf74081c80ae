"""Spatial weights, global Moran's I and local (LISA) clusters."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import kernels

EARTH_RADIUS_KM = 6371.0088
DEFAULT_K = 8
DEFAULT_PERMUTATIONS = 999
CLUSTERS = ("HH", "LL", "HL", "LH", "NotSignificant")


class ConstantSurfaceError(ValueError):
    pass


@dataclass(frozen=True)
class SpatialWeights:
    """Row-standardised weights in CSR layout over ``ids``."""

    ids: tuple[str, ...]
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def cardinalities(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def islands(self) -> list[str]:
        return [self.ids[i] for i in np.nonzero(self.cardinalities == 0)[0]]

    @property
    def s0(self) -> float:
        return float(self.weights.sum())

    def neighbors(self, i: int) -> list[int]:
        return self.indices[self.indptr[i]:self.indptr[i + 1]].tolist()

    def lag(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n)
        for i in range(self.n):
            s, e = self.indptr[i], self.indptr[i + 1]
            out[i] = self.weights[s:e] @ values[self.indices[s:e]]
        return out

    def to_dense(self) -> np.ndarray:
        w = np.zeros((self.n, self.n))
        for i in range(self.n):
            w[i, self.neighbors(i)] = self.weights[self.indptr[i]:self.indptr[i + 1]]
        return w


def _from_neighbor_lists(ids: Sequence[str], nbrs: Sequence[Sequence[int]]) -> SpatialWeights:
    indptr = np.zeros(len(ids) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(x) for x in nbrs])
    indices = np.array([j for row in nbrs for j in row], dtype=np.int64)
    weights = np.concatenate([np.full(len(row), 1.0 / len(row)) for row in nbrs if row] or [np.zeros(0)])
    return SpatialWeights(tuple(ids), indptr, indices, weights)


def haversine_km(lat1, lng1, lat2, lng2):
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dphi = p2 - p1
    dlmb = np.radians(np.asarray(lng2) - np.asarray(lng1))
    h = np.sin(dphi / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def _unit_vectors(lat, lng):
    phi, lmb = np.radians(lat), np.radians(lng)
    return np.column_stack([np.cos(phi) * np.cos(lmb), np.cos(phi) * np.sin(lmb), np.sin(phi)])


def build_knn_weights(ids: Sequence[str], lat: Sequence[float], lng: Sequence[float],
                      k: int = DEFAULT_K) -> SpatialWeights:
    """``k`` nearest neighbours by great-circle distance.

    Candidates are gathered from a KD-tree on unit vectors (chord length is
    monotone in arc length) and then ranked by ``(haversine, region id)`` so
    ties break deterministically.
    """
    ids = [str(x) for x in ids]
    lat = np.asarray(lat, dtype=float)
    lng = np.asarray(lng, dtype=float)
    n = len(ids)
    if not (len(lat) == len(lng) == n):
        raise ValueError("ids, lat and lng must have equal length")
    if len(set(ids)) != n:
        raise ValueError("region ids must be unique")
    if k < 1 or n <= k:
        raise ValueError(f"need n > k >= 1, got n={n}, k={k}")
    if not (np.isfinite(lat).all() and np.isfinite(lng).all()):
        raise ValueError("centroids must be finite")
    xyz = _unit_vectors(lat, lng)
    tree = cKDTree(xyz)
    nbrs = []
    for i in range(n):
        # widen the query until a strictly farther point shows every tie at the k-th distance was fetched
        m = min(n, k + 2)
        while True:
            chord, cand = tree.query(xyz[i], k=m)
            others = chord[cand != i]
            if m == n or others[-1] > others[k - 1] + 1e-12:
                break
            m = min(n, 2 * m)
        cand = [int(j) for j in cand if j != i]
        d = haversine_km(lat[i], lng[i], lat[cand], lng[cand])
        ranked = sorted(zip(d.tolist(), [ids[j] for j in cand], cand))
        nbrs.append(sorted(j for _, _, j in ranked[:k]))
    return _from_neighbor_lists(ids, nbrs)


def build_adjacency_weights(edges: Iterable[tuple[str, str]], ids: Sequence[str]) -> SpatialWeights:
    """Symmetric contiguity weights from an edge list; unlisted regions are islands."""
    ids = [str(x) for x in ids]
    pos = {r: i for i, r in enumerate(ids)}
    sets: list[set[int]] = [set() for _ in ids]
    for a, b in edges:
        for r in (a, b):
            if r not in pos:
                raise ValueError(f"adjacency edge names unknown region {r!r}")
        i, j = pos[a], pos[b]
        if i != j:
            sets[i].add(j)
            sets[j].add(i)
    return _from_neighbor_lists(ids, [sorted(s) for s in sets])


def read_adjacency(path: str | Path) -> list[tuple[str, str]]:
    """Two-column CSV edge list; a header row naming non-data columns is skipped."""
    edges = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].startswith("#"):
                continue
            if len(row) < 2:
                raise ValueError(f"{path}:{lineno}: expected two region ids")
            if lineno == 1 and row[0].strip().lower() in ("source", "from", "region_a", "a", "id1"):
                continue
            edges.append((row[0].strip(), row[1].strip()))
    return edges


@dataclass(frozen=True)
class MoranResult:
    I: float
    expected_I: float
    p_value: float
    n_permutations: int
    n: int
    n_islands: int = 0


def _centered(values, weights: SpatialWeights) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.shape != (weights.n,):
        raise ValueError(f"expected {weights.n} values, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise ValueError("values must be finite")
    z = v - v.mean()
    if np.max(np.abs(z), initial=0.0) <= 1e-12 * max(1.0, np.max(np.abs(v))):
        raise ConstantSurfaceError("constant surface: values have zero variance")
    return z


def _moran_stat(z: np.ndarray, lag: np.ndarray, n: int, s0: float) -> float:
    return float((n / s0) * (z @ lag) / (z @ z))


def morans_i(values, weights: SpatialWeights, n_permutations: int = DEFAULT_PERMUTATIONS,
             seed: int = 0) -> MoranResult:
    """Global Moran's I with a two-sided permutation pseudo p-value."""
    z = _centered(values, weights)
    n = weights.n
    s0 = weights.s0
    if s0 == 0:
        raise ValueError("weights have no links")
    observed = _moran_stat(z, weights.lag(z), n, s0)
    expected = -1.0 / (n - 1)
    p = float("nan")
    if n_permutations > 0:
        w = weights.to_dense() if n <= 2000 else None
        rng = np.random.default_rng(seed)
        extreme = 0
        for _ in range(n_permutations):
            zp = rng.permutation(z)
            lag = w @ zp if w is not None else weights.lag(zp)
            if abs(_moran_stat(zp, lag, n, s0) - expected) >= abs(observed - expected) - 1e-12:
                extreme += 1
        p = (extreme + 1) / (n_permutations + 1)
    return MoranResult(observed, expected, p, int(n_permutations), n, len(weights.islands))


@dataclass(frozen=True)
class LisaResult:
    region_id: str
    value: float
    local_i: float
    cluster: str
    p_value: float
    quadrant: str


def _permutation_draws(n: int, k_max: int, n_permutations: int, seed: int) -> np.ndarray:
    """Row ``p`` is an ordered sample without replacement from ``0..n-2``."""
    rng = np.random.default_rng(seed)
    draws = np.empty((n_permutations, k_max), dtype=np.int64)
    for p in range(n_permutations):
        draws[p] = rng.choice(n - 1, size=k_max, replace=False)
    return draws


def lisa(values, weights: SpatialWeights, n_permutations: int = DEFAULT_PERMUTATIONS,
         alpha: float = 0.05, seed: int = 0) -> list[LisaResult]:
    """Local Moran statistics with conditional-permutation pseudo p-values.

    Region ``i`` keeps its value while neighbour values are drawn from the
    other ``n - 1`` regions; one shared draw table serves every region. The
    pseudo p-value is folded, ``(min(larger, P - larger) + 1) / (P + 1)``.
    """
    z = np.ascontiguousarray(_centered(values, weights))
    v = np.asarray(values, dtype=float)
    n = weights.n
    m2 = (z @ z) / n
    card = weights.cardinalities
    k_max = int(card.max(initial=0))
    if n_permutations > 0 and k_max > 0:
        draws = _permutation_draws(n, k_max, n_permutations, seed)
        lags, larger = kernels.lisa_perm_counts(
            z, np.ascontiguousarray(weights.indptr, dtype=np.int64),
            np.ascontiguousarray(weights.indices, dtype=np.int64),
            np.ascontiguousarray(weights.weights, dtype=np.float64), draws)
        larger = np.asarray(larger)
        folded = np.minimum(larger, n_permutations - larger)
        pvals = (folded + 1) / (n_permutations + 1)
    else:
        lags = weights.lag(z)
        pvals = np.full(n, np.nan)
    lags = np.asarray(lags)
    local = z * lags / m2
    out = []
    for i in range(n):
        hi, lag_hi = z[i] > 0, lags[i] > 0
        quadrant = ("H" if hi else "L") + ("H" if lag_hi else "L")
        p = float(pvals[i])
        if card[i] == 0 or z[i] == 0.0:
            # every permutation ties the observed statistic, so nothing is extreme
            p = 1.0
        significant = card[i] > 0 and lags[i] != 0.0 and p < alpha
        out.append(LisaResult(weights.ids[i], float(v[i]), float(local[i]),
                              quadrant if significant else "NotSignificant", p, quadrant))
    return out
