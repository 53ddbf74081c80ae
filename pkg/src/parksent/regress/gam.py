"""Gaussian additive model with a spatial interaction smooth and a group ridge.

The model matrix is ``[1 | linear | tensor | group]``:

* linear columns are standardised covariates and are not penalised;
* the tensor block is a product of cubic B-spline bases over latitude and
  longitude, projected so that its columns are orthogonal (over the
  analysis rows) to the intercept and both marginal bases, i.e. it only
  carries the interaction;
* the group block holds one indicator per CBSA with an identity penalty,
  which is the spline form of an i.i.d. random intercept.

Smoothing parameters are chosen by minimising GCV over their logarithms.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import linalg, optimize
from scipy.interpolate import BSpline
from scipy.stats import norm

logger = logging.getLogger(__name__)

DEFAULT_KNOTS = 8
DEGREE = 3
TENSOR = "ti(Lat,Lng)"
GROUP = "s(CBSA)"
LOG_LAMBDA_BOUNDS = (-12.0, 20.0)


def quantile_knots(x: np.ndarray, n_knots: int) -> np.ndarray:
    """``n_knots`` knots at evenly spaced quantiles, boundaries included.

    Duplicate quantiles are merged, so clustered data may get fewer knots.
    """
    if n_knots < 2:
        raise ValueError("need at least 2 knots")
    inner = np.unique(np.quantile(x, np.linspace(0.0, 1.0, n_knots)))
    if inner.size < 2:
        raise ValueError("coordinate has a single distinct value; cannot build a spline basis")
    return inner


def bspline_basis(x: np.ndarray, knots: np.ndarray, degree: int = DEGREE) -> np.ndarray:
    """Dense B-spline design matrix with ``len(knots) + degree - 1`` columns."""
    t = np.concatenate([[knots[0]] * degree, knots, [knots[-1]] * degree])
    xc = np.clip(x, knots[0], knots[-1])
    return BSpline.design_matrix(xc, t, degree).toarray()


def difference_penalty(m: int, order: int = 2) -> np.ndarray:
    d = np.diff(np.eye(m), order, axis=0)
    return d.T @ d


def row_tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise Kronecker product; column ``i*b.shape[1] + j`` is ``a_i * b_j``."""
    return (a[:, :, None] * b[:, None, :]).reshape(a.shape[0], -1)


@dataclass
class SmoothBlock:
    name: str
    columns: slice
    penalties: list[np.ndarray]   # block-sized, already scaled
    penalty_names: list[str]

    @property
    def dim(self) -> int:
        return self.columns.stop - self.columns.start


@dataclass
class DesignMatrix:
    y: np.ndarray
    X: np.ndarray
    labels: list[str]
    n_linear: int                 # linear columns, excluding the intercept
    blocks: list[SmoothBlock]
    groups: list[str] = field(default_factory=list)
    main_effects: np.ndarray | None = None
    means: dict[str, float] = field(default_factory=dict)
    stds: dict[str, float] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def linear_labels(self) -> list[str]:
        return self.labels[1:1 + self.n_linear]

    def block(self, name: str) -> SmoothBlock:
        return next(b for b in self.blocks if b.name == name)


def _scaled(S: np.ndarray, Xb: np.ndarray) -> np.ndarray:
    """Rescale a penalty to the Frobenius norm of the block's Gram matrix."""
    g = np.linalg.norm(Xb.T @ Xb)
    s = np.linalg.norm(S)
    return S * (g / s) if g > 0 and s > 0 else S


def tensor_interaction(lat: np.ndarray, lng: np.ndarray, knots: int = DEFAULT_KNOTS):
    """Interaction basis, its penalties, and the main-effect basis it avoids.

    Returns ``(T, penalties, names, M)`` where ``T @ Z`` has been formed
    already and ``M = [1, B_lat, B_lng]``.
    """
    b1 = bspline_basis(lat, quantile_knots(lat, knots))
    b2 = bspline_basis(lng, quantile_knots(lng, knots))
    m1, m2 = b1.shape[1], b2.shape[1]
    T = row_tensor(b1, b2)
    M = np.column_stack([np.ones(len(lat)), b1, b2])
    _, sv, vt = np.linalg.svd(M.T @ T)
    rank = int((sv > sv[0] * 1e-9).sum()) if sv.size else 0
    Z = vt[rank:].T
    S_full = np.kron(difference_penalty(m1), np.eye(m2)) + np.kron(np.eye(m1), difference_penalty(m2))
    TZ = T @ Z
    S = Z.T @ S_full @ Z
    S = 0.5 * (S + S.T)
    evals, evecs = np.linalg.eigh(S)
    null = evecs[:, evals < evals.max() * 1e-8]
    penalties = [_scaled(S, TZ)]
    names = [TENSOR]
    if null.shape[1]:
        # shrink the unpenalised part too, so a large smoothing parameter removes the whole term
        penalties.append(_scaled(null @ null.T, TZ))
        names.append(TENSOR + ":null")
    return TZ, penalties, names, M


def standardize(values: np.ndarray, label: str) -> tuple[np.ndarray, float, float]:
    mu = float(values.mean())
    sd = float(values.std())
    if not sd > 1e-12 * max(1.0, abs(mu)):
        raise ValueError(f"covariate {label!r} is constant over the analysis rows")
    return (values - mu) / sd, mu, sd


def build_design(y: Sequence[float], covariates: Mapping[str, Sequence[float]], lat=None, lng=None,
                 groups: Sequence[str] | None = None, knots: int = DEFAULT_KNOTS,
                 factors: Mapping[str, Sequence[float]] | None = None) -> DesignMatrix:
    """Assemble the model matrix.

    ``covariates`` are standardised; ``factors`` (for instance category
    shares) enter unscaled. The spatial block needs ``lat`` and ``lng`` and
    the group block needs ``groups``; either may be omitted.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if not np.isfinite(y).all():
        raise ValueError("response must be finite")
    cols, labels, means, stds = [np.ones(n)], ["(Intercept)"], {}, {}
    for name, values in covariates.items():
        v = np.asarray(values, dtype=float)
        if v.shape != (n,) or not np.isfinite(v).all():
            raise ValueError(f"covariate {name!r} must be finite with one value per row")
        z, means[name], stds[name] = standardize(v, name)
        cols.append(z)
        labels.append(name)
    for name, values in (factors or {}).items():
        cols.append(np.asarray(values, dtype=float))
        labels.append(name)
    n_linear = len(cols) - 1
    blocks = []
    main = None
    parts = [np.column_stack(cols)]
    start = parts[0].shape[1]
    if lat is not None and lng is not None:
        TZ, pens, pnames, main = tensor_interaction(np.asarray(lat, float), np.asarray(lng, float), knots)
        parts.append(TZ)
        blocks.append(SmoothBlock(TENSOR, slice(start, start + TZ.shape[1]), pens, pnames))
        labels += [f"{TENSOR}.{i + 1}" for i in range(TZ.shape[1])]
        start += TZ.shape[1]
    group_ids = []
    if groups is not None:
        groups = [str(g) for g in groups]
        group_ids = sorted(set(groups))
        pos = {g: i for i, g in enumerate(group_ids)}
        G = np.zeros((n, len(group_ids)))
        G[np.arange(n), [pos[g] for g in groups]] = 1.0
        parts.append(G)
        blocks.append(SmoothBlock(GROUP, slice(start, start + G.shape[1]), [_scaled(np.eye(G.shape[1]), G)],
                                  [GROUP]))
        labels += [f"{GROUP}.{g}" for g in group_ids]
    return DesignMatrix(y, np.column_stack(parts), labels, n_linear, blocks, group_ids, main, means, stds)


@dataclass(frozen=True)
class LinearTerm:
    label: str
    coefficient: float
    std_error: float
    p_value: float

    @property
    def stars(self) -> str:
        return significance_stars(self.p_value)


def significance_stars(p: float) -> str:
    if not p == p:
        return ""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


@dataclass
class GamFit:
    terms: list[LinearTerm]
    intercept: LinearTerm
    coefficients: np.ndarray
    lambdas: dict[str, float]
    edf: dict[str, float]
    edf_total: float
    r2: float
    r2_adjusted: float
    n: int
    rss: float
    tss: float
    ess: float
    penalty: float     # beta' S_lambda beta
    gcv: float
    converged: bool = True
    fitted: np.ndarray | None = None

    def term(self, label: str) -> LinearTerm:
        return next(t for t in self.terms if t.label == label)


class _Problem:
    """Cached cross-products for repeated penalised solves."""

    def __init__(self, design: DesignMatrix):
        self.d = design
        X, y = design.X, design.y
        self.XtX = X.T @ X
        self.Xty = X.T @ y
        self.yty = float(y @ y)
        self.embedded = []
        p = X.shape[1]
        for b in design.blocks:
            for S in b.penalties:
                E = np.zeros((p, p))
                E[b.columns, b.columns] = S
                self.embedded.append(E)

    def penalty_matrix(self, lambdas) -> np.ndarray:
        S = np.zeros_like(self.XtX)
        for lam, E in zip(lambdas, self.embedded):
            S += lam * E
        return S

    def solve(self, lambdas):
        S = self.penalty_matrix(lambdas)
        A = self.XtX + S
        try:
            cf = linalg.cho_factor(A)
            d = np.abs(np.diag(cf[0]))
            # a tiny pivot means A is singular up to rounding (e.g. an unpenalised group block)
            if d.min() < 1e-7 * d.max():
                raise linalg.LinAlgError("rank deficient")
            beta = linalg.cho_solve(cf, self.Xty)
            Ainv = linalg.cho_solve(cf, np.eye(A.shape[0]))
        except linalg.LinAlgError:
            Ainv = np.linalg.pinv(A, rcond=1e-12, hermitian=True)
            beta = Ainv @ self.Xty
        infl = (Ainv * self.XtX).sum(axis=1)   # diag(A^-1 X'X), X'X symmetric
        resid = self.d.y - self.d.X @ beta
        rss = float(resid @ resid)
        return beta, Ainv, infl, rss, S

    def gcv(self, log_lambdas) -> float:
        _, _, infl, rss, _ = self.solve(np.exp(log_lambdas))
        n = self.d.n
        slack = n - infl.sum()
        if slack < 0.5:
            return math.inf
        return n * rss / slack ** 2


def _select_lambdas(prob: _Problem, max_iter: int) -> tuple[np.ndarray, bool]:
    k = len(prob.embedded)
    lo, hi = LOG_LAMBDA_BOUNDS
    grid = np.arange(-6.0, 16.0, 4.0)
    best, best_val = None, math.inf
    # coarse grid, then a bounded simplex search from the best grid point
    for point in np.array(np.meshgrid(*([grid] * k), indexing="ij")).reshape(k, -1).T:
        val = prob.gcv(point)
        if val < best_val:
            best, best_val = point, val
    res = optimize.minimize(prob.gcv, best, method="Nelder-Mead", bounds=[(lo, hi)] * k,
                            options={"maxiter": max_iter, "xatol": 1e-3, "fatol": 1e-10 * max(best_val, 1e-300)})
    if res.fun <= best_val:
        return np.asarray(res.x), bool(res.success)
    return best, bool(res.success)


def fit_gam(design: DesignMatrix, lambdas: Sequence[float] | None = None, max_iter: int = 400) -> GamFit:
    """Penalised least squares; smoothing parameters by GCV unless given.

    ``lambdas`` lists one value per penalty in block order (see
    ``SmoothBlock.penalty_names``).
    """
    prob = _Problem(design)
    names = [nm for b in design.blocks for nm in b.penalty_names]
    converged = True
    if lambdas is None:
        if names:
            log_lam, converged = _select_lambdas(prob, max_iter)
            lam = np.exp(log_lam)
            if not converged:
                logger.warning("GCV search hit its iteration cap; using the best point found")
        else:
            lam = np.zeros(0)
    else:
        lam = np.asarray(lambdas, dtype=float)
        if lam.size != len(names):
            raise ValueError(f"expected {len(names)} smoothing parameters ({names}), got {lam.size}")
    beta, Ainv, infl, rss, S = prob.solve(lam)
    n = design.n
    edf_total = float(infl.sum())
    y = design.y
    fitted = design.X @ beta
    tss = float(((y - y.mean()) ** 2).sum())
    ess = float(((fitted - y.mean()) ** 2).sum())
    pen = float(beta @ S @ beta)
    resid_df = n - edf_total
    sigma2 = rss / resid_df if resid_df > 0 else math.nan
    se = np.sqrt(np.maximum(np.diag(Ainv) * sigma2, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        pvals = 2.0 * norm.sf(np.abs(beta / se))
    terms = [LinearTerm(design.labels[j], float(beta[j]), float(se[j]), float(pvals[j]))
             for j in range(1, 1 + design.n_linear)]
    intercept = LinearTerm(design.labels[0], float(beta[0]), float(se[0]), float(pvals[0]))
    edf = {b.name: float(infl[b.columns].sum()) for b in design.blocks}
    r2 = 1.0 - rss / tss if tss > 0 else math.nan
    r2_adj = 1.0 - (1.0 - r2) * (n - 1) / resid_df if resid_df > 0 else math.nan
    gcv = n * rss / resid_df ** 2 if resid_df > 0 else math.inf
    return GamFit(terms, intercept, beta, dict(zip(names, lam.tolist())), edf, edf_total, r2, r2_adj, n,
                  rss, tss, ess, pen, gcv, converged, fitted)


def ols(y, X) -> np.ndarray:
    """Least-squares coefficients of ``y`` on ``[1, X]``."""
    y = np.asarray(y, dtype=float)
    A = np.column_stack([np.ones(len(y)), np.asarray(X, dtype=float).reshape(len(y), -1)])
    return np.linalg.lstsq(A, y, rcond=None)[0]
