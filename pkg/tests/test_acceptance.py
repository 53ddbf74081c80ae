"""Acceptance criteria, one test each, run at their stated tolerances.

A summary line per criterion is printed at the end of the pytest session.
"""
import filecmp
import itertools
import json
import math
import time

import numpy as np
import pytest

from parksent.classify import (
    cross_validate, evaluate, fit_text_classifier, krippendorff_alpha, load_grid, load_labeled_examples,
)
from parksent.config import bundled, load_config
from parksent.corpus import Corpus
from parksent.lsva import compute_lsva
from parksent.pipeline import STAGES, Pipeline, sensitivity_sweep
from parksent.regress import build_design, fit_gam, ols, stepwise_aic, vif_filter
from parksent.sentiment import wilcoxon_ranksum
from parksent.spatial import ConstantSurfaceError, build_knn_weights, lisa, morans_i

from conftest import planted_noise_sweep
from test_lsva import _fixture, _recount
from test_regress import GAM_SEED, _orthonormal_centered, _planted
from test_sentiment import _brute_force
from test_spatial import _checker, rook

MINI = bundled("pipeline.ini")


def test_criterion_01_lsva_exactness(fixtures_dir):
    rows = _fixture(fixtures_dir)
    assert len(rows) == 200
    got = compute_lsva(rows, min_count=1)
    want = _recount(rows, frozenset(), 1)
    assert len(got) == len(want)
    for e in got:
        tot, p, n = want[e.term]
        assert (e.n_total, e.n_positive, e.n_negative) == (tot, p, n)
        assert e.valence == (p - n) / tot
        assert e.salience == math.log10(tot) and round(10 ** e.salience) == tot


def test_criterion_02_moran_forced_cases():
    assert abs(morans_i(_checker(4, 4), rook(4, 4), 99, seed=0).I + 1) < 1e-9
    with pytest.raises(ConstantSurfaceError):
        morans_i(np.ones(16), rook(4, 4))
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = 40
        w = build_knn_weights([f"r{i}" for i in range(n)], rng.uniform(30, 45, n), rng.uniform(-120, -75, n), 8)
        v = rng.normal(size=n)
        assert abs(morans_i(v, w, 0).I - morans_i(3 * v + 7, w, 0).I) < 1e-9


def test_criterion_03_lisa_identity():
    for seed in range(20):
        rng = np.random.default_rng(100 + seed)
        n = 50
        w = build_knn_weights([f"r{i}" for i in range(n)], rng.uniform(30, 45, n), rng.uniform(-120, -75, n), 8)
        v = rng.normal(size=n)
        res = lisa(v, w, 199, seed=seed)
        assert abs(sum(r.local_i for r in res) - n * morans_i(v, w, 0).I) < 1e-9
        assert [r.p_value for r in lisa(v, w, 199, seed=seed)] == [r.p_value for r in res]
    for rows, cols in ((4, 4), (6, 5)):
        v = np.random.default_rng(rows).normal(size=rows * cols)
        res = lisa(v, rook(rows, cols), 99, seed=1)
        assert abs(sum(r.local_i for r in res) - rows * cols * morans_i(v, rook(rows, cols), 0).I) < 1e-9


def test_criterion_04_wilcoxon_oracle():
    assert wilcoxon_ranksum([1, 2, 3], [4, 5, 6]).p_value == 0.1
    rng = np.random.default_rng(4)
    checked = 0
    for n_a, n_b in itertools.product(range(1, 12), repeat=2):
        if n_a + n_b > 12:
            continue
        for ties in (False, True):
            a = rng.integers(0, 4, n_a) if ties else rng.normal(size=n_a)
            b = rng.integers(0, 4, n_b) if ties else rng.normal(size=n_b)
            u, p = _brute_force(a.tolist(), b.tolist())
            res = wilcoxon_ranksum(a, b, method="exact")
            assert res.u == u
            assert abs(res.p_value - float(p)) < 1e-12
            checked += 1
    assert checked == 132


def test_criterion_05_krippendorff(fixtures_dir):
    labels = np.random.default_rng(0).integers(0, 4, 50).tolist()
    assert krippendorff_alpha([[x, x, x] for x in labels]).alpha == 1.0
    units = np.random.default_rng(20240917).integers(0, 4, size=(10_000, 2)).tolist()
    assert abs(krippendorff_alpha(units).alpha) < 0.05
    data = json.loads((fixtures_dir / "krippendorff_nominal.json").read_text())
    num, den = data["hand"]["alpha"]
    assert abs(krippendorff_alpha(data["units"]).alpha - num / den) < 1e-9


def test_criterion_06_classifier_pipeline():
    examples = load_labeled_examples(bundled("labeled.csv"))
    train = [e for e in examples if e.split == "train"]
    test = [e for e in examples if e.split == "test"]
    best, report = cross_validate("logistic", load_grid(bundled("logistic_grid.json")), train, k=10, seed=0)
    flat = np.sort(np.concatenate(report.folds))
    assert np.array_equal(flat, np.arange(len(train)))
    assert report.best_score >= 0.95
    model = fit_text_classifier("logistic", [e.text for e in train], [e.label for e in train], best, seed=0)
    assert evaluate(model, test).accuracy >= 0.95


def test_criterion_07_gam_recovery():
    y, cov, lat, lng, groups = _planted(2000, GAM_SEED)
    design = build_design(y, cov, lat, lng, groups, knots=8)
    fit = fit_gam(design)
    assert abs(fit.term("x1").coefficient - 0.5) <= 0.02
    assert abs(fit.term("x2").coefficient + 0.3) <= 0.02
    k = sum(len(b.penalties) for b in design.blocks)
    stiff = fit_gam(design, lambdas=[1e14] * k)
    b = ols(y, design.X[:, 1:1 + design.n_linear])
    assert np.max(np.abs(stiff.coefficients[:1 + design.n_linear] - b)) < 1e-6
    for f in (fit, stiff):
        for blk in design.blocks:
            assert 0 <= f.edf[blk.name] + 1e-9 and f.edf[blk.name] <= blk.dim + 1e-9


def test_criterion_08_vif_stepwise():
    X = _orthonormal_centered(40, 5)
    rep = vif_filter(X, list("abcde"))
    assert all(abs(v - 1) < 1e-9 for v in rep.vif.values()) and rep.excluded == []
    rng = np.random.default_rng(8)
    a, b = rng.normal(size=30), rng.normal(size=30)
    dup = vif_filter(np.column_stack([a, b, b]), ["a", "b", "b2"])
    assert dup.infinite == ["b2"] and dup.retained == ["a", "b"]
    x1, noise = rng.normal(size=60), rng.normal(size=60)
    y = 2 * x1 + 0.1 * rng.normal(size=60)
    selected, trace = stepwise_aic(y, np.column_stack([x1, noise]), ["x1", "noise"])
    assert "noise" not in selected and "x1" in selected
    assert all(q < p for p, q in zip(trace.aics, trace.aics[1:]))


def test_criterion_09_threshold_sweep():
    scored, assignments, cov = planted_noise_sweep()
    res = sensitivity_sweep(scored, assignments, cov, ["signal"], range(51))
    assert all(q <= p for p, q in zip(res.n_regions, res.n_regions[1:]))
    assert abs(res.r["signal"][10]) > abs(res.r["signal"][0])


def _tree_files(root):
    return sorted(p.relative_to(root) for p in root.rglob("*")
                  if p.is_file() and p.name != "timings.json" and ".cache" not in p.parts)


def test_criterion_10_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    Pipeline(load_config(MINI), a).run()
    Pipeline(load_config(MINI), b).run()
    files = _tree_files(a)
    assert files == _tree_files(b)
    assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()
    match, mismatch, errors = filecmp.cmpfiles(a, b, [str(f) for f in files], shallow=False)
    assert not mismatch and not errors


def test_criterion_11_end_to_end(tmp_path):
    corpus = Corpus.load(*(bundled(f) for f in ("reviews.jsonl", "pois.csv", "regions.csv", "covariates.csv")))
    assert len(corpus.reviews) == 500 and len(corpus.pois) == 60
    assert len({a.cbg_id for a in corpus.assignments.values()}) == 12
    assert len({a.cbsa_id for a in corpus.assignments.values()}) == 3
    t0 = time.perf_counter()
    manifest = Pipeline(load_config(MINI), tmp_path).run()
    assert time.perf_counter() - t0 < 60
    assert [s.stage for s in manifest.stages] == list(STAGES)
    assert all(s.status == "ok" for s in manifest.stages)
    for name in ("gam_table.csv", "wilcoxon_matrix.csv", "lisa.csv", "lsva_all.csv", "sweep.csv"):
        assert (tmp_path / name).stat().st_size > 0, name
