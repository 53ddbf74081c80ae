"""Six-stage batch pipeline with content-hash caching and a run manifest.

Stages run in order: filter, classify, aggregate, spatial, regress, lsva.
Each stage reads its inputs from files (corpus inputs or upstream stage
outputs) and writes its outputs into the run directory, so any stage can be
resumed from cached upstream results. A stage is skipped when its input hash
matches the cache record and its outputs are intact.

``manifest.json`` records input and output hashes only and is a pure function
of inputs, config and seed; wall times go to ``timings.json``.
"""
from __future__ import annotations

import json
import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import __version__
from ._io import digest, file_sha256, read_csv, read_jsonl, write_csv, write_json, write_jsonl
from .classify import (
    ModelKind,
    cross_validate,
    evaluate,
    external_model,
    fit_text_classifier,
    load_grid,
    load_labeled_examples,
    load_lexicon,
    predict,
)
from .classify.models import ClassifierModel
from .config import PipelineConfig, bundled, parse_thresholds, parse_weights
from .corpus import IN_SCOPE_VARIABLES, MAJOR_CATEGORIES, Corpus, PoiCategory
from .lsva import compute_lsva, load_stopwords, scaled_min_count
from .regress import (
    between_cbsa_correlations,
    build_design,
    cohort_difference,
    fit_gam,
    pearson,
    stepwise_aic,
    vif_filter,
    within_cbsa_correlations,
    write_model_table,
)
from .sentiment import (
    aggregate_poi,
    aggregate_region,
    pairwise_wilcoxon,
    rank_regions,
    score_sentences,
)
from .spatial import build_adjacency_weights, build_knn_weights, lisa, morans_i, read_adjacency
from .textfilter import extract_parking_sentences

logger = logging.getLogger(__name__)

STAGES = ("filter", "classify", "aggregate", "spatial", "regress", "lsva")
CACHE_DIR = ".cache"
DEFAULT_GRIDS = {
    ModelKind.SGD: {"alpha": [1e-4, 1e-3], "max_iter": [1000], "penalty": ["l2"]},
    ModelKind.FOREST: {"n_estimators": [50], "max_depth": [None], "min_samples_leaf": [1]},
}


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class StageRecord:
    stage: str
    input_hash: str
    output_hash: str
    outputs: dict[str, str]
    status: str = "ok"

    def to_dict(self) -> dict:
        return {"stage": self.stage, "input_hash": self.input_hash, "output_hash": self.output_hash,
                "outputs": self.outputs, "status": self.status}


@dataclass
class Manifest:
    config_hash: str
    seed: int
    stages: list[StageRecord] = field(default_factory=list)
    version: str = __version__

    def to_dict(self) -> dict:
        return {"version": self.version, "seed": self.seed, "config_hash": self.config_hash,
                "stages": [s.to_dict() for s in self.stages]}

    def stage(self, name: str) -> StageRecord:
        return next(s for s in self.stages if s.stage == name)


# --- sweep -------------------------------------------------------------------


@dataclass
class SweepResult:
    thresholds: list[int]
    n_regions: list[int]
    r: dict[str, list[float | None]]

    def rows(self) -> list[list]:
        out = [["n_regions"] + self.n_regions]
        for factor, values in self.r.items():
            out.append([factor] + values)
        return out


def sensitivity_sweep(scored, assignments: Mapping, covariates: Mapping[str, Mapping[str, float]],
                      factors: Sequence[str], thresholds: Sequence[int] = range(51),
                      method: str = "pooled") -> SweepResult:
    """Between-CBG Pearson r of sentiment with each factor, per minimum-review threshold.

    Cells with fewer than 3 usable regions, or a constant column, are ``None``.
    """
    scored = list(scored)
    thresholds = sorted(int(t) for t in thresholds)
    counts, r = [], {f: [] for f in factors}
    for t in thresholds:
        agg = aggregate_region(scored, assignments, "cbg", min_reviews=t, method=method)
        counts.append(len(agg.regions))
        for f in factors:
            pairs = [(covariates[reg.region_id][f], reg.mean_sentiment) for reg in agg.regions
                     if reg.region_id in covariates and f in covariates[reg.region_id]]
            value = None
            if len(pairs) >= 3:
                try:
                    value = pearson([p[0] for p in pairs], [p[1] for p in pairs])[0]
                except ValueError:
                    value = None
            r[f].append(value)
    return SweepResult(thresholds, counts, r)


# --- pipeline ------------------------------------------------------------------


def _subset_predicate(spec: str) -> tuple[str, Callable]:
    spec = spec.strip()
    if spec == "all":
        return "all", lambda rec: True
    if spec == "urban":
        return "urban", lambda rec: rec.get("is_urban") is True
    if spec == "rural":
        return "rural", lambda rec: rec.get("is_urban") is False
    if spec.startswith("category:"):
        cat = PoiCategory.parse(spec.split(":", 1)[1])
        if cat is None:
            raise ValueError(f"unknown POI category in subset {spec!r}")
        return f"category_{cat.value}", lambda rec: rec.get("category") == cat.value
    raise ValueError(f"subset must be all, urban, rural or category:NAME, got {spec!r}")


class _Rec:
    __slots__ = ("text", "label", "rec")

    def __init__(self, rec):
        self.text, self.label, self.rec = rec["text"], rec["label"], rec


class Pipeline:
    def __init__(self, config: PipelineConfig, out: str | Path | None = None):
        self.config = config
        self.out = Path(out if out is not None else config.run.out)
        inp = config.input
        self.paths = {
            "reviews": inp.reviews or bundled("reviews.jsonl"),
            "pois": inp.pois or bundled("pois.csv"),
            "regions": inp.regions or bundled("regions.csv"),
            "covariates": inp.covariates or bundled("covariates.csv"),
            "labeled": inp.labeled or bundled("labeled.csv"),
        }
        self._corpus: Corpus | None = None
        self._file_hashes: dict[str, str] = {}
        self.timings: dict[str, dict] = {}

    # helpers
    @property
    def corpus(self) -> Corpus:
        if self._corpus is None:
            p = self.paths
            self._corpus = Corpus.load(p["reviews"], p["pois"], p["regions"], p["covariates"])
        return self._corpus

    def _hash(self, path: str | None) -> str | None:
        if not path:
            return None
        if path not in self._file_hashes:
            self._file_hashes[path] = file_sha256(path)
        return self._file_hashes[path]

    def path(self, name: str) -> Path:
        return self.out / name

    def config_hash(self) -> str:
        cfg = self.config.to_dict()
        cfg["run"].pop("out")
        cfg["input"] = {k: self._hash(v) for k, v in self.paths.items()}
        for sec, key in (("classify", "grid"), ("classify", "lexicon"), ("classify", "sidecar"),
                         ("lsva", "stopwords")):
            cfg[sec][key] = self._hash(cfg[sec][key])
        kind, arg = parse_weights(self.config.spatial.weights)
        if kind == "adjacency":
            cfg["spatial"]["weights"] = "adjacency:" + self._hash(arg)
        return digest(cfg)

    def _stage_inputs(self, stage: str, upstream: Mapping[str, str]) -> str:
        c = self.config
        cfg = json.loads(json.dumps(c.to_dict()))
        sections = {
            "filter": [],
            "classify": ["classify"],
            "aggregate": ["aggregate"],
            "spatial": ["spatial", "aggregate"],
            "regress": ["regress", "aggregate", "sweep"],
            "lsva": ["lsva"],
        }[stage]
        files = {
            "filter": ["reviews", "pois"],
            "classify": ["labeled"],
            "aggregate": ["pois", "regions"],
            "spatial": [],
            "regress": ["pois", "regions", "covariates"],
            "lsva": ["pois", "regions"],
        }[stage]
        payload = {
            "stage": stage,
            "version": __version__,
            "seed": c.seed,
            "config": {s: cfg[s] for s in sections},
            "files": {f: self._hash(self.paths[f]) for f in files},
            "upstream": dict(upstream),
        }
        # content of referenced files, not their paths
        for sec, key in (("classify", "grid"), ("classify", "lexicon"), ("classify", "sidecar"),
                         ("lsva", "stopwords")):
            if sec in payload["config"]:
                payload["config"][sec][key] = self._hash(cfg[sec][key])
        if "spatial" in payload["config"]:
            kind, arg = parse_weights(c.spatial.weights)
            if kind == "adjacency":
                payload["config"]["spatial"]["weights"] = "adjacency:" + self._hash(arg)
        return digest(payload)

    def _cached(self, stage: str, input_hash: str) -> StageRecord | None:
        rec_path = self.out / CACHE_DIR / f"{stage}.json"
        if not rec_path.is_file():
            return None
        try:
            rec = json.loads(rec_path.read_text(encoding="utf-8"))
        except ValueError:
            return None
        if rec.get("input_hash") != input_hash:
            return None
        for name, sha in rec["outputs"].items():
            p = self.path(name)
            if not p.is_file() or file_sha256(p) != sha:
                return None
        return StageRecord(stage, input_hash, rec["output_hash"], rec["outputs"])

    def run(self, until: str | None = None, force: bool = False) -> Manifest:
        """Run stages up to and including ``until`` (default: all)."""
        if until is not None and until not in STAGES:
            raise ValueError(f"unknown stage {until!r}; stages are {STAGES}")
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / CACHE_DIR).mkdir(exist_ok=True)
        manifest = Manifest(self.config_hash(), self.config.seed)
        upstream: dict[str, str] = {}
        last = STAGES.index(until) if until else len(STAGES) - 1
        for stage in STAGES[:last + 1]:
            input_hash = self._stage_inputs(stage, upstream)
            t0 = time.perf_counter()
            rec = None if force else self._cached(stage, input_hash)
            cached = rec is not None
            if rec is None:
                logger.info("running stage %s", stage)
                try:
                    names = getattr(self, f"_stage_{stage}")()
                except Exception as exc:
                    self.timings[stage] = {"seconds": time.perf_counter() - t0, "cached": False,
                                           "status": "failed"}
                    write_json(self.out / "timings.json", self.timings)
                    raise StageError(stage, exc) from exc
                outputs = {n: file_sha256(self.path(n)) for n in sorted(names)}
                rec = StageRecord(stage, input_hash, digest(outputs), outputs)
                write_json(self.out / CACHE_DIR / f"{stage}.json",
                           {"input_hash": input_hash, "output_hash": rec.output_hash, "outputs": outputs})
            else:
                logger.info("stage %s cached", stage)
            self.timings[stage] = {"seconds": round(time.perf_counter() - t0, 6), "cached": cached,
                                   "status": "ok"}
            upstream[stage] = rec.output_hash
            manifest.stages.append(rec)
        write_json(self.out / "manifest.json", manifest.to_dict())
        write_json(self.out / "timings.json", self.timings)
        return manifest

    # --- stages ---------------------------------------------------------------

    def _stage_filter(self) -> list[str]:
        corpus = self.corpus
        write_json(self.path("corpus_report.json"), corpus.report.to_dict())
        records = []
        for m in extract_parking_sentences(corpus.reviews):
            rec = {
                "review_id": m.sentence.review_id,
                "sentence_index": m.sentence.index,
                "sentence_uid": m.sentence.uid,
                "trigger": m.trigger,
                "trigger_pos": m.trigger_pos,
                "text": m.sentence.text,
            }
            records.append(rec)
        poi_of = {r.review_id: r.poi_id for r in corpus.reviews}
        for rec in records:
            rec["poi_id"] = poi_of[rec["review_id"]]
        write_jsonl(self.path("mentions.jsonl"), records)
        return ["corpus_report.json", "mentions.jsonl"]

    def train(self) -> tuple[ClassifierModel, list[str]]:
        """Fit the configured classifier; writes CV and test-set tables."""
        c = self.config.classify
        kind = ModelKind.parse(c.kind)
        seed = self.config.seed
        written = []
        if kind is ModelKind.EXTERNAL:
            if not c.sidecar:
                raise ValueError("classify.kind = external needs classify.sidecar")
            return external_model(c.sidecar), written
        examples = load_labeled_examples(self.paths["labeled"])
        train = [e for e in examples if e.split == "train"]
        test = [e for e in examples if e.split == "test"]
        if kind is ModelKind.LEXICON:
            lex = load_lexicon(c.lexicon or bundled("lexicon.csv"))
            model = fit_text_classifier(kind, [], [], lexicon=lex)
        else:
            if c.grid:
                grid = load_grid(c.grid)
            elif kind is ModelKind.LOGISTIC:
                grid = load_grid(bundled("logistic_grid.json"))
            else:
                grid = DEFAULT_GRIDS[kind]
            best, report = cross_validate(kind, grid, train, k=c.folds, seed=seed, min_df=c.min_df)
            write_csv(self.path("cv_results.csv"), ["params", "mean_accuracy"] +
                      [f"fold_{i + 1}" for i in range(report.k)],
                      [[json.dumps(p, sort_keys=True), m] + s for p, m, s in report.results])
            written.append("cv_results.csv")
            model = fit_text_classifier(kind, [e.text for e in train], [e.label for e in train], best, seed,
                                        c.min_df)
        if test:
            rep = evaluate(model, test)
            rows = [[r["class"], r["precision"], r["recall"], r["f1"], r["support"]] for r in rep.as_rows()]
            rows.append(["accuracy", None, None, rep.accuracy, int(rep.confusion.sum())])
            write_csv(self.path("classifier_metrics.csv"), ["class", "precision", "recall", "f1", "support"], rows)
            written.append("classifier_metrics.csv")
        return model, written

    def _stage_classify(self) -> list[str]:
        model, written = self.train()
        mentions = read_jsonl(self.path("mentions.jsonl"))
        labels = predict(model, [(m["sentence_uid"], m["text"]) for m in mentions])
        write_jsonl(self.path("labels.jsonl"), [
            {"sentence_uid": m["sentence_uid"], "review_id": m["review_id"], "poi_id": m["poi_id"],
             "text": m["text"], "label": str(lab)} for m, lab in zip(mentions, labels)])
        return written + ["labels.jsonl"]

    def _scored(self):
        labels = read_jsonl(self.path("labels.jsonl"))
        return score_sentences([(r["poi_id"], r["sentence_uid"], r["label"]) for r in labels],
                               self.config.aggregate.neutral)

    def _centroids(self, scored, level: str) -> dict[str, tuple[float, float]]:
        corpus = self.corpus
        pts = defaultdict(list)
        seen = set()
        for s in scored:
            if s.score is None or s.poi_id in seen or s.poi_id not in corpus.assignments:
                continue
            seen.add(s.poi_id)
            a = corpus.assignments[s.poi_id]
            poi = corpus.pois[s.poi_id]
            pts[a.cbg_id if level == "cbg" else a.cbsa_id].append((poi.lat, poi.lng))
        return {k: (float(np.mean([p[0] for p in v])), float(np.mean([p[1] for p in v])))
                for k, v in pts.items()}

    def _stage_aggregate(self) -> list[str]:
        a = self.config.aggregate
        corpus = self.corpus
        scored = self._scored()
        cats = {pid: p.category.value for pid, p in corpus.pois.items()}
        pois = aggregate_poi(scored, a.poi_min_count, cats)
        rows = []
        for p in pois:
            asg = corpus.assignments.get(p.poi_id)
            rows.append([p.poi_id, p.category, asg.cbg_id if asg else None, asg.cbsa_id if asg else None,
                         p.n_parking_sentences, p.weighted_sentiment, p.excluded])
        write_csv(self.path("poi_sentiment.csv"), ["poi_id", "category", "cbg_id", "cbsa_id",
                                                   "n_parking_sentences", "weighted_sentiment", "excluded"], rows)
        summary = {}
        for level in ("cbg", "cbsa"):
            agg = aggregate_region(scored, corpus.assignments, level, a.min_reviews, a.region_agg)
            cent = self._centroids(scored, level)
            cbsa_of = {x.cbg_id: x.cbsa_id for x in corpus.assignments.values()}
            header = ["region_id", "cbsa_id", "n_reviews", "n_pois", "n_cbgs", "mean_sentiment", "lat", "lng"]
            write_csv(self.path(f"{level}_sentiment.csv"), header, [
                [r.region_id, cbsa_of.get(r.region_id, r.region_id), r.n_reviews, r.n_pois, r.n_cbgs,
                 r.mean_sentiment, *cent[r.region_id]] for r in agg.regions])
            summary[level] = {"included": len(agg.regions), "excluded": agg.n_excluded,
                              "excluded_ids": agg.excluded}
            if level == "cbsa":
                top, bottom = rank_regions(agg.regions, a.rank_k, a.rank_min_cbgs)
                write_csv(self.path("rankings.csv"), ["list", "rank", "region_id", "mean_sentiment", "n_cbgs"],
                          [["top", i + 1, r.region_id, r.mean_sentiment, r.n_cbgs] for i, r in enumerate(top)] +
                          [["bottom", i + 1, r.region_id, r.mean_sentiment, r.n_cbgs]
                           for i, r in enumerate(bottom)])
        summary["poi"] = {"included": sum(not p.excluded for p in pois), "excluded": sum(p.excluded for p in pois)}
        write_json(self.path("aggregate_summary.json"), summary)
        samples = {c.value: [p.weighted_sentiment for p in pois if not p.excluded and p.category == c.value]
                   for c in MAJOR_CATEGORIES}
        mat = pairwise_wilcoxon(samples)
        write_csv(self.path("wilcoxon_matrix.csv"), ["category"] + mat.groups,
                  [[g] + mat.p_values[i].tolist() for i, g in enumerate(mat.groups)])
        write_csv(self.path("wilcoxon_pairs.csv"), ["group_a", "group_b", "n_a", "n_b", "U", "p_value", "method"],
                  [[r.group_a, r.group_b, r.n_a, r.n_b, r.u, r.p_value, r.method] for r in mat.results.values()])
        return ["poi_sentiment.csv", "cbg_sentiment.csv", "cbsa_sentiment.csv", "rankings.csv",
                "aggregate_summary.json", "wilcoxon_matrix.csv", "wilcoxon_pairs.csv"]

    def _stage_spatial(self) -> list[str]:
        s = self.config.spatial
        rows = read_csv(self.path(f"{s.level}_sentiment.csv"))
        ids = [r["region_id"] for r in rows]
        values = np.array([float(r["mean_sentiment"]) for r in rows])
        kind, arg = parse_weights(s.weights)
        if kind == "knn":
            if len(ids) <= arg:
                raise ValueError(f"{len(ids)} {s.level.upper()} regions pass the review threshold; "
                                 f"knn:{arg} needs more than {arg}")
            w = build_knn_weights(ids, [float(r["lat"]) for r in rows], [float(r["lng"]) for r in rows], arg)
        else:
            w = build_adjacency_weights(read_adjacency(arg), ids)
        seed = self.config.seed
        moran = morans_i(values, w, s.permutations, seed)
        local = lisa(values, w, s.permutations, s.alpha, seed)
        write_csv(self.path("lisa.csv"), ["region_id", "value", "local_i", "quadrant", "cluster", "p_value",
                                          "n_neighbors"],
                  [[x.region_id, x.value, x.local_i, x.quadrant, x.cluster, x.p_value, int(c)]
                   for x, c in zip(local, w.cardinalities)])
        write_json(self.path("moran.json"), {
            "level": s.level, "weights": s.weights if kind == "knn" else "adjacency",
            "I": float(f"{moran.I:.9g}"), "expected_I": float(f"{moran.expected_I:.9g}"),
            "p_value": float(f"{moran.p_value:.9g}"), "n": moran.n, "n_permutations": moran.n_permutations,
            "islands": w.islands})
        return ["lisa.csv", "moran.json"]

    def _cbg_table(self, scored, min_reviews):
        corpus = self.corpus
        cov = corpus.covariates.by_cbg()
        agg = aggregate_region(scored, corpus.assignments, "cbg", min_reviews, self.config.aggregate.region_agg)
        return [r for r in agg.regions if r.region_id in cov], cov

    def _stage_regress(self) -> list[str]:
        cfg = self.config.regress
        a = self.config.aggregate
        corpus = self.corpus
        scored = self._scored()
        cov = corpus.covariates.by_cbg()
        variables = [v for v in IN_SCOPE_VARIABLES if v in corpus.covariates.variables]
        notes: dict[str, object] = {}

        # CBGs with and without parking reviews
        has = {corpus.assignments[s.poi_id].cbg_id for s in scored
               if s.score is not None and s.poi_id in corpus.assignments}
        cbg_ids = sorted(cov)
        flags = [c in has for c in cbg_ids]
        if any(flags) and not all(flags):
            diffs = cohort_difference({v: [cov[c][v] for c in cbg_ids] for v in variables}, flags)
            write_csv(self.path("cohort.csv"), ["variable", "mean_with", "mean_without", "difference",
                                                "absolute", "p_value"],
                      [[d.variable, d.mean_with, d.mean_without, d.difference, d.absolute, d.p_value]
                       for d in diffs])
        else:
            write_csv(self.path("cohort.csv"), ["variable", "mean_with", "mean_without", "difference",
                                                "absolute", "p_value"], [])
            notes["cohort"] = "one cohort is empty"

        regions, _ = self._cbg_table(scored, a.min_reviews)
        ids = [r.region_id for r in regions]
        y = np.array([r.mean_sentiment for r in regions])
        cols = {v: np.array([cov[i][v] for i in ids]) for v in variables}
        constant = [v for v, col in cols.items() if len(col) == 0 or np.ptp(col) == 0]
        usable = [v for v in variables if v not in constant]
        if constant:
            notes["constant_variables"] = constant
        if len(ids) <= len(usable) + 1:
            raise ValueError(f"only {len(ids)} CBGs pass the review threshold for {len(usable)} covariates")
        X = np.column_stack([cols[v] for v in usable]) if usable else np.zeros((len(ids), 0))
        vif = vif_filter(X, usable, cfg.vif_threshold)
        dropped = dict(vif.excluded)
        write_csv(self.path("vif.csv"), ["variable", "initial_vif", "final_vif", "excluded"],
                  [[v, vif.initial_vif.get(v), vif.vif.get(v), v in dropped] for v in usable])
        kept = vif.retained
        Xk = np.column_stack([cols[v] for v in kept]) if kept else np.zeros((len(ids), 0))
        selected, trace = stepwise_aic(y, Xk, kept, cfg.stepwise)
        write_csv(self.path("stepwise.csv"), ["step", "action", "variable", "aic", "selected"],
                  [[i, s.action, s.variable, s.aic, " ".join(s.selected)] for i, s in enumerate(trace.steps)])

        fits, table_notes = self._fit_models(scored, selected, cov)
        write_model_table(self.path("gam_table.csv"), fits, selected, table_notes)
        write_json(self.path("gam_fits.json"), {
            name: None if f is None else {
                "n": f.n, "edf": {k: float(f"{v:.9g}") for k, v in f.edf.items()},
                "edf_total": float(f"{f.edf_total:.9g}"),
                "lambdas": {k: float(f"{v:.9g}") for k, v in f.lambdas.items()},
                "r2": float(f"{f.r2:.9g}"), "r2_adjusted": float(f"{f.r2_adjusted:.9g}"),
                "converged": f.converged,
                "terms": {t.label: {"coefficient": float(f"{t.coefficient:.9g}"),
                                    "std_error": float(f"{t.std_error:.9g}"),
                                    "p_value": float(f"{t.p_value:.9g}")} for t in f.terms},
            } for name, f in fits.items()})

        self._write_correlations(scored, regions, cov, usable)
        self.sweep(scored, usable)
        notes["stepwise_selected"] = selected
        notes["vif_excluded"] = [v for v, _ in vif.excluded]
        write_json(self.path("regress_notes.json"), notes)
        return ["cohort.csv", "vif.csv", "stepwise.csv", "gam_table.csv", "gam_fits.json", "correlations.csv",
                "sweep.csv", "regress_notes.json"]

    def sweep(self, scored=None, factors: Sequence[str] | None = None) -> SweepResult:
        """Threshold sweep over CBGs; needs ``labels.jsonl``. Writes ``sweep.csv``."""
        corpus = self.corpus
        scored = self._scored() if scored is None else scored
        cov = corpus.covariates.by_cbg()
        if factors is None:
            factors = [v for v in IN_SCOPE_VARIABLES if v in corpus.covariates.variables]
        result = sensitivity_sweep(scored, corpus.assignments, cov, factors,
                                   parse_thresholds(self.config.sweep.thresholds), self.config.aggregate.region_agg)
        write_csv(self.path("sweep.csv"), ["factor"] + [str(t) for t in result.thresholds], result.rows())
        return result

    def _fit_models(self, scored, selected, cov):
        cfg = self.config.regress
        a = self.config.aggregate
        corpus = self.corpus
        fits, notes = {}, {}
        cats = [c.value for c in MAJOR_CATEGORIES]
        cat_of = {pid: p.category.value for pid, p in corpus.pois.items()}

        def fit(rows, factor_cols=None):
            ids = [r.region_id for r in rows]
            n_lin = len(selected) + len(factor_cols or {})
            if len(ids) < max(cfg.min_rows, n_lin + 3):
                return None, f"too few CBGs ({len(ids)})"
            cent = self._centroids(scored, "cbg")
            cbsa_of = {x.cbg_id: x.cbsa_id for x in corpus.assignments.values()}
            d = build_design([r.mean_sentiment for r in rows], {v: [cov[i][v] for i in ids] for v in selected},
                             [cent[i][0] for i in ids], [cent[i][1] for i in ids], [cbsa_of[i] for i in ids],
                             knots=cfg.knots, factors=factor_cols)
            return fit_gam(d), None

        rows, _ = self._cbg_table(scored, a.min_reviews)
        # category mix of each CBG's included sentences, reference level = first category
        mix = defaultdict(lambda: defaultdict(int))
        for s in scored:
            if s.score is not None and s.poi_id in corpus.assignments:
                mix[corpus.assignments[s.poi_id].cbg_id][cat_of[s.poi_id]] += 1
        present = [c for c in cats if any(mix[r.region_id][c] for r in rows)]
        shares = {}
        for c in present[1:]:
            col = [mix[r.region_id][c] / sum(mix[r.region_id].values()) for r in rows]
            if np.ptp(col) > 0:
                shares[f"share:{c}"] = col
        if len(rows) < max(cfg.min_rows, len(selected) + len(shares) + 3):
            notes["All"] = "category shares omitted: too few CBGs"
            shares = {}
        fits["All"], err = fit(rows, shares or None)
        if err:
            notes["All"] = err
        for c in cats:
            sub = [s for s in scored if cat_of.get(s.poi_id) == c]
            agg = aggregate_region(sub, corpus.assignments, "cbg", a.min_reviews, a.region_agg)
            crow = [r for r in agg.regions if r.region_id in cov]
            fits[c], err = fit(crow)
            if err:
                notes[c] = err
        return fits, notes

    def _write_correlations(self, scored, regions, cov, factors):
        cfg = self.config.regress
        a = self.config.aggregate
        corpus = self.corpus
        cbsa_of = {x.cbg_id: x.cbsa_id for x in corpus.assignments.values()}
        rows = []
        ids = [r.region_id for r in regions]
        within = within_cbsa_correlations([r.mean_sentiment for r in regions], [cbsa_of[i] for i in ids],
                                          {f: [cov[i][f] for i in ids] for f in factors}, cfg.within_min_cbgs)
        for fc in within.factors:
            rows.append(["within_cbsa", "all", fc.factor, fc.r, fc.p_value, fc.n, fc.mean_r, fc.median_r,
                         fc.fraction_significant, len(fc.groups)])
        cbsa = aggregate_region(scored, corpus.assignments, "cbsa", a.min_reviews, a.region_agg)
        members = defaultdict(list)
        for cbg in sorted(cov):
            if cbg in cbsa_of:
                members[cbsa_of[cbg]].append(cbg)
        fac = {f: {k: float(np.mean([cov[c][f] for c in v])) for k, v in members.items()} for f in factors}
        by_type = {}
        cat_of = {pid: p.category.value for pid, p in corpus.pois.items()}
        for c in MAJOR_CATEGORIES:
            sub = [s for s in scored if cat_of.get(s.poi_id) == c.value]
            agg = aggregate_region(sub, corpus.assignments, "cbsa", a.min_reviews, a.region_agg)
            by_type[c.value] = {r.region_id: r.mean_sentiment for r in agg.regions}
        overall, segmented = between_cbsa_correlations({r.region_id: r.mean_sentiment for r in cbsa.regions},
                                                       fac, by_type)
        for rep in [overall, *segmented.values()]:
            for fc in rep.factors:
                rows.append(["between_cbsa", rep.segment or "all", fc.factor, fc.r, fc.p_value, fc.n,
                             None, None, None, None])
        write_csv(self.path("correlations.csv"), ["scope", "segment", "factor", "r", "p_value", "n", "mean_r",
                                                  "median_r", "fraction_significant", "n_groups"], rows)

    def _stage_lsva(self) -> list[str]:
        c = self.config.lsva
        corpus = self.corpus
        stop = load_stopwords(c.stopwords or None)
        labels = read_jsonl(self.path("labels.jsonl"))
        recs = []
        for r in labels:
            poi = corpus.pois.get(r["poi_id"])
            asg = corpus.assignments.get(r["poi_id"])
            recs.append(_Rec({**r, "category": poi.category.value if poi else None,
                              "is_urban": asg.is_urban if asg else None}))
        names = []
        for spec in [s for s in c.subsets.split(",") if s.strip()]:
            tag, pred = _subset_predicate(spec)
            subset = [x for x in recs if pred(x.rec)]
            if c.min_count == "auto":
                floor = scaled_min_count(len(subset), len(recs))
            else:
                floor = int(c.min_count)
            entries = compute_lsva(subset, floor, stop)
            name = f"lsva_{tag}.csv"
            write_csv(self.path(name), ["term", "N_total", "N_positive", "N_negative", "salience", "valence"],
                      [[e.term, e.n_total, e.n_positive, e.n_negative, e.salience, e.valence] for e in entries])
            names.append(name)
        return names


def run_pipeline(config: PipelineConfig, out: str | Path | None = None, until: str | None = None,
                 force: bool = False) -> Manifest:
    return Pipeline(config, out).run(until=until, force=force)
