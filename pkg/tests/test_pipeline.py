import json
import pickle

import pytest

from parksent import cli
from parksent._io import fmt, read_csv
from parksent.config import (
    ConfigError, PipelineConfig, bundled, load_config, parse_config, parse_thresholds, parse_weights,
)
from parksent.pipeline import STAGES, Pipeline, StageError, sensitivity_sweep

from conftest import planted_noise_sweep

MINI = bundled("pipeline.ini")


# --- config ----------------------------------------------------------------------------

def test_defaults_documented():
    cfg = load_config(None)
    assert cfg == PipelineConfig()
    assert cfg.aggregate.min_reviews == 10 and cfg.spatial.weights == "knn:8"
    assert cfg.spatial.permutations == 999 and cfg.regress.knots == 8 and cfg.seed == 0
    assert parse_config(cfg.to_ini()) == cfg


def test_unknown_key_and_section():
    with pytest.raises(ConfigError, match="spatial.bogus"):
        parse_config("[spatial]\nbogus = 1\n")
    with pytest.raises(ConfigError, match=r"\[nope\]"):
        parse_config("[nope]\n")
    with pytest.raises(ConfigError, match="kind"):
        parse_config("[classify]\nkind = bert\n")
    with pytest.raises(ConfigError, match="expected int"):
        parse_config("[aggregate]\nmin_reviews = ten\n")


def test_paths_resolve_against_config_dir(tmp_path):
    cfg = parse_config("[input]\nreviews = data/r.jsonl\n[spatial]\nweights = adjacency:adj.csv\n", tmp_path)
    assert cfg.input.reviews == str(tmp_path / "data/r.jsonl")
    assert parse_weights(cfg.spatial.weights) == ("adjacency", str(tmp_path / "adj.csv"))
    assert parse_weights("knn:5") == ("knn", 5)
    with pytest.raises(ConfigError):
        parse_weights("queen")


def test_thresholds():
    assert parse_thresholds("0-3") == [0, 1, 2, 3]
    assert parse_thresholds("10,0,5,5") == [0, 5, 10]
    with pytest.raises(ConfigError):
        parse_thresholds("a-b")


def test_fmt():
    assert fmt(1 / 3) == "0.333333333"
    assert fmt(-0.0) == "0" and fmt(float("nan")) == "NA" and fmt(None) == "NA"


# --- sweep -----------------------------------------------------------------------------

def test_sweep_planted_noise():
    scored, assignments, cov = planted_noise_sweep()
    res = sensitivity_sweep(scored, assignments, cov, ["signal"], range(51))
    assert res.n_regions[0] == 60
    assert all(b <= a for a, b in zip(res.n_regions, res.n_regions[1:]))
    r = res.r["signal"]
    assert abs(r[10]) > abs(r[0])
    assert res.n_regions[-1] == 0 and r[-1] is None


def test_sweep_threshold_zero_keeps_every_reviewed_region():
    scored, assignments, cov = planted_noise_sweep()
    res = sensitivity_sweep(scored, assignments, cov, ["signal"], [0, 1])
    assert res.n_regions == [60, 60]


# --- pipeline --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def mini_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    pipe = Pipeline(load_config(MINI), out)
    return pipe, pipe.run()


def test_manifest_lists_six_stages(mini_run):
    pipe, manifest = mini_run
    assert [s.stage for s in manifest.stages] == list(STAGES)
    assert all(s.status == "ok" for s in manifest.stages)
    on_disk = json.loads((pipe.out / "manifest.json").read_text())
    assert on_disk == manifest.to_dict()
    timings = json.loads((pipe.out / "timings.json").read_text())
    assert set(timings) == set(STAGES)


def test_outputs_present(mini_run):
    pipe, manifest = mini_run
    for name in ("mentions.jsonl", "labels.jsonl", "poi_sentiment.csv", "cbg_sentiment.csv",
                 "wilcoxon_matrix.csv", "lisa.csv", "moran.json", "gam_table.csv", "sweep.csv",
                 "lsva_all.csv", "lsva_urban.csv", "lsva_rural.csv", "correlations.csv"):
        assert (pipe.out / name).is_file(), name
    table = read_csv(pipe.out / "gam_table.csv")
    assert table[-1]["Variable"] == "Sample size"
    lsva = read_csv(pipe.out / "lsva_all.csv")
    assert list(lsva[0]) == ["term", "N_total", "N_positive", "N_negative", "salience", "valence"]
    mentions = [json.loads(x) for x in (pipe.out / "mentions.jsonl").read_text().splitlines()]
    assert {"review_id", "sentence_index", "trigger", "text"} <= set(mentions[0])


def test_rerun_uses_cache_and_same_hashes(mini_run):
    pipe, manifest = mini_run
    again = Pipeline(load_config(MINI), pipe.out)
    m2 = again.run()
    assert m2.to_dict() == manifest.to_dict()
    assert all(v["cached"] for v in again.timings.values())


def test_hashes_track_config_changes(mini_run, tmp_path):
    pipe, manifest = mini_run
    cfg = load_config(MINI)
    p = Pipeline(cfg.replace("lsva", min_count="2"), tmp_path / "x")
    up = {}
    for st in STAGES:
        h = p._stage_inputs(st, up)
        rec = manifest.stage(st)
        assert (h == rec.input_hash) == (st != "lsva")
        up[st] = rec.output_hash
    seeded = Pipeline(cfg.replace("run", seed=5), tmp_path / "y")
    assert seeded._stage_inputs("filter", {}) != manifest.stage("filter").input_hash
    moved = Pipeline(cfg.replace("run", out="elsewhere"), tmp_path / "z")
    assert moved.config_hash() == manifest.config_hash


def test_stage_error_names_stage(tmp_path):
    bad = tmp_path / "adj.csv"
    bad.write_text("a,b\nunknown1,unknown2\n")
    cfg = load_config(MINI).replace("spatial", weights=f"adjacency:{bad}")
    with pytest.raises(StageError) as err:
        Pipeline(cfg, tmp_path / "o").run(until="spatial")
    assert err.value.stage == "spatial"


# --- CLI -------------------------------------------------------------------------------

def test_cli_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[regress]\nsmoothness = 3\n")
    assert cli.main(["--config", str(cfg), "ingest"]) == 2
    assert "regress.smoothness" in capsys.readouterr().err


def test_cli_subcommands(tmp_path, capsys):
    out = tmp_path / "cli"
    base = ["--config", MINI, "--out", str(out)]
    assert cli.main(base + ["ingest"]) == 0
    assert "n_reviews: 500" in capsys.readouterr().out
    assert cli.main(base + ["train"]) == 0
    with open(out / "model.pkl", "rb") as fh:
        assert pickle.load(fh).kind.value == "logistic"
    assert (out / "cv_results.csv").is_file()
    assert cli.main(base + ["compare"]) == 0
    assert capsys.readouterr().out.count("\n") >= 2
    assert cli.main(base + ["spatial", "--permutations", "99"]) == 0
    assert "Moran's I" in capsys.readouterr().out
    assert cli.main(base + ["lsva", "--subset", "all", "--subset", "category:Restaurant", "--min-count", "2"]) == 0
    assert (out / "lsva_category_Restaurant.csv").is_file()
    assert cli.main(base + ["sweep", "--thresholds", "0,5,10"]) == 0
    rows = read_csv(out / "sweep.csv")
    assert list(rows[0]) == ["factor", "0", "5", "10"]
    assert rows[0]["factor"] == "n_regions"
    assert cli.main(base + ["--seed", "3", "classify", "--kind", "lexicon"]) == 0


def test_cli_external_missing_sidecar_ids(tmp_path, capsys):
    side = tmp_path / "side.jsonl"
    side.write_text(json.dumps({"sentence_uid": "nope:0", "label": "positive"}) + "\n")
    code = cli.main(["--config", MINI, "--out", str(tmp_path / "o"), "classify", "--kind", "external",
                     "--sidecar", str(side)])
    assert code == 1
    assert "sidecar lacks" in capsys.readouterr().err
