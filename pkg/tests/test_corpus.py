import logging

import pytest
from hypothesis import given, settings, strategies as st

from parksent.corpus import (
    IN_SCOPE_VARIABLES, COVARIATE_VARIABLES, Corpus, CovariateRow, ParseError, PoiCategory,
    ValidationError, canonical_variable, load_covariates, load_pois, load_region_assignments,
    load_reviews, unassigned_pois, validate_corpus,
)
from conftest import write_jsonl, write_lines

POI_HEADER = "poi_id,name,category,lat,lng,avg_score"


def test_three_lines_three_reviews(tmp_path):
    p = write_jsonl(tmp_path / "r.jsonl", [
        {"review_id": f"r{i}", "poi_id": "p1", "text": f"text {i}", "rating": 4} for i in range(3)])
    reviews = load_reviews(p)
    assert [r.review_id for r in reviews] == ["r0", "r1", "r2"]
    assert reviews[0].rating == 4


def test_empty_text_names_line(tmp_path):
    p = write_jsonl(tmp_path / "r.jsonl", [
        {"review_id": "a", "poi_id": "p", "text": "ok"},
        {"review_id": "b", "poi_id": "p", "text": "   "}])
    with pytest.raises(ValidationError, match=r":2: empty review text"):
        load_reviews(p)


@pytest.mark.parametrize("bad, err", [
    ('{"review_id": "a", "poi_id": "p"', ParseError),
    ('{"review_id": "a", "text": "x"}', ParseError),
    ('{"review_id": "a", "poi_id": "p", "text": "x", "rating": 6}', ValidationError),
    ('[1, 2]', ParseError),
])
def test_malformed_reviews(tmp_path, bad, err):
    with pytest.raises(err):
        load_reviews(write_lines(tmp_path / "r.jsonl", [bad]))


def test_duplicate_review_id(tmp_path):
    p = write_jsonl(tmp_path / "r.jsonl", [{"review_id": "a", "poi_id": "p", "text": "x"}] * 2)
    with pytest.raises(ValidationError, match="duplicate"):
        load_reviews(p)


def test_bundled_reviews(mini_paths):
    reviews = load_reviews(mini_paths["reviews"])
    assert len(reviews) == 500
    assert load_reviews(mini_paths["reviews"]) == reviews


def test_poi_categories(tmp_path, caplog):
    p = write_lines(tmp_path / "p.csv", [POI_HEADER, "a,A,Restaurant,40,-75,4.5", "b,B,Museum,40,-75,"])
    with caplog.at_level(logging.WARNING):
        table = load_pois(p)
    assert table.pois[0].category is PoiCategory.RESTAURANT
    assert table.pois[1].category is PoiCategory.OTHER
    assert table.pois[1].avg_score is None
    assert table.unknown_category_count == 1
    assert "Other" in caplog.text


@pytest.mark.parametrize("row", ["a,A,Hotel,91,-75,", "a,A,Hotel,40,-181,", "a,A,Hotel,40,-75,5.5"])
def test_poi_ranges(tmp_path, row):
    with pytest.raises(ValidationError):
        load_pois(write_lines(tmp_path / "p.csv", [POI_HEADER, row]))


def test_poi_category_spellings():
    assert PoiCategory.parse("Retail Trade") is PoiCategory.RETAIL_TRADE
    assert PoiCategory.parse("personal_service") is PoiCategory.PERSONAL_SERVICE
    assert PoiCategory.parse("Museum") is None


def test_region_join_and_unassigned(tmp_path):
    regions = write_lines(tmp_path / "g.csv", ["poi_id,cbg_id,cbsa_id,is_urban", "a,A,X,1"])
    pois = load_pois(write_lines(tmp_path / "p.csv", [POI_HEADER, "a,A,Hotel,40,-75,", "b,B,Hotel,41,-75,"]))
    assignments = load_region_assignments(regions)
    assert (assignments[0].poi_id, assignments[0].cbg_id, assignments[0].cbsa_id) == ("a", "A", "X")
    assert assignments[0].is_urban is True
    assert unassigned_pois(pois, assignments) == ["b"]


def test_conflicting_cbsa(tmp_path):
    p = write_lines(tmp_path / "g.csv", ["poi_id,cbg_id,cbsa_id,is_urban", "a,A,X,1", "b,A,Y,1"])
    with pytest.raises(ValidationError, match="maps to both"):
        load_region_assignments(p)


def test_covariate_means(tmp_path):
    p = write_lines(tmp_path / "c.csv", ["cbg_id,poverty,male,walkability", "A,1,2,3", "B,3,6,5"])
    table = load_covariates(p)
    assert table.variables == ["poverty", "male", "walkability"]
    assert table.means == {"poverty": 2.0, "male": 4.0, "walkability": 4.0}
    assert table.stds["male"] == 2.0
    assert table.rejected == []


def test_covariate_blank_cell(tmp_path):
    p = write_lines(tmp_path / "c.csv", ["cbg_id,poverty,male", "A,1,2", "B,,6", "C,3,4"])
    table = load_covariates(p)
    assert len(table.rejected) == 1
    assert table.rejected[0][0] == 3
    assert [r.cbg_id for r in table.rows] == ["A", "C"]


def test_covariate_label_headers(tmp_path):
    labels = [label for _, label, _ in COVARIATE_VARIABLES]
    header = "cbg_id," + ",".join(f'"{lab}"' for lab in labels)
    p = write_lines(tmp_path / "c.csv", [header, "A," + ",".join("1" for _ in labels)])
    table = load_covariates(p)
    assert table.variables == [name for name, _, _ in COVARIATE_VARIABLES]
    recognised = [v for v in table.variables if v in IN_SCOPE_VARIABLES]
    # 19 listed rows of the table are used by the models (see decisions ledger)
    assert len(recognised) == len(IN_SCOPE_VARIABLES) == 19
    assert canonical_variable("Avg. POI Score") == "avg_poi_score"
    assert canonical_variable(">=2 Cars") == "two_plus_cars"


def _toy(tmp_path, extra_review=None, drop_cov=False):
    recs = [{"review_id": "r1", "poi_id": "a", "text": "x"}, {"review_id": "r2", "poi_id": "b", "text": "y"}]
    if extra_review:
        recs.append(extra_review)
    reviews = load_reviews(write_jsonl(tmp_path / "r.jsonl", recs))
    pois = load_pois(write_lines(tmp_path / "p.csv", [POI_HEADER, "a,A,Hotel,40,-75,", "b,B,Hotel,41,-75,"]))
    assignments = load_region_assignments(
        write_lines(tmp_path / "g.csv", ["poi_id,cbg_id,cbsa_id,is_urban", "a,G1,X,1", "b,G2,X,0"]))
    cov = [CovariateRow("G1", {"male": 1.0})] + ([] if drop_cov else [CovariateRow("G2", {"male": 2.0})])
    return reviews, pois, assignments, cov


def test_validate_consistent(tmp_path):
    report = validate_corpus(*_toy(tmp_path))
    assert report.orphan_reviews == 0
    assert report.pois_without_reviews == [] and report.unassigned_pois == []
    assert report.cbgs_without_covariates == []


def test_validate_orphan_and_missing_cov(tmp_path):
    report = validate_corpus(*_toy(tmp_path, {"review_id": "r3", "poi_id": "zz", "text": "z"}, drop_cov=True))
    assert report.orphan_reviews == 1 and report.orphan_review_ids == ["r3"]
    assert report.retained_reviews + report.orphan_reviews == report.n_reviews == 3
    assert report.cbgs_without_covariates == ["G2"]


def test_bundled_corpus_chain(mini_paths):
    corpus = Corpus.load(mini_paths["reviews"], mini_paths["pois"], mini_paths["regions"], mini_paths["covariates"])
    assert corpus.report.retained_reviews + corpus.report.orphan_reviews == 500
    assert corpus.covariates.rejected == []
    for r in corpus.reviews:
        a = corpus.region_of(r.poi_id)
        if a is not None:
            assert a.cbg_id and a.cbsa_id
    counts = {}
    for p in corpus.pois.values():
        counts[p.category] = counts.get(p.category, 0) + 1
    assert counts[PoiCategory.OTHER] == 8


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.text(min_size=1).filter(str.strip), st.integers(1, 5)), min_size=1, max_size=8))
def test_reviews_order_preserved(tmp_path_factory, items):
    path = tmp_path_factory.mktemp("rev") / "r.jsonl"
    recs = [{"review_id": f"id{i}", "poi_id": "p", "text": t, "rating": r} for i, (t, r) in enumerate(items)]
    write_jsonl(path, recs)
    loaded = load_reviews(path)
    assert [(r.text, r.rating) for r in loaded] == items
    assert load_reviews(path) == loaded
