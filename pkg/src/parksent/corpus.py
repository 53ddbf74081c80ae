"""Load and validate the review, POI, region and covariate tables."""
from __future__ import annotations

import csv
import json
import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

logger = logging.getLogger(__name__)


class CorpusError(ValueError):
    """Raised for malformed or inconsistent input files."""


class ParseError(CorpusError):
    pass


class ValidationError(CorpusError):
    pass


class PoiCategory(str, Enum):
    RESTAURANT = "Restaurant"
    RETAIL_TRADE = "RetailTrade"
    RECREATION = "Recreation"
    PERSONAL_SERVICE = "PersonalService"
    APARTMENT = "Apartment"
    HOTEL = "Hotel"
    OTHER = "Other"

    @classmethod
    def parse(cls, raw: str) -> "PoiCategory | None":
        key = re.sub(r"[^a-z]", "", raw.lower())
        for member in cls:
            if member.value.lower() == key:
                return member
        return None


# The six analysed POI types, in the column order of the regression table.
MAJOR_CATEGORIES = (
    PoiCategory.RESTAURANT,
    PoiCategory.RETAIL_TRADE,
    PoiCategory.RECREATION,
    PoiCategory.HOTEL,
    PoiCategory.PERSONAL_SERVICE,
    PoiCategory.APARTMENT,
)


@dataclass(frozen=True)
class Review:
    review_id: str
    poi_id: str
    text: str
    rating: int | None = None
    timestamp: str | None = None


@dataclass(frozen=True)
class Poi:
    poi_id: str
    name: str
    category: PoiCategory
    lat: float
    lng: float
    avg_score: float | None = None


@dataclass(frozen=True)
class RegionAssignment:
    poi_id: str
    cbg_id: str
    cbsa_id: str
    is_urban: bool


@dataclass(frozen=True)
class CovariateRow:
    cbg_id: str
    values: dict[str, float]


@dataclass
class PoiTable:
    pois: list[Poi]
    unknown_category_count: int = 0

    def by_id(self) -> dict[str, Poi]:
        return {p.poi_id: p for p in self.pois}


@dataclass
class CovariateTable:
    variables: list[str]
    rows: list[CovariateRow]
    rejected: list[tuple[int, str]] = field(default_factory=list)
    means: dict[str, float] = field(default_factory=dict)
    stds: dict[str, float] = field(default_factory=dict)

    def by_cbg(self) -> dict[str, dict[str, float]]:
        return {r.cbg_id: r.values for r in self.rows}


@dataclass
class CorpusReport:
    n_reviews: int
    retained_reviews: int
    orphan_reviews: int
    orphan_review_ids: list[str]
    pois_without_reviews: list[str]
    unassigned_pois: list[str]
    cbgs_without_covariates: list[str]

    def to_dict(self) -> dict:
        return {
            "n_reviews": self.n_reviews,
            "retained_reviews": self.retained_reviews,
            "orphan_reviews": self.orphan_reviews,
            "pois_without_reviews": len(self.pois_without_reviews),
            "unassigned_pois": len(self.unassigned_pois),
            "cbgs_without_covariates": self.cbgs_without_covariates,
        }


# Block-group covariates: (canonical name, display label, used in the models).
COVARIATE_VARIABLES = (
    ("population_density", "Population Density", True),
    ("employment_density", "Employment Density", True),
    ("poverty", "Poverty", True),
    ("rural_population", "Rural Population", True),
    ("urban_population", "Urban Population", False),
    ("median_income", "Median Income", False),
    ("highly_educated", "Highly-Educated", True),
    ("democrat", "Democrat", False),
    ("zero_car", "Zero Car", True),
    ("one_car", "One Car", False),
    ("two_plus_cars", ">=2 Cars", False),
    ("male", "Male", True),
    ("age_18_44", "Age 18-44", True),
    ("age_45_64", "Age 45-64", True),
    ("age_over_65", "Age over 65", True),
    ("white", "White", False),
    ("asian", "Asian", True),
    ("african_american", "African American", True),
    ("hispanic", "Hispanic", True),
    ("others", "Others", True),
    ("poi_density", "POI Density", False),
    ("road_density", "Road Density", True),
    ("parking_poi_density", "Parking POI Density", True),
    ("walkability", "Walkability", True),
    ("transit_frequency", "Transit Frequency", True),
    ("avg_poi_score", "Avg. POI Score", True),
)
VARIABLE_LABELS = {name: label for name, label, _ in COVARIATE_VARIABLES}
IN_SCOPE_VARIABLES = tuple(name for name, _, used in COVARIATE_VARIABLES if used)


def _norm_key(name: str) -> str:
    return re.sub(r"[^a-z0-9]", "", name.lower().replace(">=2", "twoplus"))


_ALIASES = {}
for _name, _label, _ in COVARIATE_VARIABLES:
    _ALIASES[_norm_key(_name)] = _name
    _ALIASES[_norm_key(_label)] = _name


def canonical_variable(name: str) -> str | None:
    """Map a header such as ``"Avg. POI Score"`` to its canonical covariate name."""
    return _ALIASES.get(_norm_key(name))


def load_reviews(path: str | Path) -> list[Review]:
    reviews: list[Review] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise ParseError(f"{path}:{lineno}: expected a JSON object")
            try:
                rid = str(rec["review_id"])
                poi_id = str(rec["poi_id"])
                text = rec["text"]
            except KeyError as exc:
                raise ParseError(f"{path}:{lineno}: missing field {exc.args[0]!r}") from None
            if not isinstance(text, str) or not text.strip():
                raise ValidationError(f"{path}:{lineno}: empty review text")
            rating = rec.get("rating")
            if rating is not None:
                if isinstance(rating, bool) or not isinstance(rating, int) or not 1 <= rating <= 5:
                    raise ValidationError(f"{path}:{lineno}: rating must be an integer 1-5")
            if rid in seen:
                raise ValidationError(
                    f"{path}:{lineno}: duplicate review_id {rid!r} (first seen on line {seen[rid]})")
            seen[rid] = lineno
            reviews.append(Review(rid, poi_id, text, rating, rec.get("timestamp")))
    return reviews


def _read_csv(path: str | Path) -> tuple[list[str], list[tuple[int, dict[str, str]]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError(f"{path}: missing header row")
        rows = [(reader.line_num, row) for row in reader]
    return list(reader.fieldnames), rows


def _float(value: str, what: str, where: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: {what} is not a number: {value!r}") from None
    if not math.isfinite(out):
        raise ValidationError(f"{where}: {what} must be finite")
    return out


def load_pois(path: str | Path) -> PoiTable:
    _, rows = _read_csv(path)
    pois = []
    unknown = 0
    seen = set()
    for lineno, row in rows:
        where = f"{path}:{lineno}"
        poi_id = row.get("poi_id", "").strip()
        if not poi_id:
            raise ValidationError(f"{where}: empty poi_id")
        if poi_id in seen:
            raise ValidationError(f"{where}: duplicate poi_id {poi_id!r}")
        seen.add(poi_id)
        lat = _float(row.get("lat"), "lat", where)
        lng = _float(row.get("lng"), "lng", where)
        if not -90.0 <= lat <= 90.0:
            raise ValidationError(f"{where}: lat {lat} outside [-90, 90]")
        if not -180.0 <= lng <= 180.0:
            raise ValidationError(f"{where}: lng {lng} outside [-180, 180]")
        category = PoiCategory.parse(row.get("category") or "")
        if category is None:
            unknown += 1
            category = PoiCategory.OTHER
        score = (row.get("avg_score") or "").strip()
        avg = _float(score, "avg_score", where) if score else None
        if avg is not None and not 1.0 <= avg <= 5.0:
            raise ValidationError(f"{where}: avg_score {avg} outside [1, 5]")
        pois.append(Poi(poi_id, row.get("name", ""), category, lat, lng, avg))
    if unknown:
        logger.warning("%d POI categories not recognised; mapped to Other", unknown)
    return PoiTable(pois, unknown)


def _parse_bool(raw: str, where: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "t", "yes", "y", "urban"):
        return True
    if v in ("0", "false", "f", "no", "n", "rural", ""):
        return False
    raise ParseError(f"{where}: cannot parse boolean {raw!r}")


def load_region_assignments(path: str | Path) -> list[RegionAssignment]:
    _, rows = _read_csv(path)
    out = []
    cbsa_of: dict[str, str] = {}
    seen = set()
    for lineno, row in rows:
        where = f"{path}:{lineno}"
        poi_id, cbg, cbsa = (row.get(k, "").strip() for k in ("poi_id", "cbg_id", "cbsa_id"))
        if not (poi_id and cbg and cbsa):
            raise ValidationError(f"{where}: poi_id, cbg_id and cbsa_id are required")
        if poi_id in seen:
            raise ValidationError(f"{where}: poi {poi_id!r} assigned more than once")
        seen.add(poi_id)
        prev = cbsa_of.setdefault(cbg, cbsa)
        if prev != cbsa:
            raise ValidationError(f"{where}: cbg {cbg!r} maps to both {prev!r} and {cbsa!r}")
        out.append(RegionAssignment(poi_id, cbg, cbsa, _parse_bool(row.get("is_urban", ""), where)))
    return out


def unassigned_pois(pois: PoiTable | Iterable[Poi], assignments: Iterable[RegionAssignment]) -> list[str]:
    items = pois.pois if isinstance(pois, PoiTable) else pois
    assigned = {a.poi_id for a in assignments}
    return [p.poi_id for p in items if p.poi_id not in assigned]


def load_covariates(path: str | Path) -> CovariateTable:
    header, rows = _read_csv(path)
    if "cbg_id" not in header:
        raise ParseError(f"{path}: covariate file needs a cbg_id column")
    variables = []
    for name in header:
        if name == "cbg_id":
            continue
        variables.append(canonical_variable(name) or name)
    raw_names = [h for h in header if h != "cbg_id"]
    kept, rejected = [], []
    seen = set()
    for lineno, row in rows:
        where = f"{path}:{lineno}"
        cbg = (row.get("cbg_id") or "").strip()
        if not cbg:
            rejected.append((lineno, "empty cbg_id"))
            continue
        if cbg in seen:
            raise ValidationError(f"{where}: duplicate cbg_id {cbg!r}")
        blanks = [n for n in raw_names if (row.get(n) is None or not row[n].strip())]
        if blanks:
            rejected.append((lineno, f"missing value(s): {', '.join(blanks)}"))
            continue
        values = {v: _float(row[n], n, where) for v, n in zip(variables, raw_names)}
        seen.add(cbg)
        kept.append(CovariateRow(cbg, values))
    table = CovariateTable(variables, kept, rejected)
    for v in variables:
        col = [r.values[v] for r in kept]
        if col:
            mean = math.fsum(col) / len(col)
            table.means[v] = mean
            table.stds[v] = math.sqrt(math.fsum((x - mean) ** 2 for x in col) / len(col))
    if rejected:
        logger.warning("%d covariate rows rejected", len(rejected))
    return table


def validate_corpus(reviews, pois, assignments, covariates) -> CorpusReport:
    poi_ids = {p.poi_id for p in (pois.pois if isinstance(pois, PoiTable) else pois)}
    orphans = [r.review_id for r in reviews if r.poi_id not in poi_ids]
    reviewed = {r.poi_id for r in reviews}
    no_reviews = sorted(p for p in poi_ids if p not in reviewed)
    unassigned = unassigned_pois(pois, assignments)
    cov_cbgs = set(covariates.by_cbg()) if isinstance(covariates, CovariateTable) else {
        r.cbg_id for r in covariates}
    cbgs = sorted({a.cbg_id for a in assignments})
    missing_cov = [c for c in cbgs if c not in cov_cbgs]
    return CorpusReport(
        n_reviews=len(reviews),
        retained_reviews=len(reviews) - len(orphans),
        orphan_reviews=len(orphans),
        orphan_review_ids=orphans,
        pois_without_reviews=no_reviews,
        unassigned_pois=sorted(unassigned),
        cbgs_without_covariates=missing_cov,
    )


@dataclass(frozen=True)
class Corpus:
    """The joined, immutable input set."""

    reviews: tuple[Review, ...]
    pois: dict[str, Poi]
    assignments: dict[str, RegionAssignment]
    covariates: CovariateTable
    report: CorpusReport

    @classmethod
    def load(cls, reviews_path, pois_path, regions_path, covariates_path) -> "Corpus":
        reviews = load_reviews(reviews_path)
        pois = load_pois(pois_path)
        assignments = load_region_assignments(regions_path)
        covariates = load_covariates(covariates_path)
        report = validate_corpus(reviews, pois, assignments, covariates)
        poi_map = pois.by_id()
        kept = tuple(r for r in reviews if r.poi_id in poi_map)
        return cls(kept, poi_map, {a.poi_id: a for a in assignments}, covariates, report)

    def region_of(self, poi_id: str) -> RegionAssignment | None:
        return self.assignments.get(poi_id)
