"""Pipeline configuration read from an INI file.

Grammar: ``[section]`` headers followed by ``key = value`` lines; ``#`` and
``;`` start comments. Every key is optional and unknown sections or keys
are rejected. Relative paths resolve against the config file's directory.
An empty input path selects the bundled sample corpus.

[input]      reviews, pois, regions, covariates, labeled
[classify]   kind (logistic|sgd|forest|lexicon|external), grid, folds, min_df,
             lexicon, sidecar
[aggregate]  min_reviews, poi_min_count, neutral (zero|exclude),
             region_agg (pooled|poi-mean), rank_k, rank_min_cbgs
[spatial]    level (cbg|cbsa), weights (knn:K | adjacency:FILE), permutations,
             alpha
[regress]    vif_threshold, knots, within_min_cbgs, stepwise (backward|forward|both),
             min_rows
[lsva]       min_count (integer, or "auto" to scale 30 by subset size),
             subsets (comma list of all, urban, rural, category:NAME), stopwords
[sweep]      thresholds (e.g. 0-50 or 0,5,10)
[run]        seed, out
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InputConfig:
    reviews: str = ""
    pois: str = ""
    regions: str = ""
    covariates: str = ""
    labeled: str = ""


@dataclass(frozen=True)
class ClassifyConfig:
    kind: str = "logistic"
    grid: str = ""
    folds: int = 10
    min_df: int = 2
    lexicon: str = ""
    sidecar: str = ""


@dataclass(frozen=True)
class AggregateConfig:
    min_reviews: int = 10
    poi_min_count: int = 10
    neutral: str = "zero"
    region_agg: str = "pooled"
    rank_k: int = 10
    rank_min_cbgs: int = 50


@dataclass(frozen=True)
class SpatialConfig:
    level: str = "cbg"
    weights: str = "knn:8"
    permutations: int = 999
    alpha: float = 0.05


@dataclass(frozen=True)
class RegressConfig:
    vif_threshold: float = 5.0
    knots: int = 8
    within_min_cbgs: int = 10
    stepwise: str = "backward"
    min_rows: int = 8


@dataclass(frozen=True)
class LsvaConfig:
    min_count: str = "auto"
    subsets: str = "all,urban,rural"
    stopwords: str = ""


@dataclass(frozen=True)
class SweepConfig:
    thresholds: str = "0-50"


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    out: str = "parksent-out"


@dataclass(frozen=True)
class PipelineConfig:
    input: InputConfig = field(default_factory=InputConfig)
    classify: ClassifyConfig = field(default_factory=ClassifyConfig)
    aggregate: AggregateConfig = field(default_factory=AggregateConfig)
    spatial: SpatialConfig = field(default_factory=SpatialConfig)
    regress: RegressConfig = field(default_factory=RegressConfig)
    lsva: LsvaConfig = field(default_factory=LsvaConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def section(self, name: str) -> dict:
        return dataclasses.asdict(getattr(self, name))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, section: str, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **{section: dataclasses.replace(getattr(self, section), **changes)})

    @property
    def seed(self) -> int:
        return self.run.seed

    def to_ini(self) -> str:
        lines = []
        for sec, values in self.to_dict().items():
            lines.append(f"[{sec}]")
            lines += [f"{k} = {v}" for k, v in values.items()]
            lines.append("")
        return "\n".join(lines)


_SECTION_TYPES = {f.name: f.default_factory for f in dataclasses.fields(PipelineConfig)}
_PATH_KEYS = {("input", k) for k in ("reviews", "pois", "regions", "covariates", "labeled")} | {
    ("classify", "grid"), ("classify", "lexicon"), ("classify", "sidecar"), ("lsva", "stopwords"),
    ("run", "out")}

_CHOICES = {
    ("classify", "kind"): ("logistic", "sgd", "forest", "lexicon", "external"),
    ("aggregate", "neutral"): ("zero", "exclude"),
    ("aggregate", "region_agg"): ("pooled", "poi-mean"),
    ("spatial", "level"): ("cbg", "cbsa"),
    ("regress", "stepwise"): ("backward", "forward", "both"),
}


def _convert(section: str, key: str, raw: str, proto):
    typ = type(proto)
    try:
        value = typ(raw) if typ is not str else raw
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected {typ.__name__}, got {raw!r}") from None
    choices = _CHOICES.get((section, key))
    if choices and value not in choices:
        raise ConfigError(f"[{section}] {key}: must be one of {', '.join(choices)}, got {raw!r}")
    return value


def parse_config(text: str, base_dir: str | Path = ".") -> PipelineConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    base = Path(base_dir)
    sections = {}
    for sec in parser.sections():
        if sec not in _SECTION_TYPES:
            raise ConfigError(f"unknown config section [{sec}]")
        proto = _SECTION_TYPES[sec]()
        known = {f.name for f in dataclasses.fields(proto)}
        changes = {}
        for key, raw in parser.items(sec):
            if key not in known:
                raise ConfigError(f"unknown config key {sec}.{key}")
            value = _convert(sec, key, raw.strip(), getattr(proto, key))
            if (sec, key) in _PATH_KEYS and value:
                value = str(base / value)
            elif (sec, key) == ("spatial", "weights") and value.startswith("adjacency:"):
                value = "adjacency:" + str(base / value.split(":", 1)[1])
            changes[key] = value
        sections[sec] = dataclasses.replace(proto, **changes)
    return PipelineConfig(**sections)


def load_config(path: str | Path | None) -> PipelineConfig:
    """Load ``path``; ``None`` gives the defaults."""
    if path is None:
        return PipelineConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), path.parent)


def bundled(name: str) -> str:
    """Path of a bundled sample data file."""
    return str(resources.files("parksent").joinpath("data", name))


def parse_thresholds(spec: str) -> list[int]:
    """``"0-50"`` or ``"0,5,10"`` (ranges allowed inside lists)."""
    out = []
    for part in str(spec).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part[1:]:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise ConfigError(f"bad threshold list {spec!r}") from None
    if not out or min(out) < 0:
        raise ConfigError(f"thresholds must be non-negative integers, got {spec!r}")
    return sorted(set(out))


def parse_weights(spec: str) -> tuple[str, object]:
    """``knn:K`` or ``adjacency:FILE``."""
    kind, _, arg = str(spec).partition(":")
    if kind == "knn":
        try:
            k = int(arg) if arg else 8
        except ValueError:
            raise ConfigError(f"bad weights spec {spec!r}") from None
        return "knn", k
    if kind == "adjacency" and arg:
        return "adjacency", arg
    raise ConfigError(f"weights must be knn:K or adjacency:FILE, got {spec!r}")
