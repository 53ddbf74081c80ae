"""Command-line entry point: ``parksent <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import pickle
import sys

from ._io import write_json
from .config import ConfigError, load_config
from .corpus import CorpusError
from .pipeline import Pipeline, StageError


def _common(p: argparse.ArgumentParser, top: bool = False) -> None:
    # subcommands repeat the global flags; SUPPRESS keeps them from resetting values given earlier
    d = {} if top else {"default": argparse.SUPPRESS}
    p.add_argument("--config", help="INI config file (defaults apply when omitted)", **d)
    p.add_argument("--seed", type=int, help="override [run] seed", **d)
    p.add_argument("--out", help="output directory, overrides [run] out", **d)
    p.add_argument("--force", action="store_true", help="ignore cached stage outputs", **d)
    p.add_argument("-v", "--verbose", action="store_true", **d)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parksent", description="Parking sentiment analytics pipeline.")
    _common(parser, top=True)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "ingest": "load and validate the input corpus",
        "filter": "extract parking sentences",
        "train": "grid-search and fit the attitude classifier",
        "classify": "label parking sentences",
        "aggregate": "POI and region sentiment tables",
        "compare": "pairwise Wilcoxon matrix across POI categories",
        "spatial": "global Moran's I and LISA clusters",
        "regress": "VIF, stepwise AIC, GAM table and correlations",
        "lsva": "salience-valence tables",
        "sweep": "correlation sensitivity to the review threshold",
        "run": "the full six-stage pipeline",
    }
    cmds = {}
    for name, text in helps.items():
        cmds[name] = sub.add_parser(name, help=text, description=text)
        _common(cmds[name])
    cmds["classify"].add_argument("--kind", choices=["logistic", "sgd", "forest", "lexicon", "external"])
    cmds["classify"].add_argument("--sidecar", help="JSONL labels for the external kind")
    cmds["train"].add_argument("--kind", choices=["logistic", "sgd", "forest", "lexicon"])
    cmds["train"].add_argument("--grid", help="JSON hyperparameter grid")
    for name in ("aggregate", "compare", "regress", "sweep"):
        cmds[name].add_argument("--min-reviews", type=int)
        cmds[name].add_argument("--region-agg", choices=["pooled", "poi-mean"])
        cmds[name].add_argument("--neutral", choices=["zero", "exclude"])
    cmds["spatial"].add_argument("--weights", help="knn:K or adjacency:FILE")
    cmds["spatial"].add_argument("--permutations", type=int)
    cmds["spatial"].add_argument("--alpha", type=float)
    cmds["spatial"].add_argument("--level", choices=["cbg", "cbsa"])
    cmds["regress"].add_argument("--vif-threshold", type=float)
    cmds["regress"].add_argument("--knots", type=int)
    cmds["lsva"].add_argument("--subset", action="append",
                              help="all | urban | rural | category:NAME (repeatable)")
    cmds["lsva"].add_argument("--min-count", help="integer floor or 'auto'")
    cmds["lsva"].add_argument("--stopwords", help="stopword file, one word per line")
    cmds["sweep"].add_argument("--thresholds", help="e.g. 0-50 or 0,5,10")
    return parser


def _apply_overrides(cfg, args):
    def opt(name):
        return getattr(args, name, None)

    if opt("seed") is not None:
        cfg = cfg.replace("run", seed=args.seed)
    if opt("kind"):
        cfg = cfg.replace("classify", kind=args.kind)
    if opt("sidecar"):
        cfg = cfg.replace("classify", sidecar=args.sidecar)
    if opt("grid"):
        cfg = cfg.replace("classify", grid=args.grid)
    for flag, key in (("min_reviews", "min_reviews"), ("region_agg", "region_agg"), ("neutral", "neutral")):
        if opt(flag) is not None:
            cfg = cfg.replace("aggregate", **{key: opt(flag)})
    for flag in ("weights", "permutations", "alpha", "level"):
        if opt(flag) is not None:
            cfg = cfg.replace("spatial", **{flag: opt(flag)})
    for flag in ("vif_threshold", "knots"):
        if opt(flag) is not None:
            cfg = cfg.replace("regress", **{flag: opt(flag)})
    if opt("subset"):
        cfg = cfg.replace("lsva", subsets=",".join(args.subset))
    if opt("min_count") is not None:
        cfg = cfg.replace("lsva", min_count=args.min_count)
    if opt("stopwords"):
        cfg = cfg.replace("lsva", stopwords=args.stopwords)
    if opt("thresholds"):
        cfg = cfg.replace("sweep", thresholds=args.thresholds)
    return cfg


def _print_manifest(manifest, out) -> None:
    for s in manifest.stages:
        print(f"{s.stage:<10} {s.output_hash[:12]}  {', '.join(s.outputs)}")
    print(f"outputs in {out}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        pipe = Pipeline(cfg, args.out)
        cmd = args.command
        if cmd == "ingest":
            pipe.out.mkdir(parents=True, exist_ok=True)
            report = pipe.corpus.report.to_dict()
            write_json(pipe.path("corpus_report.json"), report)
            for k, v in report.items():
                print(f"{k}: {v}")
        elif cmd == "train":
            pipe.out.mkdir(parents=True, exist_ok=True)
            model, written = pipe.train()
            with open(pipe.path("model.pkl"), "wb") as fh:
                pickle.dump(model, fh)
            print(f"{model.kind.value} model, params {model.params}")
            print("wrote " + ", ".join(written + ["model.pkl"]))
        elif cmd == "sweep":
            pipe.run(until="classify", force=args.force)
            result = pipe.sweep()
            print(f"thresholds {result.thresholds[0]}..{result.thresholds[-1]}; "
                  f"regions {result.n_regions[0]} -> {result.n_regions[-1]}; wrote sweep.csv")
        else:
            until = {"compare": "aggregate", "run": None}.get(cmd, cmd)
            manifest = pipe.run(until=until, force=args.force)
            if cmd == "spatial":
                m = json.loads(pipe.path("moran.json").read_text())
                print(f"global Moran's I = {m['I']:.4f} (expected {m['expected_I']:.4f}), "
                      f"p = {m['p_value']:.4f}, n = {m['n']}")
            elif cmd == "compare":
                print(pipe.path("wilcoxon_matrix.csv").read_text(), end="")
            else:
                _print_manifest(manifest, pipe.out)
    except (ConfigError, CorpusError) as exc:
        print(f"parksent: error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"parksent: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
