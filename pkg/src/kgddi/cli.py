"""Command-line entry point: ``kgddi <subcommand> [options]``."""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys

from threadpoolctl import threadpool_limits

from . import pipeline
from .config import EMBEDDING_METHODS, MODEL_NAMES, RunConfig, describe_keys, load_config
from .exceptions import ConfigError, KGDDIError
from .optim import derive_seed
from .synth import SyntheticSpec, generate_synthetic

SUBCOMMANDS = {
    "ingest": "parse inputs, merge identifiers and stage the graph without interaction predicates",
    "synth": "write a synthetic drug graph and interaction list to --out",
    "embed": "train the configured embeddings on the staged graph",
    "pairs": "sample non-interacting pairs and assign folds",
    "train": "cross-validate every (method, classifier) pair",
    "eval": "build the averaging ensemble of the best classifiers",
    "sweep-sigma": "run the pipeline once per sweep.sigmas value and compare",
    "report": "write report.json and report.csv for a completed run",
    "run": "all stages from ingest to report",
}


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="INI configuration file (keys listed below)")
    parser.add_argument("--seed", type=int, help="master seed (overrides [run] seed)")
    parser.add_argument("--deterministic", action="store_true", default=None,
                        help="run numeric libraries on one thread")
    parser.add_argument("--out", metavar="DIR", help="run directory (overrides [run] out)")
    parser.add_argument("--method", choices=EMBEDDING_METHODS, help="use only this embedding method")
    parser.add_argument("--model", choices=(*MODEL_NAMES, "mae"),
                        help="use only this classifier; 'mae' keeps all and reports their ensemble")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    epilog = "configuration keys (section, key = default ; meaning):\n" + describe_keys()
    parser = argparse.ArgumentParser(
        prog="kgddi", description="Predict drug-drug interactions from knowledge-graph embeddings.",
        epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, help_text in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text, epilog=epilog,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        _common(p)
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    run = {}
    if args.seed is not None:
        run["seed"] = args.seed
    if args.out:
        run["out"] = args.out
    if args.deterministic:
        run["deterministic"] = True
    cfg = cfg.with_updates(run=run)
    if args.method:
        cfg = cfg.with_updates(embedding={"methods": [args.method]})
    if args.model and args.model != "mae":
        cfg = cfg.with_updates(models={"kinds": [args.model]})
    return cfg


def _synth(cfg: RunConfig) -> dict:
    s = cfg.synthetic
    spec = SyntheticSpec(drugs=s.drugs, targets=s.targets, pathways=s.pathways, phenotypes=s.phenotypes,
                         targets_per_drug=s.targets_per_drug, min_shared=s.min_shared, noise=s.noise,
                         kegg_fraction=s.kegg_fraction, seed=derive_seed(cfg.run.seed, "synth"))
    return generate_synthetic(spec, cfg.run.out).paths


def dispatch(command: str, cfg: RunConfig):
    if command == "synth":
        return _synth(cfg)
    if command == "run":
        return {"run_dir": str(pipeline.run_pipeline(cfg))}
    if command == "sweep-sigma":
        return pipeline.sweep_sigma(cfg)["trends"]
    if command == "report":
        return {"rows": len(pipeline.emit_report(cfg.run.out)["rows"])}
    return pipeline.run_stage(command, cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        limit = threadpool_limits(1) if cfg.run.deterministic else contextlib.nullcontext()
        with limit:
            result = dispatch(args.command, cfg)
    except ConfigError as exc:
        print(f"kgddi: configuration error: {exc}", file=sys.stderr)
        return 2
    except KGDDIError as exc:
        print(f"kgddi: {exc}", file=sys.stderr)
        return 1
    if result is not None:
        print(json.dumps(result, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
