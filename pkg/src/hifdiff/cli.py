"""Command-line entry point: ``generate``, ``features`` and ``train-eval``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .pipeline import PipelineConfig, cmd_features, cmd_generate, cmd_train_eval, load_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hifdiff", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", required=True, help="run directory")
        p.add_argument("--config", help="pipeline config JSON (defaults to <out>/config.json if present)")
        p.add_argument("--seed", type=int, help="global seed")
        p.add_argument("--jobs", type=int, help="worker processes for per-scenario work")
        p.add_argument("-v", "--verbose", action="store_true")

    gen = sub.add_parser("generate", help="synthesize the scenario waveforms")
    common(gen)
    gen.add_argument("--limit", type=int, help="class-stratified subset of this many scenarios")

    feat = sub.add_parser("features", help="extract features and rank them by information gain")
    common(feat)
    feat.add_argument("--top-k", type=int, dest="top_k")

    te = sub.add_parser("train-eval", help="grid-search, cross-validate and report all classifiers")
    common(te)
    te.add_argument("--top-k", type=int, dest="top_k")
    te.add_argument("--folds", type=int)
    te.add_argument("--grid", dest="grid_file", help="classifier grid JSON")
    return parser


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.command != "generate" and (Path(args.out) / "config.json").exists():
        cfg = load_config(Path(args.out) / "config.json")
    else:
        cfg = PipelineConfig()
    overrides = {"out_dir": args.out}
    if args.seed is not None:
        overrides["global_seed"] = args.seed
    for name in ("jobs", "limit", "top_k", "folds", "grid_file"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return dataclasses.replace(cfg, **overrides)


COMMANDS = {"generate": cmd_generate, "features": cmd_features, "train-eval": cmd_train_eval}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except Exception as exc:  # surfaced as machine-readable JSON
        err = {"command": args.command, "error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(err), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
