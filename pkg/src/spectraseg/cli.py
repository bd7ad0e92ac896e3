"""Command-line entry point.

One subcommand per pipeline stage plus ``pipeline`` to chain several. All
subcommands share the same flags; values given on the command line override
the config file, which overrides the built-in defaults. The SPECTRASEG_LOG
environment variable (error, info or debug) controls log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .errors import SpectrasegError
from .params import build_run_config, parse_config_file
from .pipeline import STAGES, build_context, run_pipeline

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--manifest", required=True, help="input manifest TSV")
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--fold", type=int, help="target fold index 0..3")
    parser.add_argument("--dataset", choices=("pascal5i", "coco20i"))
    parser.add_argument("--scheme", choices=("sequential", "interleaved"))
    parser.add_argument(
        "--tau", type=float, help="IoU threshold for segment replacement"
    )
    parser.add_argument(
        "--lambda-affinity",
        type=float,
        dest="lambda_affinity",
        help="weight of the color/position affinity term",
    )
    parser.add_argument(
        "--k-eig", type=int, dest="k_eig", help="eigensegments per image"
    )
    parser.add_argument(
        "--k-nn", type=int, dest="k_nn", help="neighbours in the KNN graph"
    )
    parser.add_argument("--seed", type=int, help="eigensolver start seed")
    parser.add_argument("--workers", type=int, help="parallel record workers")
    parser.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectraseg",
        description="Zero-shot segmentation pipeline: prediction, spectral "
        "eigensegments, fusion, evaluation and analytics.",
    )
    sub = parser.add_subparsers(dest="stage", required=True)
    for stage in STAGES:
        stage_parser = sub.add_parser(stage, help=f"run the {stage} stage")
        _add_common_flags(stage_parser)
    chain = sub.add_parser("pipeline", help="run several stages in order")
    _add_common_flags(chain)
    chain.add_argument(
        "--stages",
        default="predict,segments,fuse,eval",
        help="comma-separated stage list (default: predict,segments,fuse,eval)",
    )
    return parser


def _configure_logging() -> None:
    raw = os.environ.get("SPECTRASEG_LOG", "error").strip().lower()
    if raw not in _LOG_LEVELS:
        raise ValueError(
            f"SPECTRASEG_LOG must be one of {sorted(_LOG_LEVELS)}, got {raw!r}"
        )
    logging.basicConfig(
        level=_LOG_LEVELS[raw],
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv: list[str] | None = None) -> int:
    try:
        _configure_logging()
    except ValueError as exc:
        print(f"spectraseg: {exc}", file=sys.stderr)
        return 2
    args = build_parser().parse_args(argv)
    try:
        file_values = parse_config_file(args.config) if args.config else {}
        config = build_run_config(
            file_values,
            tau_fuse=args.tau,
            lambda_affinity=args.lambda_affinity,
            k_eig=args.k_eig,
            k_nn=args.k_nn,
            seed=args.seed,
            workers=args.workers,
            out_dir=Path(args.out) if args.out else None,
        )
        ctx = build_context(
            args.manifest,
            config,
            dataset=args.dataset,
            fold=args.fold,
            scheme=args.scheme,
        )
        if args.stage == "pipeline":
            stages = [s.strip() for s in args.stages.split(",") if s.strip()]
        else:
            stages = [args.stage]
        result = run_pipeline(ctx, stages)
    except (SpectrasegError, ValueError, OSError) as exc:
        print(f"spectraseg: {exc}", file=sys.stderr)
        return 2

    for stage in result.stages_run:
        n_bad = sum(1 for e in result.errors if e.stage == stage)
        print(f"{stage}: {len(ctx.manifest.records) - n_bad} ok, {n_bad} failed")
    eval_path = ctx.out_dir / "eval.json"
    if "eval" in result.stages_run and eval_path.is_file():
        doc = json.loads(eval_path.read_text(encoding="utf-8"))
        print(
            f"miou={doc['miou']:.6f} fb_iou={doc['fb_iou']:.6f} "
            f"source={doc['source']} config={doc['config_hash']}"
        )
    if not result.ok:
        for err in result.errors:
            print(f"error [{err.stage}] {err.record}: {err.error}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
