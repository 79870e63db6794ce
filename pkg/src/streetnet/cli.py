"""Command line entry point.

Exit codes: 0 success, 1 stage failure, 2 invalid manifest or arguments.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .pipeline import STAGES, ManifestError, Pipeline, StageError, load_manifest
from .synthetic import planted_corpus, write_corpus


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--manifest", required=True, help="INI manifest describing the corpus")
    p.add_argument("--out", help="output directory (overrides the manifest)")
    p.add_argument("--seed", type=int, help="seed for selection and clustering (overrides the manifest)")
    p.add_argument("--force", action="store_true", help="rerun stages even when outputs are current")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for per-city stages")
    p.add_argument("--highway-filter", help="comma-separated highway tag values to keep")
    p.add_argument(
        "--keep-geometry-nodes",
        action="store_true",
        default=None,
        help="keep pass-through way nodes as graph vertices",
    )
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streetnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()
    for stage in STAGES:
        sub.add_parser(stage, parents=[common], help=f"run the {stage} stage only")
    sub.add_parser("run", parents=[common], help="run every enabled stage in order")

    synth = sub.add_parser("synth", help="write a planted two-type synthetic corpus")
    synth.add_argument("directory")
    synth.add_argument("--per-type", type=int, default=20, help="cities per planted type")
    synth.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.command == "synth":
        manifest = write_corpus(
            args.directory,
            planted_corpus(args.per_type, seed=args.seed),
            {"corpus": {"seed": args.seed}, "project": {"isomap_escalate": "true"}},
        )
        print(manifest)
        return 0

    hf = [h.strip() for h in args.highway_filter.split(",") if h.strip()] if args.highway_filter else None
    try:
        manifest = load_manifest(
            args.manifest,
            output=args.out,
            seed=args.seed,
            highway_filter=hf,
            keep_geometry_nodes=args.keep_geometry_nodes,
        )
    except ManifestError as exc:
        print(f"invalid manifest: {exc}", file=sys.stderr)
        return 2

    stages = STAGES if args.command == "run" else (args.command,)
    pipeline = Pipeline(manifest, force=args.force, jobs=args.jobs)
    try:
        status = pipeline.run(stages)
    except StageError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return 1
    for stage, state in status.items():
        print(f"{stage:<9} {state}")
    print(f"artifacts in {manifest.output}")
    return 0
