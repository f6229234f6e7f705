"""Audit NIDS dataset coverage of ATT&CK techniques.

    auditor run     --config cfg.json
    auditor ingest  --config cfg.json
    auditor extract --config cfg.json
    auditor score   --config cfg.json [--risk-combiner NAME]
    auditor detect  --config cfg.json [--include-partial true|false] [--techniques FILE]
    auditor assess  --config cfg.json [--assessor rules|remote|both] [--kb FILE]
                    [--techniques FILE] [--cache DIR]
    auditor report  --config cfg.json [--matrix FILE]

Exit codes: 0 ok, 1 usage error, 2 data error, 3 remote service failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import pipeline
from .errors import AuditorError
from .pipeline import PhaseError, PipelineConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_REMOTE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="pipeline config (JSON)")
    common.add_argument("--output", help="output directory (overrides config)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = _Parser(prog="auditor", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, text in [
        ("run", "all phases end to end"),
        ("ingest", "parse and merge ATT&CK bundles"),
        ("extract", "build the technique occurrence map for the entity selection"),
        ("score", "frequency and weighted risk ranking"),
        ("detect", "filter to network-detectable techniques"),
        ("assess", "assess technique/dataset coverage"),
        ("report", "compute analytics and write report files"),
    ]:
        p = sub.add_parser(name, parents=[common], help=text)
        if name in ("run", "score"):
            p.add_argument("--risk-combiner")
        if name in ("run", "detect"):
            p.add_argument("--include-partial", type=_bool, metavar="{true|false}")
        if name in ("run", "assess"):
            p.add_argument("--assessor", choices=pipeline.ASSESSORS)
            p.add_argument("--kb", help="dataset knowledge base file")
            p.add_argument("--cache", help="cache directory for remote assessments")
        if name in ("detect", "assess"):
            p.add_argument("--techniques", type=Path, help="technique list JSON to use as input")
        if name == "report":
            p.add_argument("--matrix", type=Path, help="coverage matrix JSON to report on")
    return parser


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    overrides = {}
    if args.output:
        overrides["output_dir"] = str(Path(args.output).resolve())
    for flag in ("risk_combiner", "include_partial", "assessor"):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[flag] = value
    if getattr(args, "kb", None):
        overrides["kb"] = str(Path(args.kb).resolve())
    if getattr(args, "cache", None):
        cache = str(Path(args.cache).resolve())
        overrides["remote"] = [replace(s, cache_dir=cache) for s in cfg.remote]
    return replace(cfg, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _config(args)
    except (AuditorError, OSError) as exc:
        print(f"auditor: [config] error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if args.command == "run":
            pipeline.run_pipeline(cfg)
        elif args.command == "ingest":
            pipeline.ingest(cfg)
        elif args.command == "extract":
            pipeline.extract(cfg)
        elif args.command == "score":
            pipeline.score(cfg)
        elif args.command == "detect":
            pipeline.detect(cfg, args.techniques)
        elif args.command == "assess":
            pipeline.assess(cfg, args.techniques)
        elif args.command == "report":
            pipeline.report(cfg, args.matrix)
    except PhaseError as exc:
        print(f"auditor: [{exc.phase}] error: {exc.cause}", file=sys.stderr)
        return exc.exit_code

    if args.command in ("run", "assess"):
        missing = pipeline.unassessed_count(cfg)
        if missing:
            print(
                f"auditor: [assess] error: {missing} pairs unassessed because the remote service failed",
                file=sys.stderr,
            )
            return EXIT_REMOTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
