"""Command-line interface.

Subcommands run either the full pipeline or exactly one stage against the
artifacts of a run directory, from a YAML configuration (built-in defaults
when omitted). Exit codes: 0 ok, 2 configuration error, 3 data error,
4 numeric divergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import dump_default_config, load_config
from .errors import (
    ConfigError,
    DataError,
    DivergenceDetected,
    ParallelChainError,
    SoftspinError,
)
from .pipeline import (
    run_pipeline,
    stage_analyze,
    stage_conformal,
    stage_field,
    stage_graph,
    stage_report,
    stage_simulate,
    stage_synth,
    stage_validate,
)
from .sampler import Engine

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGENCE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softspin",
        description="Continuous-spin simulation of territorial outcomes "
                    "with conformal uncertainty",
    )
    parser.add_argument("--print-config", action="store_true",
                        help="print the full default configuration and exit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="YAML configuration file (defaults used when omitted)")
    common.add_argument("--seed", type=int, default=None,
                        help="override the global seed")
    common.add_argument("--out", type=Path, default=None,
                        help="override the output directory")
    common.add_argument("--engine", choices=["ising", "langevin", "both"],
                        default=None, help="restrict the engines to run")
    common.add_argument("--workers", type=int, default=None,
                        help="worker processes for parallel chains")

    sub = parser.add_subparsers(dest="command")
    for name, text in (
        ("pipeline", "run every stage in order and write the manifest"),
        ("synth", "generate the synthetic dataset"),
        ("validate", "load and validate the dataset"),
        ("field", "build composites, PCA and the external field"),
        ("graph", "build the profile-similarity graph"),
        ("simulate", "run the annealed chains"),
        ("conformal", "compute calibrated prediction intervals"),
        ("analyze", "comparison, associations and group summaries"),
        ("report", "assemble the consolidated report"),
    ):
        sub.add_parser(name, parents=[common], help=text)
    return parser


def _engines_from_flag(flag):
    if flag in (None, "both"):
        return None
    return [Engine(flag)]


_ENGINE_STAGES = {"simulate": stage_simulate, "conformal": stage_conformal,
                  "analyze": stage_analyze}
_PLAIN_STAGES = {"synth": stage_synth, "validate": stage_validate,
                 "field": stage_field, "graph": stage_graph, "report": stage_report}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.print_config:
        sys.stdout.write(dump_default_config())
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    stage = args.command
    try:
        overrides = {"seed": args.seed, "workers": args.workers}
        if args.out is not None:
            overrides["out"] = str(args.out)
        if args.engine not in (None, "both"):
            overrides["engines"] = [args.engine]
        cfg = load_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"[config] {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = cfg.out
    try:
        if stage == "pipeline":
            written = run_pipeline(cfg, out)
        elif stage in _ENGINE_STAGES:
            written = _ENGINE_STAGES[stage](cfg, out, _engines_from_flag(args.engine))
        else:
            written = _PLAIN_STAGES[stage](cfg, out)
    except Exception as exc:  # stage-tagged reporting with stable exit codes
        print(f"[{stage}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    for path in written:
        print(path)
    return EXIT_OK


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, DivergenceDetected):
        return EXIT_DIVERGENCE
    if isinstance(exc, ParallelChainError):
        if any(isinstance(e, DivergenceDetected) for _, e in exc.failures):
            return EXIT_DIVERGENCE
        return EXIT_DATA
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, DataError):
        return EXIT_DATA
    if isinstance(exc, SoftspinError):
        return EXIT_DATA
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
