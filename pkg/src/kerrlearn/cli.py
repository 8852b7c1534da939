"""Command-line entry point: ``kerrlearn <command> --config FILE [--set key=value ...]``."""
from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, ExperimentConfig, parse_pairs
from .experiments import RUNNERS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kerrlearn", description="Kerr-oscillator quantum kernel experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in RUNNERS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or name).strip().splitlines()[0])
        p.add_argument("--config", help="flat key = value config file (defaults used if omitted)")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key; repeatable")
    return parser


def load_config(path, overrides) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(path) if path else ExperimentConfig()
    if overrides:
        cfg = cfg.with_overrides(parse_pairs(overrides))
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
        manifest = RUNNERS[args.command](cfg)
    except (ConfigError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
