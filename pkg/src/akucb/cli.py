"""Command-line entry point: ``akucb run|preset|list-presets|check``."""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from . import harness
from .harness import ConfigError, apply_overrides, config_from_dict, load_config, run_experiment
from .selfcheck import run_checks


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out-dir", help=f"output directory (default: ${harness.OUT_DIR_ENV}/<name> or results/<name>)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--runs", type=int, help="number of independent runs")
    p.add_argument("--parallel", type=int, default=1, metavar="N", help="worker processes (default 1)")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VAL",
                   help="set a config key, e.g. horizon=1000 or traffic.loads=[0.07]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="akucb", description="Joint learning and link scheduling simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment from a TOML config file")
    p_run.add_argument("config")
    _add_run_flags(p_run)
    p_pre = sub.add_parser("preset", help="run a named preset experiment")
    p_pre.add_argument("name")
    _add_run_flags(p_pre)
    sub.add_parser("list-presets", help="list preset names")
    p_chk = sub.add_parser("check", help="run invariant and oracle checks on small graphs")
    p_chk.add_argument("--seed", type=int, default=0)
    return parser


def _execute(data: dict, args: argparse.Namespace) -> int:
    overrides = list(args.override)
    if args.seed is not None:
        overrides.append(f"master_seed={args.seed}")
    if args.runs is not None:
        overrides.append(f"runs={args.runs}")
    cfg = config_from_dict(apply_overrides(data, overrides))
    if args.parallel < 1:
        raise ConfigError("--parallel must be at least 1")
    result = run_experiment(cfg, args.out_dir, parallel=args.parallel, verbose=True)
    for path in result.files:
        print(f"wrote {path}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-presets":
            for name in harness.preset_names():
                print(f"{name:<26}{harness.preset_description(name)}")
            return 0
        if args.command == "check":
            return 0 if run_checks(args.seed) else 1
        if args.command == "preset":
            try:
                data = harness.preset(args.name)
            except KeyError:
                print(f"unknown preset {args.name!r}; valid names: {', '.join(harness.preset_names())}",
                      file=sys.stderr)
                return 2
            return _execute(data, args)
        return _execute(load_config(args.config), args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
