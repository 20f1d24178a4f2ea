"""Command line entry point: ``optinput design|baseline|table``.

Configuration precedence is command line > config file > profile > defaults.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .pipeline import (BASELINES, PROFILES, ExperimentConfig, StageError, format_table,
                       run_baseline, run_pipeline, write_report)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(args) -> ExperimentConfig:
    values: dict = {}
    file_values: dict = {}
    if args.config:
        with open(args.config) as fh:
            file_values = json.load(fh)
        if not isinstance(file_values, dict):
            raise ValueError("config file must hold a JSON object")
    profile = args.profile or file_values.pop("profile", None)
    if profile:
        if profile not in PROFILES:
            raise ValueError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
        values.update(PROFILES[profile])
    values.update(file_values)
    for key in ("criterion", "seed", "threads", "n_seq", "burn_in"):
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    for item in args.set or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ValueError(f"--set expects key=value, got {item!r}")
        values[key.strip().replace("-", "_")] = _parse_value(raw)
    return ExperimentConfig.from_dict(values)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with experiment settings")
    common.add_argument("--profile", help=f"preset: {', '.join(sorted(PROFILES))}")
    common.add_argument("--criterion", choices=("det", "trinv"))
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker cap for score replications")
    common.add_argument("--n-seq", dest="n_seq", type=int)
    common.add_argument("--burn-in", dest="burn_in", type=int)
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override any config key (value parsed as JSON)")
    common.add_argument("--out", help="directory for CSV/JSON outputs")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="optinput", description="Optimal input design for state-space models.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("design", parents=[common], help="design an optimal input and evaluate it")
    p.add_argument("--dump-cycles", dest="dump_cycles", metavar="PATH", help="write prime cycles, one per line")
    p = sub.add_parser("baseline", parents=[common], help="evaluate a white-noise baseline input")
    p.add_argument("--kind", choices=BASELINES, required=True)
    p = sub.add_parser("table", parents=[common], help="design plus both baselines, printed as a table")
    p.add_argument("--dump-cycles", dest="dump_cycles", metavar="PATH")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args)
    except (OSError, ValueError, TypeError) as exc:
        print(f"optinput: [config] {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "design":
            reports = [run_pipeline(config, dump_cycles_path=args.dump_cycles)]
        elif args.command == "baseline":
            reports = [run_baseline(config, args.kind)]
        else:
            reports = [run_pipeline(config, dump_cycles_path=args.dump_cycles)]
            reports += [run_baseline(config, k) for k in BASELINES]
    except StageError as exc:
        print(f"optinput: {exc}", file=sys.stderr)
        return 2

    design = reports[0].design
    if design is not None:
        print(f"basis inputs: {reports[0].n_bases}")
        for j, (b, g) in enumerate(zip(reports[0].bases, design.gamma_star)):
            ci = "" if design.ci_halfwidth is None else f" +- {design.ci_halfwidth[j]:.4f}"
            print(f"  gamma[{j}] = {g:.4f}{ci}   {b.cycle}")
    print(format_table(reports))
    if args.out:
        for rep in reports:
            write_report(rep, args.out, config)
    return 0


if __name__ == "__main__":
    sys.exit(main())
