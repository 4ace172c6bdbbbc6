"""Command-line front end::

    fairincome solve    [--config PATH] [--method M] [--out PATH] [--format json|csv]
    fairincome simulate [--config PATH] [--seed S] [--steps K] ...
    fairincome verify   [--config PATH] ...
    fairincome sweep    --sweep-param gamma --sweep-values 0.5,1,2 ...

Without ``--config`` the bundled example config is used. Without ``--out``
the JSON report goes to stdout. ``FAIRINCOME_OUTPUT_DIR`` sets the directory
that relative ``--out`` paths (and default report names) resolve against.
"""
from __future__ import annotations

import argparse
import os
import sys
from importlib import resources
from pathlib import Path

from . import commands
from .config import METHODS, config_from_dict, load_config, parse_config
from .errors import ParseError, ReportIOError, ValidationError
from .reporting import FORMATS, dumps, write_report

OUTPUT_DIR_ENV = "FAIRINCOME_OUTPUT_DIR"


def example_config_text() -> str:
    return resources.files("fairincome").joinpath("data/example.yaml").read_text(encoding="utf-8")


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML/JSON run config (default: bundled example)")
    common.add_argument("--method", choices=METHODS, help="override the config's method")
    common.add_argument("--out", help="report destination")
    common.add_argument("--format", choices=FORMATS, default="json")
    common.add_argument("--seed", type=int, help="override simulation and verify seeds")
    common.add_argument("--steps", type=int, help="override simulation steps")

    parser = argparse.ArgumentParser(prog="fairincome", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="compute the equilibrium")
    sub.add_parser("simulate", parents=[common], help="run the agent-based job-switching model")
    sub.add_parser("verify", parents=[common], help="run the identity checks; nonzero exit on failure")
    sweep = sub.add_parser("sweep", parents=[common], help="re-solve over a parameter range")
    sweep.add_argument("--sweep-param", required=True, choices=commands.SWEEP_PARAMS)
    sweep.add_argument("--sweep-values", required=True, help="comma-separated values")
    return parser


def _load(args):
    cfg = load_config(args.config) if args.config else parse_config(example_config_text())
    if args.method is None and args.seed is None and args.steps is None:
        return cfg
    # overrides go back through validation, e.g. burn_in must still fit
    doc = cfg.to_dict()
    if args.method:
        doc["method"] = args.method
    if args.seed is not None:
        doc["verify"]["seed"] = args.seed
        if "simulation" in doc:
            doc["simulation"]["seed"] = args.seed
    if args.steps is not None:
        if "simulation" not in doc:
            raise ValidationError("steps", "the config has no simulation section")
        doc["simulation"]["steps"] = args.steps
    return config_from_dict(doc)


def _destination(args):
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if args.out:
        out = Path(args.out)
        return Path(env_dir) / out if env_dir and not out.is_absolute() else out
    if env_dir:
        return Path(env_dir) / f"{args.command}.{args.format}"
    return None


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        status = 0
        if args.command == "solve":
            report = commands.cmd_solve(cfg)
            status = 1 if report["results"]["errors"] else 0
        elif args.command == "simulate":
            report = commands.cmd_simulate(cfg)
        elif args.command == "verify":
            report, status = commands.cmd_verify(cfg)
        else:
            try:
                values = [float(v) for v in args.sweep_values.split(",") if v.strip()]
            except ValueError:
                raise ValidationError("sweep_values", f"not a comma-separated list of numbers: {args.sweep_values!r}")
            report = commands.cmd_sweep_report(cfg, args.sweep_param, values)
    except (ParseError, ValidationError) as exc:
        where = f" in {args.config}" if args.config else ""
        print(f"fairincome: config error{where}: {exc}", file=sys.stderr)
        return 2

    dest = _destination(args)
    if dest is None:
        if args.format != "json":
            print("fairincome: --format csv needs --out", file=sys.stderr)
            return 2
        sys.stdout.write(dumps(report))
    else:
        try:
            for path in write_report(report, args.format, dest):
                print(path, file=sys.stderr)
        except ReportIOError as exc:
            print(f"fairincome: {exc}", file=sys.stderr)
            return 3
    if args.command == "verify":
        failed = [c["name"] for c in report["results"]["checks"] if c["status"] == "fail"]
        if failed:
            print("fairincome: failed checks: " + ", ".join(failed), file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
