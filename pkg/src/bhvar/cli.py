"""Command-line entry point: ``bhvar verify | evolve | cat | weights | dual``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from . import checks, fock, runs
from .config import ConfigError, load_config

log = logging.getLogger("bhvar")


def _parse_values(text: str) -> list:
    return [yaml.safe_load(v) for v in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bhvar", description="Coherent-state mean-field schemes for the Bose-Hubbard model.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the identity suite")
    v.add_argument("--scope", default="all", choices=("all",) + checks.SCOPES)
    v.add_argument("--report", help="write the JSON report here instead of stdout")

    e = sub.add_parser("evolve", help="integrate one configured run")
    e.add_argument("--config", required=True)
    e.add_argument("--sweep", metavar="KEY=V1,V2,...", help="fan out over values of one dotted config key")
    e.add_argument("--jobs", type=int, default=1, help="parallel workers for --sweep")

    for name, text in (("cat", "cat-state report"), ("weights", "Glauber sector weights"), ("dual", "site/momentum dual parameters")):
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True)
    return p


def _cmd_verify(args) -> int:
    report = checks.run_identity_suite(args.scope)
    text = json.dumps(report, indent=2)
    if args.report:
        Path(args.report).write_text(text)
    else:
        print(text)
    for c in report["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"{status} {c['name']}: residual {c['residual']:.3e} (tol {c['tolerance']:.0e})", file=sys.stderr)
    return 0 if report["passed"] else 1


def _cmd_evolve(args) -> int:
    if args.sweep:
        key, _, values = args.sweep.partition("=")
        if not key or not values:
            raise ConfigError("--sweep", "expected KEY=V1,V2,...")
        base = yaml.safe_load(Path(args.config).read_text())
        load_config(args.config, "evolve")  # full validation of the base document
        summaries = runs.run_sweep(runs.sweep_configs(base, key, _parse_values(values)), args.jobs)
    else:
        summaries = [runs.run_evolution(load_config(args.config, "evolve"))]
    for s in summaries:
        print(json.dumps({k: s[k] for k in ("status", "csv", "drift", "wall_time_s")}))
    return 0 if all(s["status"] == "ok" for s in summaries) else 1


def _cmd_report(kind):
    driver = {"cat": runs.run_cat, "weights": runs.run_weights, "dual": runs.run_dual}[kind]

    def cmd(args) -> int:
        cfg = load_config(args.config, kind)
        report = driver(cfg)
        print(json.dumps(report, indent=2))
        return 0

    return cmd


COMMANDS = {
    "verify": _cmd_verify,
    "evolve": _cmd_evolve,
    "cat": _cmd_report("cat"),
    "weights": _cmd_report("weights"),
    "dual": _cmd_report("dual"),
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, fock.CapacityError, OSError) as err:
        print(f"bhvar {args.command}: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"bhvar {args.command}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
