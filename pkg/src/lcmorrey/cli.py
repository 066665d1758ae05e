"""Command-line entry point: one subcommand per scenario.

Exit codes: 0 when every gate passed, 1 when a hypothesis or verdict gate
failed, 2 on errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import SCENARIOS, ScenarioConfig, exit_code, run


def _grid(text: str) -> tuple:
    try:
        n, L = text.split(",")
        return int(n), float(L)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected N,L (e.g. 128,6.283), got {text!r}") from exc


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lcmorrey", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="scenario", required=True)
    for name in SCENARIOS:
        sp = sub.add_parser(name, help=f"run the {name} scenario")
        sp.add_argument("--config", help="YAML scenario file; flags override its values")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=_seed)
        sp.add_argument("--grid", type=_grid, help="N,L")
        sp.add_argument("--p", type=float)
        sp.add_argument("--quiet", action="store_true", help="print only the gate line")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = ScenarioConfig.load(args.config)
            if cfg.scenario != args.scenario:
                raise ValueError(f"config is for {cfg.scenario!r}, subcommand is {args.scenario!r}")
        else:
            cfg = ScenarioConfig(args.scenario)
        cfg = cfg.with_overrides(out=args.out, seed=args.seed, grid=args.grid, p=args.p)
        report = run(cfg)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    code = exit_code(report)
    if not args.quiet:
        print(json.dumps({k: report[k] for k in ("stages", "gate", "error")}, indent=2, sort_keys=True))
    status = {0: "PASS", 1: "GATE FAILED", 2: "ERROR"}[code]
    print(f"{args.scenario}: {status} (report in {cfg.output_dir}/report.json)")
    return code


if __name__ == "__main__":
    sys.exit(main())
