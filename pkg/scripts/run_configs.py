"""Run every YAML file in configs/ and print one status line per scenario.

    python scripts/run_configs.py [--out out] [configs/*.yaml ...]
"""

import argparse
import sys
from pathlib import Path

from lcmorrey.harness import ScenarioConfig, exit_code, run

STATUS = {0: "PASS", 1: "GATE FAILED", 2: "ERROR"}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("configs", nargs="*", type=Path)
    ap.add_argument("--out", type=Path, default=Path("out"))
    args = ap.parse_args(argv)
    paths = args.configs or sorted((Path(__file__).resolve().parent.parent / "configs").glob("*.yaml"))
    codes = {}
    for path in paths:
        cfg = ScenarioConfig.load(path).with_overrides(out=args.out / path.stem)
        rep = run(cfg)
        codes[path.stem] = exit_code(rep)
        err = f"  [{rep['error']['stage']}: {rep['error']['message']}]" if rep["error"] else ""
        print(f"{path.stem:<24} {cfg.scenario:<20} {STATUS[codes[path.stem]]:<12} {rep['timings']['total']:6.2f}s{err}")
    return 2 if 2 in codes.values() else 0


if __name__ == "__main__":
    sys.exit(main())
