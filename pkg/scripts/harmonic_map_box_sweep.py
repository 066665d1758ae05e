"""Decay-gate ratio of the harmonic-map director as the box grows.

The gradient has constant magnitude 2*pi/L, so the gate only passes once L is
large enough; this sweep locates the crossover at a fixed number of points.
"""

import argparse
from pathlib import Path

import numpy as np

from lcmorrey.generators import harmonic_map
from lcmorrey.harness import emit_csv
from lcmorrey.morrey import check_decay_condition
from lcmorrey.spectral import Field, GridSpec, deformation_tensor


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lengths", type=float, nargs="+", default=[8.0, 16.0, 24.0, 28.0, 30.0, 32.0, 48.0])
    ap.add_argument("--points", type=int, default=64)
    ap.add_argument("--p", type=float, default=4.0)
    ap.add_argument("--out", type=Path, default=Path("out/harmonic_map_box_sweep"))
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    rows = []
    for L in args.lengths:
        N = args.points
        g = GridSpec(2, N, L)
        V = Field(g, harmonic_map(g))
        rep = check_decay_condition(g.zeros(1), deformation_tensor(V), args.p)
        rows.append((L, N, rep.worst_ratio, int(rep.passed)))
        print(f"L={L:6.1f} N={N:4d}  worst ratio {rep.worst_ratio:.4f}  {'pass' if rep.passed else 'fail'}")
    emit_csv(args.out / "box_sweep.csv", ["L", "N", "worst_ratio", "passed"], rows)


if __name__ == "__main__":
    main()
