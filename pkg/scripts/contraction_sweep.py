"""Fit the T-exponent of the bilinear terms for several p and compare with 1/2 - n/(2p).

Writes contraction_sweep.csv into --out.
"""

import argparse
from pathlib import Path

import numpy as np

from lcmorrey.generators import self_similar_inputs
from lcmorrey.harness import emit_csv
from lcmorrey.mild import contraction_exponent_fit
from lcmorrey.spectral import Field, GridSpec


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, nargs="+", default=[3.0, 4.0, 6.0, 8.0, 16.0])
    ap.add_argument("--points", type=int, default=128)
    ap.add_argument("--out", type=Path, default=Path("out/contraction_sweep"))
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    g = GridSpec(2, args.points, 2 * np.pi)
    d = Field(g, np.stack([np.ones(g.shape), np.zeros(g.shape)]))
    T_list = np.geomspace((6 * g.h) ** 2, (g.length / 10) ** 2, 6)
    rows = []
    for p in args.p:
        u, V = self_similar_inputs(g, p)
        fit = contraction_exponent_fit(u, V, d, p, T_list)
        rows.append((p, fit.predicted, fit.slope_B12, fit.slope_B34))
        print(f"p={p:5.1f}  predicted {fit.predicted:.4f}  B1+B2 {fit.slope_B12:.4f}  B3+B4 {fit.slope_B34:.4f}")
    emit_csv(args.out / "contraction_sweep.csv", ["p", "predicted", "slope_B12", "slope_B34"], rows)


if __name__ == "__main__":
    main()
