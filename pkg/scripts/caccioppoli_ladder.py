"""Caccioppoli empirical ratios on a k-ladder for dam-break runs at several resolutions.

    python scripts/caccioppoli_ladder.py --cells 16 32 64 --levels 5
"""
import argparse

import numpy as np

from dswave.cli import k_ladder
from dswave.energy import Cylinder, caccioppoli_report
from dswave.scenarios import build_control, build_problem, preset_config
from dswave.timestepper import run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, nargs="+", default=[16, 32, 64])
    ap.add_argument("--levels", type=int, default=5)
    ap.add_argument("--top", type=float, default=0.75, help="ladder top as a fraction of the outer max")
    ap.add_argument("--T", type=float, default=0.6)
    args = ap.parse_args()

    inner = Cylinder((0.5, 0.5), 0.5 * args.T, 0.15, args.T / 6)
    outer = Cylinder((0.5, 0.5), 0.5 * args.T, 0.3, args.T / 2.4)
    levels = None
    for cells in args.cells:
        # halve dt with h so the pair refines in space and time together
        dt = 0.01 * 32 / cells
        cfg = preset_config("dam_break", grid={"cells": [cells, cells]}, stepping={"T": args.T, "dt_max": dt})
        sol = run(build_problem(cfg), build_control(cfg))
        if levels is None:
            levels = k_ladder(sol, outer, args.levels, top=args.top)
            print("k:", " ".join(f"{k:8.4f}" for k in levels))
        reps = [caccioppoli_report(sol, inner, outer, k) for k in levels]
        ratios = np.array([r.empirical_ratio for r in reps])
        lhs = np.array([r.lhs_total for r in reps])
        print(f"{cells:>4}^2 ratio:", " ".join(f"{r:8.4f}" for r in ratios), f" lhs monotone: {bool(np.all(np.diff(lhs) <= 0))}")


if __name__ == "__main__":
    main()
