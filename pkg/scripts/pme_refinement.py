"""L1 error against the Barenblatt profile in the porous-medium limit, over a grid ladder.

    python scripts/pme_refinement.py --cells 32 64 128 256
"""
import argparse
import math

import numpy as np

from dswave.scenarios import barenblatt_profile, build_control, build_problem, preset_config
from dswave.timestepper import run


def l1_error(cells: int, gamma: float) -> float:
    cfg = preset_config("pme_limit", grid={"cells": [cells]}, parameters={"gamma": gamma})
    problem = build_problem(cfg)
    sol = run(problem, build_control(cfg))
    x = problem.grid.centers()[0]
    exact = barenblatt_profile(x, cfg.initial.t0 + sol.T, cfg.initial.constant)
    return float(np.sum(np.abs(sol.values[-1] - exact)) * problem.grid.h[0])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, nargs="+", default=[32, 64, 128, 256])
    ap.add_argument("--gamma", type=float, default=0.999)
    args = ap.parse_args()
    prev = None
    print(f"{'cells':>6} {'L1 error':>12} {'ratio':>7} {'order':>6}")
    for cells in args.cells:
        err = l1_error(cells, args.gamma)
        if prev is None:
            print(f"{cells:>6} {err:>12.4e}")
        else:
            r = prev / err
            print(f"{cells:>6} {err:>12.4e} {r:>7.2f} {math.log2(r):>6.2f}")
        prev = err


if __name__ == "__main__":
    main()
