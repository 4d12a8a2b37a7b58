"""Simulation-based calibration of the sampler on scenario 2f.

    python scripts/calibration.py --draws 50
"""

import argparse

import numpy as np

from spatialci.bayes.calibration import run_sbc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--draws", type=int, default=50)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--param", default="betaZ")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    def show(k, truth, lo, hi):
        mark = "covered" if lo <= truth <= hi else "MISSED"
        print(f"{k:3d}  truth {truth:+.3f}  90% CI ({lo:+.3f}, {hi:+.3f})  {mark}", flush=True)

    res = run_sbc(n_draws=args.draws, n=args.n, param=args.param, seed=args.seed, progress=show)
    n_post = res.extra.get("n_draws_per_fit")
    print(f"coverage of 90% intervals: {100 * res.coverage:.1f}% over {args.draws} prior draws")
    if n_post:
        hist, _ = np.histogram(res.ranks, bins=5, range=(0, n_post + 1))
        print("rank histogram (5 bins):", hist.tolist())


if __name__ == "__main__":
    main()
