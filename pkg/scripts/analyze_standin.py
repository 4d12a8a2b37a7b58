"""End-to-end areal analysis on the synthetic stand-in data set.

    python scripts/analyze_standin.py --workdir results/standin
"""

import argparse
from pathlib import Path

from spatialci.harness import analyze_csv, write_standin


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--workdir", default="results/standin")
    ap.add_argument("--n", type=int, default=445)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    wd = Path(args.workdir)
    wd.mkdir(parents=True, exist_ok=True)
    config = write_standin(wd / "data.csv", wd / "edges.txt", n=args.n, seed=args.seed)
    print(f"truth: local {config.betaZ}, interference {config.betaZbar}")
    report = analyze_csv(wd / "data.csv", wd / "edges.txt", log_exposure=True)
    print(report.to_text())
    report.write_csv(wd / "report.csv")


if __name__ == "__main__":
    main()
