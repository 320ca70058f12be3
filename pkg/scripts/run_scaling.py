#!/usr/bin/env python3
"""Empirical check that the posterior-mean mse decays at the fast 1/n rate.

    python scripts/run_scaling.py --out runs/scaling --threads 8
"""

import argparse
import os

from qgibbs.bounds import scaling_experiment
from qgibbs.simulate import NoiseFamily, SimulationSpec, lmc_method


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--n-grid", default="100,200,400,800")
    parser.add_argument("--reps", type=int, default=10)
    parser.add_argument("--s", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--n-iter", type=int, default=30000)
    parser.add_argument("--burn-in", type=int, default=500)
    parser.add_argument("--thin", type=int, default=10)
    args = parser.parse_args()

    n_grid = [int(v) for v in args.n_grid.split(",")]
    template = SimulationSpec(
        max(n_grid), 2 * max(n_grid), args.s, NoiseFamily.gaussian(3.0), 0.5,
        args.reps, args.seed,
    )
    record = scaling_experiment(
        template, n_grid, args.reps, args.seed,
        method=lmc_method(n_iter=args.n_iter, burn_in=args.burn_in, thin=args.thin),
        threads=args.threads,
    )
    os.makedirs(args.out, exist_ok=True)
    record.to_csv(os.path.join(args.out, "scaling.csv"))
    with open(os.path.join(args.out, "scaling_summary.txt"), "w") as fh:
        fh.write(record.slope_summary() + "\n")
    for p in record.points:
        print(f"n={p.n:5d} d={p.d:5d} mean_mse={p.mean_mse:.6f} "
              f"sd={p.sd_mse:.6f} delta={p.theoretical_delta:.6f}")
    print(record.slope_summary())


if __name__ == "__main__":
    main()
