"""Skewness of the scaled variance-estimator errors as n grows.

The intercept coordinates inherit the large skewness of the squared noise and
approach normality slowly; this prints the trend at a fixed replication count.
"""
import argparse

from rcbar.experiments import COORDS, ExperimentConfig, default_limits, run_experiment
from rcbar.model import reference_spec


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=5)
    p.add_argument("--gens", type=int, nargs="+", default=[7, 9, 11, 13])
    args = p.parse_args()

    spec = reference_spec()
    limits = default_limits(spec, args.seed)
    for n in args.gens:
        rep = run_experiment(ExperimentConfig(spec, n, args.reps, args.seed), limits)
        cells = []
        for name in ("eta", "zeta", "nu"):
            for c, s in zip(COORDS[name], rep.normality[name]):
                cells.append(f"{c} {s.skewness:+.3f}")
        print(f"n={n:2d}  " + "  ".join(cells))


if __name__ == "__main__":
    main()
