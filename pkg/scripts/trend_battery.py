"""Rate, QSL and bracket trends over 20 seeds, n = 1..12."""
import argparse

import numpy as np

from rcbar.asymptotics import martingale_bracket
from rcbar.experiments import ESTIMATORS, ExperimentConfig, default_limits, run_experiment
from rcbar.model import derive_moments, reference_spec
from rcbar.simulate import simulate_tree


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--gens", type=int, default=12)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=77)
    args = p.parse_args()

    spec = reference_spec()
    m = derive_moments(spec)
    limits = default_limits(spec, args.seed)
    rep = run_experiment(ExperimentConfig(spec, args.gens, args.seeds, args.seed), limits)
    L = limits.L

    print("n  " + "  ".join(f"{name:>8s}" for name in ESTIMATORS) + "       qsl   bracket")
    trees = [simulate_tree(spec, args.gens, args.seed, replication=r) for r in range(args.seeds)]
    for k in range(1, args.gens + 1):
        rates = [np.median(rep.rate_series[name][:, k - 1]) for name in ESTIMATORS]
        dist = np.median([np.linalg.norm(martingale_bracket(t, m, k) - L) / np.linalg.norm(L)
                          for t in trees])
        print(f"{k:2d} " + "  ".join(f"{r:8.3f}" for r in rates)
              + f"  {np.median(rep.qsl_series[:, k - 1]):8.3f}  {dist:8.4f}")
    print(f"QSL target {rep.qsl_target:.4f}")


if __name__ == "__main__":
    main()
