"""Natural-property test across input lengths: random functions vs parities."""

import argparse

from hardamp.bitfunc import chi
from hardamp.learner import default_gamma, density_experiment, fourier_sampling_learner, natural_property_test
from hardamp.rng import child, make_rng


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ns", type=int, nargs="+", default=[6, 7, 8, 9, 10])
    ap.add_argument("--functions", type=int, default=100)
    ap.add_argument("--reps", type=int, default=8)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()

    print("n,gamma,random_accept,parity_reject")
    for n in args.ns:
        gamma = min(default_gamma(n), 0.5)
        learner = fourier_sampling_learner(gamma)
        rng = make_rng(args.seed, n)
        accept, _ = density_experiment(n, learner, gamma, args.functions, child(rng, 0), args.reps)
        rejects = sum(1 - natural_property_test(chi(n, i % (1 << n)), learner, gamma, args.reps, child(rng, 1, i))
                      for i in range(args.functions))
        print(f"{n},{gamma:.4f},{accept:.3f},{rejects / args.functions:.3f}")


if __name__ == "__main__":
    main()
