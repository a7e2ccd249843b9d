"""Fraction of good direct-product decoders as the oracle's correct fraction shrinks."""

import argparse

from hardamp import direct_product as dp
from hardamp.bitfunc import random_function
from hardamp.oracle import make_oracle
from hardamp.rng import make_rng


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--k", type=int, default=24)
    ap.add_argument("--delta", type=float, default=0.25)
    ap.add_argument("--epsilons", type=float, nargs="+", default=[0.5, 0.35, 0.25])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--samples", type=int, default=300)
    ap.add_argument("--oracle", choices=["subset_correct", "spread"], default="subset_correct")
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    g = random_function(args.n, 0)
    target = dp.DirectProduct(g, args.k)
    print("epsilon,T,zeta_hat,floor,mean_agreement")
    for i, eps in enumerate(args.epsilons):
        rng = make_rng(args.seed, i)
        param = dp.HashedSubset.draw(args.n, eps, rng) if args.oracle == "subset_correct" else eps
        oracle = make_oracle(args.oracle, target, param)
        params = dp.DpParams(args.n, args.k, eps, args.delta, dp.default_iterations(eps, args.delta))
        rep = dp.run_list_decode_experiment(g, oracle, params, args.trials, args.samples, rng)
        print(f"{eps},{params.T},{rep.zeta_hat:.4f},{eps ** 2 / 4:.4f},{rep.success_rate:.4f}")


if __name__ == "__main__":
    main()
