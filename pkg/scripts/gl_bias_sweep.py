"""Goldreich-Levin decoding success against the engineered advantage.

For each advantage the predicate is wrong on exactly (1/2 - gamma) 2**k
selectors per x, so the exact success is (2 gamma)**2; the script prints it
next to a Monte-Carlo estimate and the gamma**3 / 2 floor.
"""

import argparse

import numpy as np

from hardamp import qsim
from hardamp.oracle import proportion_estimate
from hardamp.rng import make_rng


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--x-bits", type=int, default=4)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--runs", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    rng = make_rng(args.seed)
    answers = rng.integers(0, 1 << args.k, size=1 << args.x_bits)
    steps = 1 << (args.k - 1)
    print("gamma,exact,measured,sigma,floor")
    for flips in range(steps + 1):
        gamma = 0.5 - flips / (1 << args.k)
        pred = qsim.biased_predicate(answers, args.x_bits, args.k, gamma, rng)
        A = qsim.table_circuit(pred, args.x_bits, args.k)
        exact = np.mean([qsim.gl_success_probability(A, x, args.x_bits, args.k, int(a))
                         for x, a in enumerate(answers)])
        xs = rng.integers(0, 1 << args.x_bits, size=args.runs)
        got = qsim.GLDecoder(A, args.x_bits, args.k).decode_batch(xs, rng)
        est = proportion_estimate(int(np.count_nonzero(got == answers[xs])), args.runs)
        print(f"{gamma:.4f},{exact:.6f},{est.point:.6f},{est.sigma:.6f},{gamma ** 3 / 2:.6f}")


if __name__ == "__main__":
    main()
