"""The Nisan-Wigderson generator and reconstruction of next-bit predictors.

Seeds and outputs are packed integers.  Output bit ``i`` is ``f`` applied to
the seed restricted to the design's ``i``-th set, with that set's coordinates
read in increasing order (the smallest coordinate becomes input bit 0).

A predictor for output bit ``j`` hardwires ``(j, d, r, r')``: the seed
outside ``S_j`` is fixed to ``r'`` and ``x`` fills ``S_j``.  Bits ``0..j-1``
then depend on ``x`` only through ``S_i & S_j``, so they are stored as small
lookup tables.  The prediction queries ``D(bits_0..j-1, r)`` and returns
``r_0 ^ d`` on acceptance, ``r_0 ^ d ^ 1`` otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .bitfunc import BooleanFunction
from .designs import Design
from .oracle import ProbabilisticOracle, chernoff_samples, majority_query, proportion_estimate

DEFAULT_REPEAT = 64
EXHAUSTIVE_LIMIT = 22


@dataclass(frozen=True, eq=False)
class NwGenerator:
    f: BooleanFunction
    design: Design

    def __post_init__(self):
        if self.design.n != self.f.n:
            raise ValueError(f"design set size {self.design.n} != function arity {self.f.n}")

    @property
    def seed_bits(self) -> int:
        return self.design.m

    @property
    def out_bits(self) -> int:
        return self.design.t


def _gather(zs: np.ndarray, coords) -> np.ndarray:
    """Pack the bits of ``zs`` at ``coords`` (in the given order) into integers."""
    out = np.zeros(zs.shape, dtype=np.int64)
    for c, pos in enumerate(coords):
        out |= ((zs >> pos) & 1) << c
    return out


def nw_eval(gen: NwGenerator, z: int) -> int:
    """The ``t`` output bits for seed ``z``."""
    if z < 0 or z >> gen.seed_bits:
        raise ValueError(f"seed must have {gen.seed_bits} bits")
    out = 0
    for i, s in enumerate(gen.design.sets):
        window = sum(((z >> pos) & 1) << c for c, pos in enumerate(s))
        out |= gen.f(window) << i
    return out


def nw_eval_batch(gen: NwGenerator, zs) -> np.ndarray:
    if gen.seed_bits > 62 or gen.out_bits > 63:
        raise ValueError("batch evaluation needs seed_bits <= 62 and t <= 63")
    zs = np.asarray(zs, dtype=np.int64)
    out = np.zeros(zs.shape, dtype=np.int64)
    for i, s in enumerate(gen.design.sets):
        out |= gen.f.table[_gather(zs, s)].astype(np.int64) << i
    return out


def image(gen: NwGenerator) -> np.ndarray:
    """Sorted distinct outputs over every seed."""
    if gen.seed_bits > EXHAUSTIVE_LIMIT:
        raise ValueError("seed space too large to enumerate")
    return np.unique(nw_eval_batch(gen, np.arange(1 << gen.seed_bits)))


def image_distinguisher(gen: NwGenerator) -> ProbabilisticOracle:
    """Deterministic test accepting exactly the strings in the generator's image."""
    if gen.out_bits > EXHAUSTIVE_LIMIT + 4:
        raise ValueError("output space too large for a lookup table")
    member = np.zeros(1 << gen.out_bits, dtype=np.uint64)
    member[image(gen)] = 1
    return ProbabilisticOracle(gen.out_bits, 1, lambda zs, rng: member[zs], "image", True)


def constant_distinguisher(t: int, bit: int = 1) -> ProbabilisticOracle:
    return ProbabilisticOracle(t, 1, lambda zs, rng: np.full(zs.shape[0], bit, dtype=np.uint64), "constant", True)


def zero_test_distinguisher(t: int) -> ProbabilisticOracle:
    """Accepts only the all-zero string."""
    return ProbabilisticOracle(t, 1, lambda zs, rng: (zs == 0).astype(np.uint64), "zero-test", True)


def acceptance_rate(D: ProbabilisticOracle, zs, rng, num_repeat: int = DEFAULT_REPEAT) -> np.ndarray:
    """Per-input acceptance frequency; one query suffices for deterministic ``D``."""
    zs = np.asarray(zs, dtype=np.int64)
    if D.deterministic:
        return D.query_batch(zs, rng).astype(np.float64)
    rep = D.query_batch(np.repeat(zs, num_repeat), rng).reshape(zs.size, num_repeat)
    return rep.mean(axis=1)


def measure_advantage(gen: NwGenerator, D: ProbabilisticOracle, mode: str = "exhaustive", rng=None,
                      samples: int = 10_000, num_repeat: int = DEFAULT_REPEAT) -> float:
    """``Pr_s[D(G(s)) = 1] - Pr_y[D(y) = 1]``."""
    if D.in_bits != gen.out_bits or D.out_bits != 1:
        raise ValueError("distinguisher must map t bits to one bit")
    if mode == "exhaustive":
        if gen.seed_bits > EXHAUSTIVE_LIMIT or gen.out_bits > EXHAUSTIVE_LIMIT:
            raise ValueError(f"exhaustive mode needs m, t <= {EXHAUSTIVE_LIMIT}")
        outs = nw_eval_batch(gen, np.arange(1 << gen.seed_bits))
        pseudo = acceptance_rate(D, outs, rng, num_repeat).mean()
        uniform = acceptance_rate(D, np.arange(1 << gen.out_bits), rng, num_repeat).mean()
        return float(pseudo - uniform)
    if mode == "monte_carlo":
        seeds = rng.integers(0, 1 << gen.seed_bits, size=samples, dtype=np.int64)
        ys = rng.integers(0, 1 << gen.out_bits, size=samples, dtype=np.int64)
        pseudo = D.query_batch(nw_eval_batch(gen, seeds), rng).mean()
        uniform = D.query_batch(ys, rng).mean()
        return float(pseudo - uniform)
    raise ValueError(f"unknown mode {mode!r}")


def hybrid_probabilities(gen: NwGenerator, D: ProbabilisticOracle, rng=None,
                         num_repeat: int = DEFAULT_REPEAT) -> np.ndarray:
    """``p_i = Pr[D(G(s)_0..i-1, uniform rest) = 1]`` for ``i = 0..t``, exhaustively."""
    t = gen.out_bits
    outs = nw_eval_batch(gen, np.arange(1 << gen.seed_bits))
    ps = np.empty(t + 1)
    for i in range(t + 1):
        prefixes, counts = np.unique(outs & ((1 << i) - 1), return_counts=True)
        tails = np.arange(1 << (t - i), dtype=np.int64) << i
        grid = (prefixes[:, None] | tails[None, :]).ravel()
        acc = acceptance_rate(D, grid, rng, num_repeat).reshape(prefixes.size, tails.size).mean(axis=1)
        ps[i] = float((acc * counts).sum() / counts.sum())
    return ps


@dataclass(frozen=True, eq=False)
class Predictor:
    j: int
    d: int
    r: int
    r_prime: int
    tables: tuple
    relevant: tuple
    n: int
    t: int

    def prefix_bits(self, xs) -> np.ndarray:
        """Bits ``0..j-1`` of the generator output for each ``x`` in ``xs``."""
        xs = np.asarray(xs, dtype=np.int64)
        out = np.zeros(xs.shape, dtype=np.int64)
        for i, (tab, pos) in enumerate(zip(self.tables, self.relevant)):
            out |= tab[_gather(xs, pos)].astype(np.int64) << i
        return out


def _place(x_bits: dict, rest_bits: dict, coords) -> int:
    return sum((x_bits[c] if c in x_bits else rest_bits[c]) << i for i, c in enumerate(coords))


def build_predictor(design: Design, j: int, d: int, r: int, r_prime: int, evaluate: Callable) -> Predictor:
    """Fill the lookup tables for a fixed choice of ``(j, d, r, r')``.

    ``evaluate`` maps an array of window values to values of the base
    function; only the windows the tables need are requested.
    """
    sets = design.sets
    target = sets[j]
    outside = [c for c in range(design.m) if c not in set(target)]
    rest = {c: (r_prime >> i) & 1 for i, c in enumerate(outside)}
    tables, relevant = [], []
    for i in range(j):
        shared = sorted(set(sets[i]) & set(target))
        pos_in_x = tuple(target.index(c) for c in shared)
        windows = []
        for a in range(1 << len(shared)):
            fixed = {c: (a >> b) & 1 for b, c in enumerate(shared)}
            windows.append(_place(fixed, rest, sets[i]))
        tables.append(np.asarray(evaluate(np.asarray(windows, dtype=np.int64)), dtype=np.uint8))
        relevant.append(pos_in_x)
    return Predictor(j, d, r, r_prime, tuple(tables), tuple(relevant), design.n, design.t)


def sample_predictor(design: Design, D: ProbabilisticOracle, rng, evaluate: Callable) -> Predictor:
    """Draw ``j, d, r, r'`` uniformly and build the corresponding predictor."""
    if D.in_bits != design.t or D.out_bits != 1:
        raise ValueError("distinguisher must map t bits to one bit")
    t, m, n = design.t, design.m, design.n
    j = int(rng.integers(0, t))
    d = int(rng.integers(0, 2))
    r = int(rng.integers(0, 1 << (t - j)))
    r_prime = int(rng.integers(0, 1 << (m - n))) if m > n else 0
    return build_predictor(design, j, d, r, r_prime, evaluate)


def reconstruct_predictor(gen: NwGenerator, D: ProbabilisticOracle, rng,
                          evaluate: Optional[Callable] = None) -> Predictor:
    """A random predictor for ``gen``; ``evaluate`` defaults to the truth table of ``gen.f``."""
    return sample_predictor(gen.design, D, rng, evaluate or (lambda ws: gen.f.table[ws]))


def amplified_evaluator(f_oracle: ProbabilisticOracle, num_queries: int, rng, success: float = 2 / 3):
    """Evaluate ``f`` by majority vote, sized so all ``num_queries`` answers are right w.p. >= 3/4.

    Each vote is right with probability at least ``success``; the vote count
    comes from the Chernoff bound with failure budget ``1/(4 * num_queries)``.
    """
    votes = chernoff_samples(1 - 1 / (2 * success), success, 1 / (4 * max(num_queries, 1)))
    votes += 1 - votes % 2
    return lambda ws: majority_query(f_oracle, ws, votes, rng).astype(np.uint8)


def predict(p: Predictor, xs, D: ProbabilisticOracle, rng) -> np.ndarray:
    """One run of the predictor on each ``x``."""
    queries = p.prefix_bits(xs) | (np.int64(p.r) << p.j)
    acc = D.query_batch(queries, rng).astype(np.int64)
    return (p.r & 1) ^ p.d ^ 1 ^ acc


def predictor_oracle(p: Predictor, D: ProbabilisticOracle) -> ProbabilisticOracle:
    return ProbabilisticOracle(p.n, 1, lambda xs, rng: predict(p, xs, D, rng).astype(np.uint64),
                               "predictor", D.deterministic)


def predictor_advantage(p: Predictor, D: ProbabilisticOracle, f: BooleanFunction, rng=None,
                        num_repeat: int = DEFAULT_REPEAT) -> float:
    """Exact-over-inputs success rate ``Pr_{x, D}[A(x) = f(x)]``."""
    if f.n != p.n or D.in_bits != p.t:
        raise ValueError("predictor widths do not match")
    if f.n > 16:
        raise ValueError("exhaustive evaluation limited to n <= 16")
    xs = np.arange(1 << f.n, dtype=np.int64)
    queries = p.prefix_bits(xs) | (np.int64(p.r) << p.j)
    accept = acceptance_rate(D, queries, rng, num_repeat)
    first = (p.r & 1) ^ p.d
    # accept -> first, reject -> first ^ 1
    right = np.where(f.table == first, accept, 1.0 - accept)
    return float(right.mean())


def reconstruction_trials(gen: NwGenerator, D: ProbabilisticOracle, trials: int, rng, threshold: float,
                          num_repeat: int = DEFAULT_REPEAT):
    """Run ``trials`` reconstructions; returns the rows and the success count."""
    rows = []
    for i in range(trials):
        p = reconstruct_predictor(gen, D, rng)
        adv = predictor_advantage(p, D, gen.f, rng, num_repeat)
        rows.append((i, p.j, p.d, adv, adv >= threshold))
    return rows, sum(r[-1] for r in rows)


def success_estimate(successes: int, trials: int):
    return proportion_estimate(successes, trials)
