"""Learners, hypothesis testing, and the learner-to-natural-property test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import qsim
from .bitfunc import BooleanFunction, popcount, random_function_from
from .oracle import proportion_estimate, quantum_oracle
from .rng import child

DEFAULT_REPS = 8
DENSITY_LAMBDA = 8


@dataclass(frozen=True, eq=False)
class Hypothesis:
    """``kind`` is ``truth_table``, ``parity`` or ``quantum``."""

    kind: str
    n: int
    table: Optional[BooleanFunction] = None
    S: int = 0
    sign: int = 0
    circuit: Optional[qsim.QuantumCircuit] = None
    out_wire: int = 0

    def __post_init__(self):
        if self.kind == "truth_table" and (self.table is None or self.table.n != self.n):
            raise ValueError("truth-table hypothesis needs a table of matching arity")
        if self.kind == "parity" and (self.S >> self.n or self.sign not in (0, 1)):
            raise ValueError("parity hypothesis needs S < 2**n and a 0/1 sign")
        if self.kind == "quantum" and self.circuit is None:
            raise ValueError("quantum hypothesis needs a circuit")
        if self.kind not in ("truth_table", "parity", "quantum"):
            raise ValueError(f"unknown hypothesis kind {self.kind!r}")

    def evaluate(self, xs, rng=None) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        if self.kind == "truth_table":
            return self.table.table[xs].astype(np.int64)
        if self.kind == "parity":
            return (popcount(xs & self.S) & 1) ^ self.sign
        return quantum_oracle(self.circuit, self.n, [self.out_wire]).query_batch(xs, rng).astype(np.int64)


def parity_hypothesis(n: int, S: int, sign: int = 0) -> Hypothesis:
    return Hypothesis("parity", n, S=int(S), sign=int(sign))


def table_hypothesis(f: BooleanFunction) -> Hypothesis:
    return Hypothesis("truth_table", f.n, table=f)


@dataclass
class Learner:
    """``run(f, rng)`` may use ``f`` only through queries; returns a hypothesis or ``None``."""

    name: str
    run: Callable
    gamma: float = 0.0
    queries: int = field(default=0, compare=False)


def brute_force_learner() -> Learner:
    def run(f: BooleanFunction, rng):
        # one membership query per input, in order
        values = np.empty(1 << f.n, dtype=np.uint8)
        for x in range(1 << f.n):
            values[x] = f(x)
        learner.queries += 1 << f.n
        return table_hypothesis(BooleanFunction(f.n, values))

    learner = Learner("brute_force", run, 0.5)
    return learner


def fourier_sampling_learner(gamma: float = 0.0) -> Learner:
    """One Fourier sample; on a 1 flag, output the parity of the sample with a random sign."""
    def run(f: BooleanFunction, rng):
        learner.queries += 1
        S = qsim.fourier_sample(f, rng)
        if S is None:
            return None
        return parity_hypothesis(f.n, S, int(rng.integers(0, 2)))

    learner = Learner("fourier_sampling", run, gamma)
    return learner


def silent_learner() -> Learner:
    return Learner("silent", lambda f, rng: None)


def fixed_learner(h: Hypothesis) -> Learner:
    return Learner("fixed", lambda f, rng: h)


def agreement_sample_count(gamma: float, n: int) -> int:
    """``ceil(gamma**-3) + 100 n`` agreement samples per repetition."""
    return math.ceil(gamma ** -3 - 1e-9) + 100 * n


def default_gamma(n: int, lam: float = DENSITY_LAMBDA) -> float:
    return lam * 2 ** (-n / 2)


def natural_property_test(tt: BooleanFunction, learner: Learner, gamma: float, reps: int, rng) -> int:
    """1 (accept) unless some repetition yields a hypothesis with empirical agreement >= 1/2 + gamma/4."""
    if not 0 < gamma <= 0.5:
        raise ValueError("gamma must lie in (0, 1/2]")
    if reps < 1:
        raise ValueError("reps must be at least 1")
    T = agreement_sample_count(gamma, tt.n)
    for _ in range(reps):
        h = learner.run(tt, rng)
        if h is None:
            continue
        xs = rng.integers(0, 1 << tt.n, size=T, dtype=np.int64)
        agree = np.count_nonzero(h.evaluate(xs, rng) == tt.table[xs]) / T
        if agree >= 0.5 + gamma / 4:
            return 0
    return 1


def density_experiment(n: int, learner: Learner, gamma: float, num_functions: int, rng,
                       reps: int = DEFAULT_REPS):
    """Accept fraction over fresh uniform truth tables; also returns the per-function outcomes.

    Function ``i`` and its test use the sub-stream ``child(rng, i)``.
    """
    outcomes = np.empty(num_functions, dtype=np.int64)
    for i in range(num_functions):
        r = child(rng, i)
        f = random_function_from(n, r)
        outcomes[i] = natural_property_test(f, learner, gamma, reps, r)
    return float(outcomes.mean()), outcomes


def acceptance_estimate(outcomes) -> object:
    outcomes = np.asarray(outcomes)
    return proportion_estimate(int(outcomes.sum()), outcomes.size)
