"""Direct-product codes over k-sets and their local list decoder.

A k-set is a sorted row of ``k`` distinct ``n``-bit inputs.  Oracles over
k-sets take ``(N, k)`` arrays of such rows and return ``k``-bit answers with
bit ``i`` belonging to the ``i``-th smallest element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels
from .bitfunc import BooleanFunction
from .oracle import CorrelationEstimate, ProbabilisticOracle, proportion_estimate
from .rng import kernel_seed

CONS_REPEAT = 64
BOTTOM = -1


@dataclass(frozen=True)
class KSet:
    n: int
    elems: tuple

    def __post_init__(self):
        e = tuple(int(v) for v in self.elems)
        object.__setattr__(self, "elems", e)
        if any(b <= a for a, b in zip(e, e[1:])):
            raise ValueError("k-set elements must be strictly increasing")
        if e and (e[0] < 0 or e[-1] >> self.n):
            raise ValueError(f"k-set elements must be {self.n}-bit strings")

    @property
    def k(self) -> int:
        return len(self.elems)

    def __contains__(self, x) -> bool:
        return int(x) in self.elems

    def row(self) -> np.ndarray:
        return np.asarray(self.elems, dtype=np.int64)


@dataclass(frozen=True)
class DpParams:
    n: int
    k: int
    epsilon: float
    delta: float
    T: int
    C: float = 100.0
    strict: bool = False

    def __post_init__(self):
        if self.k < 2 or self.k % 2:
            raise ValueError("k must be even and at least 2")
        if self.k > 1 << max(self.n - 1, 0):
            raise ValueError(f"k={self.k} exceeds 2**(n-1); rejection sampling would stall")
        if self.k > 63:
            raise ValueError("k-set answers are packed into 64 bits; k <= 63")
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if self.strict and self.k < self.required_k():
            raise ValueError(f"k={self.k} below the required {self.required_k():.1f}")

    def required_k(self) -> float:
        d, e = self.delta, self.epsilon
        return self.C / d * (math.log(1 / d) + math.log(1 / e))


def default_iterations(epsilon: float, delta: float) -> int:
    return math.ceil(32 * math.log(1 / delta) / epsilon**2)


@dataclass(frozen=True, eq=False)
class DirectProduct:
    """The target ``g^k`` over k-sets."""

    g: BooleanFunction
    k: int

    @property
    def in_bits(self) -> int:
        return self.g.n

    @property
    def out_bits(self) -> int:
        return self.k

    @property
    def input_shape(self) -> tuple:
        return (self.k,)

    def evaluate(self, rows) -> np.ndarray:
        rows = np.ascontiguousarray(rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[1] != self.k:
            raise ValueError(f"expected rows of {self.k} elements")
        return _kernels.pack_lookup(self.g.table, rows)

    def sample_inputs(self, count: int, rng) -> np.ndarray:
        return sample_ksets(self.g.n, self.k, count, rng)


@dataclass(frozen=True, eq=False)
class HashedSubset:
    """A pseudo-random family of k-sets of the given density, with vectorised membership."""

    n: int
    density: float
    keys: np.ndarray

    @classmethod
    def draw(cls, n: int, density: float, rng) -> "HashedSubset":
        keys = rng.integers(0, 2**64 - 1, size=1 << n, dtype=np.uint64, endpoint=True)
        return cls(n, float(density), keys)

    def contains(self, rows) -> np.ndarray:
        h = _kernels.set_hash(self.keys, np.ascontiguousarray(rows, dtype=np.int64))
        return h.astype(np.float64) < self.density * 2.0**64


def dp_eval(g: BooleanFunction, B: KSet) -> int:
    if B.n != g.n:
        raise ValueError(f"k-set over {B.n}-bit strings, function over {g.n}")
    return sum(g(x) << i for i, x in enumerate(B.elems))


def sample_ksets(n: int, k: int, count: int, rng) -> np.ndarray:
    if k > 1 << max(n - 1, 0):
        raise ValueError(f"k={k} exceeds 2**(n-1)")
    return _kernels.sample_ksets(1 << n, k, count, kernel_seed(rng))


@dataclass(frozen=True)
class DpDecoder:
    B: KSet
    A: KSet
    w: int
    T: int
    lookup: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not set(self.A.elems) <= set(self.B.elems) or 2 * self.A.k != self.B.k:
            raise ValueError("A must be a k/2-subset of B")
        if self.w >> self.A.k:
            raise ValueError("w must have k/2 bits")
        self.lookup.update({x: (self.w >> i) & 1 for i, x in enumerate(self.A.elems)})


def _restrict(answer: int, positions) -> int:
    return sum(((answer >> p) & 1) << i for i, p in enumerate(positions))


def sample_decoder(oracle: ProbabilisticOracle, params: DpParams, rng) -> DpDecoder:
    """Uniform edge ``(A, B)`` and ``w`` = one oracle answer on ``B`` restricted to ``A``."""
    B = sample_ksets(params.n, params.k, 1, rng)[0]
    pos = np.sort(rng.choice(params.k, size=params.k // 2, replace=False))
    answer = oracle.query(B, rng)
    return DpDecoder(KSet(params.n, B), KSet(params.n, B[pos]), _restrict(answer, pos), params.T)


def decoder_from(A: KSet, w: int, B: KSet, T: int) -> DpDecoder:
    return DpDecoder(B, A, w, T)


def decode_batch(dec: DpDecoder, xs, oracle: ProbabilisticOracle, rng, chunk_rows: int = 1 << 14) -> np.ndarray:
    """Run ``C_{A,w}`` independently on each ``x``; ``-1`` marks the failure symbol.

    Iterations for still-unanswered inputs are drawn in growing blocks; each
    input keeps the first consistent neighbour in its own iteration order,
    so the law matches a sequential loop of ``T`` rounds.
    """
    xs = np.asarray(xs, dtype=np.int64)
    n, k = dec.A.n, dec.B.k
    if xs.size and (xs.min() < 0 or xs.max() >> n):
        raise ValueError(f"inputs must be {n}-bit strings")
    out = np.full(xs.shape, BOTTOM, dtype=np.int64)
    a_elems = dec.A.row()
    in_a = np.zeros(1 << n, dtype=np.bool_)
    in_a[a_elems] = True
    hit = in_a[xs]
    for i in np.flatnonzero(hit):
        out[i] = dec.lookup[int(xs[i])]
    if (1 << n) - dec.A.k - 1 < k // 2 - 1 and not hit.all():
        raise ValueError("too few free elements to complete a neighbour")
    w_bits = np.array([(dec.w >> i) & 1 for i in range(dec.A.k)], dtype=np.uint64)
    pending = np.flatnonzero(~hit)
    done_iters = 0
    block = 1
    while pending.size and done_iters < dec.T:
        block = min(block, dec.T - done_iters, max(1, chunk_rows // pending.size))
        rep = np.repeat(xs[pending], block)
        rows, amask, expect, xpos = _kernels.sample_neighbors(a_elems, in_a, w_bits, rep, k, 1 << n, kernel_seed(rng))
        ans = oracle.query_batch(rows, rng)
        consistent = ((ans & amask) == expect).reshape(pending.size, block)
        bit = ((ans >> xpos.astype(np.uint64)) & np.uint64(1)).astype(np.int64).reshape(pending.size, block)
        found = consistent.any(axis=1)
        first = consistent.argmax(axis=1)
        out[pending[found]] = bit[found, first[found]]
        pending = pending[~found]
        done_iters += block
        block *= 2
    return out


def decode_query(dec: DpDecoder, x: int, oracle: ProbabilisticOracle, rng) -> Optional[int]:
    if int(x) in dec.lookup:
        return dec.lookup[int(x)]
    v = int(decode_batch(dec, [x], oracle, rng)[0])
    return None if v == BOTTOM else v


def decoder_agreement(dec: DpDecoder, g: BooleanFunction, oracle, samples: int, rng) -> CorrelationEstimate:
    """Fraction of uniform ``x`` decoded to ``g(x)``; failures count as wrong."""
    xs = g.sample_inputs(samples, rng)
    got = decode_batch(dec, xs, oracle, rng)
    return proportion_estimate(int(np.count_nonzero(got == g.table[xs])), samples)


class ListDecodeReport(NamedTuple):
    zeta_hat: float
    success_rate: float
    agreements: np.ndarray
    bottom_rates: np.ndarray
    trials: int

    def zeta_estimate(self) -> CorrelationEstimate:
        return proportion_estimate(int(round(self.zeta_hat * self.trials)), self.trials)

    def successful_mean(self, delta: float):
        good = self.agreements[self.agreements >= 1 - delta]
        return float(good.mean()) if good.size else float("nan"), good.size


def decoder_trial(g: BooleanFunction, oracle: ProbabilisticOracle, params: DpParams, agreement_samples: int, rng):
    """Draw one decoder; return its agreement with ``g`` and its failure-symbol rate."""
    dec = sample_decoder(oracle, params, rng)
    xs = g.sample_inputs(agreement_samples, rng)
    got = decode_batch(dec, xs, oracle, rng)
    return (np.count_nonzero(got == g.table[xs]) / agreement_samples,
            np.count_nonzero(got == BOTTOM) / agreement_samples)


def run_list_decode_experiment(g: BooleanFunction, oracle: ProbabilisticOracle, params: DpParams, trials: int,
                               agreement_samples: int, rng, substream=None) -> ListDecodeReport:
    """Sample ``trials`` decoders and measure each one's agreement with ``g``.

    ``substream(i)`` may supply the stream for trial ``i`` (to make results
    independent of scheduling); otherwise ``rng`` is used sequentially.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    agreements = np.empty(trials)
    bottoms = np.empty(trials)
    for i in range(trials):
        agreements[i], bottoms[i] = decoder_trial(g, oracle, params, agreement_samples,
                                                  substream(i) if substream else rng)
    zeta = float(np.mean(agreements >= 1 - params.delta))
    return ListDecodeReport(zeta, float(agreements.mean()), agreements, bottoms, trials)


class EdgeDiagnostics(NamedTuple):
    corr_B: CorrelationEstimate
    good_fraction: CorrelationEstimate
    errcons: CorrelationEstimate
    p_cons: float
    p_tot: float
    neighbors: int

    def is_excellent(self, eta: float, gamma: float, alpha: float) -> bool:
        return (self.corr_B.point >= eta and self.good_fraction.point >= gamma
                and self.errcons.point <= alpha)


def edge_diagnostics(g: BooleanFunction, oracle: ProbabilisticOracle, A: KSet, samples: int, rng,
                     B: Optional[KSet] = None, eta: float = 0.0, repeat: int = CONS_REPEAT) -> EdgeDiagnostics:
    """Monte-Carlo statistics of the edge ``(A, B)`` against the true ``g``.

    ``samples`` neighbours ``B'`` of ``A`` are drawn uniformly and each is
    queried ``repeat`` times.  ``p_cons`` is the mean consistency rate on
    ``A`` (so ``p_tot`` is reported normalised by the neighbourhood size).
    ``errcons`` is the self-normalised importance-sampling estimate of the
    error rate on ``B' \\ A`` under the consistency-weighted law: the total
    number of wrong bits over consistent answers divided by ``k/2`` times
    the number of consistent answers.
    """
    n, half = A.n, A.k
    k = 2 * half
    if (1 << n) - half < half:
        raise ValueError("A leaves fewer than k/2 free elements")
    target = DirectProduct(g, k)
    a_elems = A.row()
    in_a = np.zeros(1 << n, dtype=np.bool_)
    in_a[a_elems] = True
    # a uniform neighbour is A plus a uniform k/2-set of outsiders
    outside = np.flatnonzero(~in_a)
    rows = np.empty((samples, k), dtype=np.int64)
    for s in range(samples):
        pick = rng.choice(outside, size=half, replace=False)
        rows[s] = np.sort(np.concatenate([a_elems, pick]))
    amask = np.zeros(samples, dtype=np.uint64)
    for s in range(samples):
        for p in np.flatnonzero(in_a[rows[s]]):
            amask[s] |= np.uint64(1) << np.uint64(p)
    truth = target.evaluate(rows)
    rep_rows = np.repeat(rows, repeat, axis=0)
    ans = oracle.query_batch(rep_rows, rng).reshape(samples, repeat)
    correct = ans == truth[:, None]
    cons = (ans & amask[:, None]) == (truth & amask)[:, None]
    diff = (ans ^ truth[:, None]) & ~amask[:, None]
    errs = np.bitwise_count(diff).astype(np.int64)
    corr = correct.mean(axis=1)
    good = int(np.count_nonzero(corr >= eta))
    total_cons = int(cons.sum())
    total_err = int((errs * cons).sum())
    if total_cons:
        errcons = proportion_estimate(total_err, total_cons * half)
    else:
        errcons = CorrelationEstimate(float("nan"), float("inf"), 0)
    if B is None:
        corr_B = CorrelationEstimate(float("nan"), float("inf"), 0)
    else:
        bq = oracle.query_batch(np.repeat(B.row()[None, :], repeat, axis=0), rng)
        corr_B = proportion_estimate(int(np.count_nonzero(bq == target.evaluate(B.row()[None, :])[0])), repeat)
    p_cons = float(cons.mean())
    return EdgeDiagnostics(corr_B, proportion_estimate(good, samples), errcons, p_cons, p_cons, samples)


def correctness_bound(beta: float, eta: float, gamma: float, alpha: float, T: int, k: int) -> float:
    """``1 - beta - (1 - eta*(gamma - lam)/2)**T - 16*alpha`` with ``lam = 2*exp(-beta*k/24)``."""
    lam = 2 * math.exp(-beta * k / 24)
    return 1 - beta - (1 - eta * (gamma - lam) / 2) ** T - 16 * alpha


def bound_lambda(beta: float, k: int) -> float:
    return 2 * math.exp(-beta * k / 24)
