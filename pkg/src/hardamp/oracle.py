"""Inherently probabilistic black boxes and Monte-Carlo estimation.

A :class:`ProbabilisticOracle` maps an input to a fresh sample from an
output distribution.  Callers pass the randomness stream with each query;
the oracle keeps no state, and nothing about a query's internal coins is
returned.  Inputs are integers for bit-string domains and sorted rows of
elements for k-set domains (see :mod:`hardamp.direct_product`).  Outputs are
packed into ``uint64`` values, bit ``i`` holding output bit ``i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Callable, Iterable, NamedTuple, Optional

import numpy as np

Z95 = NormalDist().inv_cdf(0.975)


@dataclass(frozen=True, eq=False)
class ProbabilisticOracle:
    in_bits: int
    out_bits: int
    sampler: Callable
    kind: str = "custom"
    deterministic: bool = False
    input_shape: tuple = ()

    def __post_init__(self):
        if not 1 <= self.out_bits <= 64:
            raise ValueError("out_bits must lie in [1, 64]")

    def query_batch(self, zs, rng) -> np.ndarray:
        """One independent query per input row."""
        zs = np.asarray(zs, dtype=np.int64)
        if zs.ndim != 1 + len(self.input_shape):
            raise ValueError(f"expected inputs of shape (N, *{self.input_shape})")
        if zs.shape[0] == 0:
            return np.zeros(0, dtype=np.uint64)
        return np.asarray(self.sampler(zs, rng), dtype=np.uint64)

    def query(self, z, rng) -> int:
        z = getattr(z, "elems", z)
        return int(self.query_batch(np.asarray(z, dtype=np.int64)[None, ...], rng)[0])


class CorrelationEstimate(NamedTuple):
    point: float
    half_width: float
    samples: int

    @property
    def sigma(self) -> float:
        return self.half_width / Z95

    def contains(self, value: float, widths: float = 1.0) -> bool:
        return abs(value - self.point) <= widths * self.half_width


def proportion_estimate(successes: int, samples: int) -> CorrelationEstimate:
    """Point estimate with a 95% half-width (Wilson when ``p * N < 10``)."""
    if samples < 1:
        raise ValueError("need at least one sample")
    p = successes / samples
    if p * samples >= 10:
        return CorrelationEstimate(p, Z95 * math.sqrt(p * (1 - p) / samples), samples)
    z2 = Z95 * Z95
    centre = (p + z2 / (2 * samples)) / (1 + z2 / samples)
    spread = Z95 * math.sqrt(p * (1 - p) / samples + z2 / (4 * samples * samples)) / (1 + z2 / samples)
    hw = max(centre + spread - p, p - (centre - spread))
    return CorrelationEstimate(p, hw, samples)


def uniform_strings(rng, bits: int, size) -> np.ndarray:
    return rng.integers(0, 1 << bits, size=size, dtype=np.uint64, endpoint=False) if bits < 64 \
        else rng.integers(0, 2**64 - 1, size=size, dtype=np.uint64, endpoint=True)


def _input_shape(base) -> tuple:
    return tuple(getattr(base, "input_shape", ()))


def _membership(V, in_bits: int):
    """Normalise ``V`` to a vectorised membership test."""
    if hasattr(V, "contains"):
        return V.contains
    members = np.fromiter((int(v) for v in V), dtype=np.int64)
    if members.size and (members.min() < 0 or members.max() >= 1 << in_bits):
        raise ValueError(f"V contains inputs outside [0, 2**{in_bits})")
    if in_bits > 26:
        lookup = set(members.tolist())
        return lambda zs: np.array([int(z) in lookup for z in zs], dtype=bool)
    table = np.zeros(1 << in_bits, dtype=bool)
    table[members] = True
    return lambda zs: table[zs]


def make_oracle(kind: str, base=None, param=None, **kw) -> ProbabilisticOracle:
    """Build one of the standard oracles around a target ``base``.

    ``deterministic``
        always ``base(z)``.
    ``subset_correct``
        ``base(z)`` on ``z`` in ``param`` (an iterable of inputs or an object
        with a vectorised ``contains``), a fresh uniform string elsewhere.
    ``spread``
        ``base(z)`` with probability ``param``, otherwise a uniform string
        different from ``base(z)`` (the complement for one output bit).
    ``quantum_wrapped``
        ``base`` is a circuit; keywords ``in_bits`` and ``out_wires`` say
        where the input goes and which wires are read out.
    """
    if kind == "quantum_wrapped":
        return quantum_oracle(base, kw["in_bits"], kw["out_wires"])
    ib, ob, shape = base.in_bits, base.out_bits, _input_shape(base)
    if kind == "deterministic":
        return ProbabilisticOracle(ib, ob, lambda zs, rng: base.evaluate(zs), kind, True, shape)
    if kind == "subset_correct":
        inside = _membership(param, ib)

        def sample(zs, rng):
            good = np.asarray(inside(zs), dtype=bool)
            out = uniform_strings(rng, ob, zs.shape[0])
            if good.any():
                out[good] = base.evaluate(zs[good])
            return out

        return ProbabilisticOracle(ib, ob, sample, kind, False, shape)
    if kind == "spread":
        p = float(param)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"success probability {p} outside [0, 1]")
        if ob > 63:
            raise ValueError("spread oracles support at most 63 output bits")

        def sample(zs, rng):
            right = base.evaluate(zs)
            # uniform over the 2**ob - 1 strings other than the right one
            u = rng.integers(0, (1 << ob) - 1, size=zs.shape[0], dtype=np.uint64)
            wrong = u + (u >= right).astype(np.uint64)
            return np.where(rng.random(zs.shape[0]) < p, right, wrong)

        return ProbabilisticOracle(ib, ob, sample, kind, p == 1.0, shape)
    raise ValueError(f"unknown oracle kind {kind!r}")


def junk_oracle(in_bits: int, out_bits: int, input_shape: tuple = ()) -> ProbabilisticOracle:
    """Ignores its input and answers uniformly at random."""
    return ProbabilisticOracle(in_bits, out_bits, lambda zs, rng: uniform_strings(rng, out_bits, zs.shape[0]),
                               "junk", False, input_shape)


def with_uniform_noise(oracle: ProbabilisticOracle, prob: float) -> ProbabilisticOracle:
    """With probability ``prob`` replace the answer by a uniform string.

    This guarantees every output has positive probability, at the price of a
    tiny loss in correlation.  Typical choice: ``prob = 2**-n``.
    """
    def sample(zs, rng):
        out = oracle.query_batch(zs, rng)
        flip = rng.random(zs.shape[0]) < prob
        out[flip] = uniform_strings(rng, oracle.out_bits, int(flip.sum()))
        return out

    return ProbabilisticOracle(oracle.in_bits, oracle.out_bits, sample, oracle.kind + "+noise", False,
                               oracle.input_shape)


def quantum_oracle(circuit, in_bits: int, out_wires: Iterable[int]) -> ProbabilisticOracle:
    """Classical access to a circuit: load ``z`` on wires ``0..in_bits-1``, run, read ``out_wires``.

    The outcome law for each distinct input is computed once and then sampled,
    which is exactly what repeated independent runs would produce.
    """
    from . import qsim

    out_wires = tuple(out_wires)
    probe = circuit.then(*[qsim.Measure(w) for w in out_wires])
    laws: dict = {}

    def sample(zs, rng):
        out = np.empty(zs.shape[0], dtype=np.uint64)
        for z in np.unique(zs):
            if z not in laws:
                laws[int(z)] = qsim.outcome_distribution(probe, int(z))[1]
            sel = np.flatnonzero(zs == z)
            out[sel] = qsim.sample_outcomes(laws[int(z)], sel.size, rng)
        return out

    deterministic = circuit.measurement_free and all(g.op != "h" for g in circuit.gates)
    return ProbabilisticOracle(in_bits, len(out_wires), sample, "quantum_wrapped", deterministic)


def counting(oracle: ProbabilisticOracle, counter: dict, key: str = "queries", limit: Optional[int] = None,
             on_exhausted=None) -> ProbabilisticOracle:
    """Wrap ``oracle`` so every query is tallied in ``counter[key]``."""
    def sample(zs, rng):
        counter[key] = counter.get(key, 0) + zs.shape[0]
        if limit is not None and counter[key] > limit and on_exhausted is not None:
            on_exhausted()
        return oracle.query_batch(zs, rng)

    return ProbabilisticOracle(oracle.in_bits, oracle.out_bits, sample, oracle.kind, oracle.deterministic,
                               oracle.input_shape)


def majority_query(oracle: ProbabilisticOracle, zs, votes: int, rng) -> np.ndarray:
    """Bitwise majority of ``votes`` independent answers per input (one query if deterministic)."""
    zs = np.asarray(zs, dtype=np.int64)
    if oracle.deterministic or votes <= 1:
        return oracle.query_batch(zs, rng)
    rep = np.repeat(zs, votes, axis=0)
    answers = oracle.query_batch(rep, rng).reshape(zs.shape[0], votes)
    out = np.zeros(zs.shape[0], dtype=np.uint64)
    for b in range(oracle.out_bits):
        ones = ((answers >> np.uint64(b)) & np.uint64(1)).sum(axis=1)
        out |= (2 * ones > votes).astype(np.uint64) << np.uint64(b)
    return out


def estimate_correlation(oracle: ProbabilisticOracle, target, num_samples: int, rng,
                         inputs: Optional[np.ndarray] = None) -> CorrelationEstimate:
    """Fraction of i.i.d. uniform inputs on which the oracle's answer equals ``target``."""
    if oracle.in_bits != target.in_bits or oracle.out_bits != target.out_bits:
        raise ValueError("oracle and target widths differ")
    if num_samples < 1:
        raise ValueError("num_samples must be at least 1")
    zs = target.sample_inputs(num_samples, rng) if inputs is None else inputs
    hits = int(np.count_nonzero(oracle.query_batch(zs, rng) == target.evaluate(zs)))
    return proportion_estimate(hits, num_samples)


def chernoff_samples(delta: float, mu: float, failure_prob: float) -> int:
    """Smallest ``k`` with ``exp(-delta**2 * mu * k / 2) <= failure_prob``."""
    if not 0 < delta <= 1:
        raise ValueError("relative error must lie in (0, 1]")
    if not 0 < mu <= 1:
        raise ValueError("expected rate must lie in (0, 1]")
    if not 0 < failure_prob < 1:
        raise ValueError("failure probability must lie in (0, 1)")
    rate = delta * delta * mu / 2
    k = max(1, math.ceil(math.log(1 / failure_prob) / rate))
    # guard against round-off pushing an exact boundary up by one
    while k > 1 and math.exp(-rate * (k - 1)) <= failure_prob * (1 + 1e-12):
        k -= 1
    return k


@dataclass(frozen=True)
class TableTarget:
    """A multi-bit target given by a value table over ``in_bits``-bit inputs."""

    in_bits: int
    out_bits: int
    values: np.ndarray

    def evaluate(self, zs) -> np.ndarray:
        return np.asarray(self.values, dtype=np.uint64)[np.asarray(zs, dtype=np.int64)]

    def sample_inputs(self, count: int, rng) -> np.ndarray:
        return rng.integers(0, 1 << self.in_bits, size=count, dtype=np.int64)
