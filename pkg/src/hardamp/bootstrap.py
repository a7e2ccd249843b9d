"""Self-reduction machinery and the per-length bootstrap pipeline, with parity as the base language.

Oracles for ``f_n`` are :class:`~hardamp.oracle.ProbabilisticOracle` objects
with ``in_bits = n`` and one output bit.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import qsim
from .bitfunc import BooleanFunction, popcount
from .designs import Design, build_design
from .direct_product import DpParams, decode_batch, sample_decoder
from .nw import NwGenerator, measure_advantage, predict, sample_predictor
from .oracle import ProbabilisticOracle, majority_query
from .rng import child

STAGES = ("nw-reconstruction", "gl-decode", "direct-product", "select-candidate")


def majority_votes(target: float) -> int:
    """Odd vote count ``2*ceil(6 ln(1/target)) + 1`` driving a majority's error below ``target``."""
    if not 0 < target < 1:
        raise ValueError("target must lie in (0, 1)")
    return 2 * math.ceil(6 * math.log(1 / target)) + 1


class ParitySpec:
    """Parity's two self-reductions.

    Random: ``f(x) = f(x ^ r) ^ f(r)`` with ``r`` uniform, so each of the two
    query points is uniform.  Downward: ``f(x) = f(x mod 2**(n-1)) ^ x_{n-1}``.
    """

    name = "parity"
    a = 2

    @staticmethod
    def evaluate(xs, n: int) -> np.ndarray:
        return popcount(np.asarray(xs, dtype=np.int64) & ((1 << n) - 1)) & 1

    @staticmethod
    def random_points(xs, n: int, rng) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        r = rng.integers(0, 1 << n, size=xs.shape[0], dtype=np.int64)
        return np.stack([xs ^ r, r], axis=1)

    @staticmethod
    def recombine(answers: np.ndarray) -> np.ndarray:
        return np.bitwise_xor.reduce(answers.astype(np.int64), axis=1)

    @staticmethod
    def downward_points(xs, n: int) -> np.ndarray:
        return np.asarray(xs, dtype=np.int64) & ((1 << (n - 1)) - 1)

    @staticmethod
    def downward_combine(xs, n: int, answers) -> np.ndarray:
        return np.asarray(answers, dtype=np.int64) ^ ((np.asarray(xs, dtype=np.int64) >> (n - 1)) & 1)


PARITY = ParitySpec()


def exact_oracle(n: int, spec=PARITY) -> ProbabilisticOracle:
    return ProbabilisticOracle(n, 1, lambda xs, rng: spec.evaluate(xs, n).astype(np.uint64), "exact", True)


def table_oracle(f: BooleanFunction) -> ProbabilisticOracle:
    return ProbabilisticOracle(f.n, 1, lambda xs, rng: f.table[xs].astype(np.uint64), "table", True)


def noisy_oracle(n: int, success: float, spec=PARITY) -> ProbabilisticOracle:
    """Right on each query independently with probability ``success``."""
    def sample(xs, rng):
        right = spec.evaluate(xs, n)
        return (right ^ (rng.random(xs.shape[0]) >= success)).astype(np.uint64)

    return ProbabilisticOracle(n, 1, sample, "noisy", success == 1.0)


def corrupted_oracle(n: int, bad, spec=PARITY) -> ProbabilisticOracle:
    """Deterministic; wrong exactly on the inputs in ``bad``."""
    flip = np.zeros(1 << n, dtype=np.int64)
    flip[np.asarray(list(bad), dtype=np.int64)] = 1
    return ProbabilisticOracle(n, 1, lambda xs, rng: (spec.evaluate(xs, n) ^ flip[xs]).astype(np.uint64),
                               "corrupted", True)


def rsr_amplify(U: ProbabilisticOracle, spec=PARITY, votes: Optional[int] = None,
                outer: Optional[int] = None) -> ProbabilisticOracle:
    """Worst-case corrector built from an average-case oracle ``U``.

    Each answer is a majority over ``outer`` independent random reductions;
    every reduction point is itself answered by a ``votes``-fold majority of
    ``U``.  Both counts default to :func:`majority_votes` at ``2**-n``.
    """
    n = U.in_bits
    votes = votes or majority_votes(2.0 ** -n)
    outer = outer or majority_votes(2.0 ** -n)

    def sample(xs, rng):
        pts = spec.random_points(np.repeat(xs, outer), n, rng)
        ans = majority_query(U, pts.ravel(), votes, rng).reshape(pts.shape)
        vals = spec.recombine(ans).reshape(xs.shape[0], outer)
        return (2 * vals.sum(axis=1) > outer).astype(np.uint64)

    return ProbabilisticOracle(n, 1, sample, "rsr", False)


def dsr_lift(P_prev: ProbabilisticOracle, spec=PARITY, votes: Optional[int] = None) -> ProbabilisticOracle:
    """Oracle for length ``n = P_prev.in_bits + 1`` answering the downward query by majority."""
    n = P_prev.in_bits + 1
    votes = votes or majority_votes(2.0 ** -n)

    def sample(xs, rng):
        ans = majority_query(P_prev, spec.downward_points(xs, n), votes, rng)
        return spec.downward_combine(xs, n, ans).astype(np.uint64)

    return ProbabilisticOracle(n, 1, sample, "dsr", P_prev.deterministic)


def lift_chain(base: ProbabilisticOracle, up_to: int, spec=PARITY, votes: Optional[int] = None) -> list:
    """``[base, dsr_lift(base), ...]`` up to length ``up_to``."""
    chain = [base]
    while chain[-1].in_bits < up_to:
        chain.append(dsr_lift(chain[-1], spec, votes))
    return chain


class Selection(NamedTuple):
    index: int
    oracle: ProbabilisticOracle
    agreements: tuple


def select_candidate(P_prev: ProbabilisticOracle, candidates, R: int, spec=PARITY, rng=None,
                     votes: Optional[int] = None, referee: Optional[ProbabilisticOracle] = None) -> Optional[Selection]:
    """Keep candidates agreeing with the lifted referee on at least ``3R/4`` of ``R`` random points.

    Returns the corrected smallest-index survivor, or ``None`` when none survive.
    """
    if R < 1:
        raise ValueError("R must be at least 1")
    referee = referee or dsr_lift(P_prev, spec, votes)
    n = referee.in_bits
    counts = []
    for cand in candidates:
        xs = rng.integers(0, 1 << n, size=R, dtype=np.int64)
        counts.append(int(np.count_nonzero(cand.query_batch(xs, rng) == referee.query_batch(xs, rng))))
    kept = [i for i, c in enumerate(counts) if 4 * c >= 3 * R]
    if not kept:
        return None
    return Selection(kept[0], rsr_amplify(candidates[kept[0]], spec), tuple(counts))


# -- the generator over the amplified function -----------------------------

def io_function(f: BooleanFunction, k: int) -> BooleanFunction:
    """``h(x_1..x_k, r) = XOR_i r_i f(x_i)`` on ``k n + k`` bits; block ``i`` is bits ``[i n, (i+1) n)``."""
    n = f.n
    if k * n + k > 24:
        raise ValueError("k n + k must be at most 24")
    zs = np.arange(1 << (k * n + k), dtype=np.int64)
    out = np.zeros(zs.shape, dtype=np.uint8)
    for i in range(k):
        out ^= f.table[(zs >> (i * n)) & ((1 << n) - 1)] & ((zs >> (k * n + i)) & 1).astype(np.uint8)
    return BooleanFunction(k * n + k, out)


def build_io_generator(f: BooleanFunction, k: int, t: int, m: Optional[int] = None, alpha: Optional[int] = None,
                       c: int = 16) -> NwGenerator:
    h = io_function(f, k)
    return NwGenerator(h, build_design(h.n, t, c=c, m=m, alpha=alpha))


def pack_tuple(blocks, n: int) -> np.ndarray:
    """Pack rows of ``k`` ``n``-bit strings into ``k n``-bit integers, block ``i`` at bit ``i n``."""
    blocks = np.asarray(blocks, dtype=np.int64)
    return (blocks << (np.arange(blocks.shape[1], dtype=np.int64) * n)).sum(axis=1)


# -- the pipeline ----------------------------------------------------------

class BudgetExhausted(RuntimeError):
    def __init__(self, stage: str):
        super().__init__(f"budget exhausted in stage {stage}")
        self.stage = stage


@dataclass(frozen=True)
class PipelineParams:
    k: int = 2
    lambda_exp: float = 0.5
    design_m: int = 10
    design_t: int = 14
    design_alpha: int = 7
    epsilon_prime: float = 0.25
    delta: float = 0.125
    T: int = 64
    R: int = 48
    candidates: int = 8
    referee_votes: Optional[int] = None
    budget: int = 3_000_000
    consistency_points: int = 256
    consistency_floor: float = 0.9

    def __post_init__(self):
        if self.k < 2 or self.k % 2:
            raise ValueError("k must be even and at least 2")
        if min(self.design_m, self.design_t, self.T, self.R, self.candidates, self.budget) < 1:
            raise ValueError("pipeline sizes must be positive")

    def overrides(self, j: int) -> list:
        """Each toy value next to the asymptotic schedule it replaces."""
        return [
            {"name": "k", "value": self.k, "replaces_formula": "k(n) = 2 n^(2b+a+d+2)"},
            {"name": "epsilon_prime", "value": self.epsilon_prime, "replaces_formula": "eps'(j) = 2^(-10 j^lambda)"},
            {"name": "delta", "value": self.delta, "replaces_formula": "delta(j) = j^(-2b-a)"},
            {"name": "candidates", "value": self.candidates, "replaces_formula": "t(j) = poly(j, 1/zeta(j)) = 2^O(j^lambda)"},
            {"name": "T", "value": self.T, "replaces_formula": "T(j) = O(log(1/delta(j)) / eps'(j)^2)"},
            {"name": "seed_length", "value": self.design_m, "replaces_formula": "l = (k n + k)^2"},
            {"name": "output_length", "value": self.design_t, "replaces_formula": "m = floor(2^(n^lambda))"},
            {"name": "design_m", "value": self.design_m, "replaces_formula": "design universe m = c n^2"},
            {"name": "design_alpha", "value": self.design_alpha, "replaces_formula": "alpha = log t"},
            {"name": "R", "value": self.R, "replaces_formula": "R = O(log(t(n)/eta)), eta = 1/poly(n)"},
        ]


class PipelineResult(NamedTuple):
    oracle: Optional[ProbabilisticOracle]
    diagnostic: str
    unreliable: bool
    report: dict


def toy_design(j: int, params: PipelineParams) -> Design:
    return build_design(params.k * j + params.k, params.design_t, m=params.design_m, alpha=params.design_alpha)


def toy_generator(j: int, params: PipelineParams, spec=PARITY) -> NwGenerator:
    f = BooleanFunction(j, spec.evaluate(np.arange(1 << j), j).astype(np.uint8))
    return NwGenerator(io_function(f, params.k), toy_design(j, params))


def permutation_wrapper(B: qsim.GLDecoder, n: int, k: int, count) -> ProbabilisticOracle:
    """k-set oracle: permute the set at random, decode the tuple, undo the permutation.

    A failed decode answers with a uniform string.
    """
    def sample(rows, rng):
        count(rows.shape[0])
        N = rows.shape[0]
        perms = np.argsort(rng.random((N, k)), axis=1)
        tuples = np.take_along_axis(rows, perms, axis=1)
        a = B.decode_batch(pack_tuple(tuples, n), rng)
        junk = rng.integers(0, 1 << k, size=N, dtype=np.int64)
        a = np.where(a < 0, junk, a)
        out = np.zeros(N, dtype=np.uint64)
        for i in range(k):
            # tuple slot i carries the sorted element perms[:, i]
            out |= ((a >> i) & 1).astype(np.uint64) << perms[:, i].astype(np.uint64)
        return out

    return ProbabilisticOracle(n, k, sample, "permuted-gl", False, (k,))


def candidate_oracle(dec, G: ProbabilisticOracle, n: int) -> ProbabilisticOracle:
    """``C_{A,w}`` as an oracle for ``f_n``; the failure symbol becomes a random bit."""
    def sample(xs, rng):
        out = decode_batch(dec, xs, G, rng)
        bad = out < 0
        out[bad] = rng.integers(0, 2, size=int(bad.sum()))
        return out.astype(np.uint64)

    return ProbabilisticOracle(n, 1, sample, "dp-candidate", False)


def referee_consistency(referee: ProbabilisticOracle, spec, points: int, rng) -> float:
    """Fraction of random ``x`` where the referee respects the random self-reduction."""
    n = referee.in_bits
    xs = rng.integers(0, 1 << n, size=points, dtype=np.int64)
    pts = spec.random_points(xs, n, rng)
    lhs = referee.query_batch(xs, rng).astype(np.int64)
    rhs = spec.recombine(referee.query_batch(pts.ravel(), rng).reshape(pts.shape))
    return float(np.mean(lhs == rhs))


def pipeline_step(j: int, P_prev: ProbabilisticOracle, D: ProbabilisticOracle, params: PipelineParams, rng,
                  budget: Optional[int] = None, spec=PARITY) -> PipelineResult:
    """One bootstrap level: from a distinguisher for the level-``j`` generator to an oracle for ``f_j``.

    Stage diagnostics compare each attempt's intermediate object with values
    derived from the referee ``dsr_lift(P_prev)``; they never feed back into
    the algorithm.
    """
    if P_prev.in_bits != j - 1:
        raise ValueError(f"P_prev must act on {j - 1} bits")
    k = params.k
    design = toy_design(j, params)
    if D.in_bits != design.t:
        raise ValueError(f"distinguisher must act on {design.t} bits")
    budget = params.budget if budget is None else budget
    counter: dict = {"total": 0}
    stage_now = ["referee"]

    def count(q):
        counter["total"] += q
        counter[stage_now[0]] = counter.get(stage_now[0], 0) + q
        if counter["total"] > budget:
            raise BudgetExhausted(stage_now[0])

    def metered(o: ProbabilisticOracle) -> ProbabilisticOracle:
        def sample(zs, r):
            count(zs.shape[0])
            return o.query_batch(zs, r)
        return ProbabilisticOracle(o.in_bits, o.out_bits, sample, o.kind, o.deterministic, o.input_shape)

    votes = params.referee_votes or majority_votes(2.0 ** -j)
    referee = metered(dsr_lift(metered(P_prev), spec, votes))
    stages = {s: {"attempts": 0, "passed": 0} for s in STAGES}
    report = {"j": j, "params": asdict(params), "overrides": params.overrides(j), "stages": stages,
              "budget": budget, "attempts": []}

    def finish(oracle, diagnostic, unreliable):
        report.update(diagnostic=diagnostic, unreliable=unreliable, queries=dict(counter))
        return PipelineResult(oracle, diagnostic, unreliable, report)

    consistency = None
    try:
        consistency = referee_consistency(referee, spec, params.consistency_points, child(rng, 0))
        f_ref = BooleanFunction(j, majority_query(referee, np.arange(1 << j), votes, child(rng, 1)).astype(np.uint8))
        h_ref = io_function(f_ref, k)
        report["referee_consistency"] = consistency
        report["advantage"] = measure_advantage(NwGenerator(h_ref, design), D, rng=child(rng, 2))
        Dm = metered(D)
        candidates, raw = [], []
        for a in range(params.candidates):
            r = child(rng, 3, a)
            row = {"attempt": a}
            # stage 1: next-bit predictor; table windows are evaluated through the referee values
            stage_now[0] = "nw-reconstruction"
            stages["nw-reconstruction"]["attempts"] += 1
            p = sample_predictor(design, Dm, r, lambda ws: h_ref.table[ws])
            xs = np.arange(1 << h_ref.n, dtype=np.int64)
            pred = predict(p, xs, Dm, r).astype(np.uint8)
            agree = float(np.mean(pred == h_ref.table))
            baseline = max(h_ref.table.mean(), 1 - h_ref.table.mean())
            row.update(predictor_j=p.j, predictor_agreement=agree, constant_baseline=float(baseline))
            stages["nw-reconstruction"]["passed"] += int(agree > baseline)
            # stage 2: GL decoding of the predictor's table
            stage_now[0] = "gl-decode"
            stages["gl-decode"]["attempts"] += 1
            gl = qsim.GLDecoder(qsim.table_circuit(BooleanFunction(h_ref.n, pred), k * j, k), k * j, k)
            tuples = np.arange(1 << (k * j), dtype=np.int64)
            truth = sum(f_ref.table[(tuples >> (i * j)) & ((1 << j) - 1)].astype(np.int64) << i for i in range(k))
            gl_rate = float(np.mean([gl.law(int(x))[_designated(int(x), int(a_), k * j, k)] for x, a_ in zip(tuples, truth)]))
            count(int(tuples.size))
            gl_baseline = float(np.bincount(truth, minlength=1 << k).max() / truth.size)
            row.update(gl_success=gl_rate, gl_baseline=gl_baseline)
            stages["gl-decode"]["passed"] += int(gl_rate > gl_baseline)
            # stage 3: permutation wrapper and direct-product decoding
            stage_now[0] = "direct-product"
            stages["direct-product"]["attempts"] += 1
            G = permutation_wrapper(gl, j, k, count)
            dp = DpParams(j, k, params.epsilon_prime, params.delta, params.T)
            dec = sample_decoder(G, dp, r)
            cand = candidate_oracle(dec, G, j)
            inputs = np.repeat(np.arange(1 << j, dtype=np.int64), 4)
            cand_rate = float(np.mean(cand.query_batch(inputs, r).astype(np.int64) == f_ref.table[inputs]))
            row["candidate_agreement"] = cand_rate
            stages["direct-product"]["passed"] += int(cand_rate >= 1 - params.delta)
            candidates.append(metered(cand))
            raw.append(cand)
            report["attempts"].append(row)
        stage_now[0] = "select-candidate"
        stages["select-candidate"]["attempts"] += 1
        sel = select_candidate(P_prev, candidates, params.R, spec, child(rng, 4), votes, referee=referee)
    except BudgetExhausted as exc:
        return finish(None, exc.stage, consistency is not None and consistency < params.consistency_floor)
    unreliable = consistency < params.consistency_floor
    failed = [s for s in STAGES[:-1] if stages[s]["passed"] == 0]
    if sel is None:
        return finish(None, failed[0] if failed else "select-candidate", unreliable)
    stages["select-candidate"]["passed"] = 1
    report["selected"] = sel.index
    report["selection_counts"] = list(sel.agreements)
    # the caller gets the unmetered oracle; the budget covers the step only
    return finish(raw[sel.index], "ok", unreliable)


def _designated(x: int, a: int, x_bits: int, k: int) -> int:
    """Index of the GL outcome reporting ``a`` on ``x`` (workspace 0, flag 1)."""
    return x | (a << x_bits) | (1 << (x_bits + k + 1))


def exact_on_all(oracle: ProbabilisticOracle, n: int, repeats: int, rng, spec=PARITY) -> bool:
    xs = np.repeat(np.arange(1 << n, dtype=np.int64), repeats)
    return bool(np.all(oracle.query_batch(xs, rng).astype(np.int64) == spec.evaluate(xs, n)))


# -- the hard language ------------------------------------------------------

@dataclass
class NwFamily:
    """Generators ``G_t`` over a fixed base function with output length ``floor(2**(t**lam))``."""

    base: BooleanFunction
    lam: float
    c: int = 16
    _cache: dict = field(default_factory=dict, repr=False)

    def out_len(self, t: int) -> int:
        return math.floor(2 ** (t ** self.lam))

    def x_len(self, t: int) -> int:
        return math.floor(t ** self.lam)

    def supports(self, t: int) -> bool:
        return t >= 1 and self.out_len(t) <= 1 << self.base.n

    def generator(self, t: int) -> NwGenerator:
        if t not in self._cache:
            if not self.supports(t):
                raise ValueError(f"t={t} needs more than 2**{self.base.n} outputs")
            self._cache[t] = NwGenerator(self.base, build_design(self.base.n, self.out_len(t), c=self.c))
        return self._cache[t]

    def seed_len(self, t: int) -> int:
        """Padded seed length: the running maximum of design seed lengths up to ``t``.

        Keeping it non-decreasing makes ``|1^t w x|`` strictly increasing in ``t``, so the
        encoding is uniquely decodable. ``G_t`` reads the first ``seed_bits`` bits of ``w``.
        """
        return max(self.generator(s).seed_bits for s in range(1, t + 1))


def encode_input(family: NwFamily, t: int, w: str, x: str) -> str:
    if len(w) != family.seed_len(t) or len(x) != family.x_len(t):
        raise ValueError("w or x has the wrong length for t")
    return "1" * t + w + x


def parse_input(family: NwFamily, u: str):
    """``(t, w, x)`` with ``u = 1^t w x``, or ``None`` if no ``t`` fits."""
    if any(ch not in "01" for ch in u):
        return None
    lead = len(u) - len(u.lstrip("1"))
    # the encoded length is strictly increasing in t, so at most one t matches
    for t in range(1, len(u) + 1):
        if not family.supports(t):
            break
        m, xl = family.seed_len(t), family.x_len(t)
        if t + m + xl >= len(u):
            if t + m + xl == len(u) and t <= lead:
                return t, u[t:t + m], u[t + m:]
            break
    return None


def hard_language_eval(family: NwFamily, u: str) -> Optional[int]:
    """Reject (``None``) malformed inputs; otherwise bit ``x`` of the first ``2**|x|`` outputs of ``G_t(w)``."""
    from .bitfunc import int_of
    from .nw import nw_eval

    parsed = parse_input(family, u)
    if parsed is None:
        return None
    t, w, x = parsed
    gen = family.generator(t)
    out = nw_eval(gen, int_of(w[:gen.seed_bits]))
    prefix = out & ((1 << (1 << len(x))) - 1)
    return (prefix >> int_of(x)) & 1
