"""Dense statevector simulation of small circuits.

Basis index ``b`` of a ``q``-qubit state is little-endian: qubit ``i`` is
bit ``i`` of ``b``.  A classical input ``x`` is loaded as the basis state
``|x>``, so its bit ``i`` lands on wire ``i``.

The gate set is ``H, X, Z, CZ, CNOT, Toffoli``, a membership gate
``O_f|x, b> = |x, b xor f(x)>`` acting on chosen wires, and ``Measure``.
Every unitary gate here is its own inverse, so a circuit's inverse is its
gate list reversed.

Usage::

    c = QuantumCircuit(2, [H(0), CNOT(0, 1), Measure(0), Measure(1)])
    bits, state = run(c, 0, rng)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .bitfunc import BooleanFunction, popcount

MAX_QUBITS = 26
_SQRT_HALF = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class Gate:
    op: str
    wires: tuple
    fn: Optional[BooleanFunction] = field(default=None, compare=False)


def H(i): return Gate("h", (i,))
def X(i): return Gate("x", (i,))
def Z(i): return Gate("z", (i,))
def CZ(i, j): return Gate("cz", (i, j))
def CNOT(c, t): return Gate("cnot", (c, t))
def Toffoli(a, b, t): return Gate("toffoli", (a, b, t))
def Measure(i): return Gate("measure", (i,))


def Oracle(f: BooleanFunction, inputs: Sequence[int], target: int) -> Gate:
    inputs = tuple(int(w) for w in inputs)
    if len(inputs) != f.n:
        raise ValueError(f"membership gate needs {f.n} input wires, got {len(inputs)}")
    if target in inputs:
        raise ValueError("target wire must differ from the input wires")
    return Gate("oracle", inputs + (int(target),), f)


def membership_gate(f: BooleanFunction, inputs: Optional[Sequence[int]] = None, target: Optional[int] = None) -> Gate:
    """``O_f`` on ``inputs`` (default wires ``0..n-1``) flipping ``target`` (default ``n``)."""
    inputs = range(f.n) if inputs is None else inputs
    return Oracle(f, inputs, f.n if target is None else target)


_ARITY = {"h": 1, "x": 1, "z": 1, "measure": 1, "cz": 2, "cnot": 2, "toffoli": 3}


@dataclass(frozen=True)
class QuantumCircuit:
    q: int
    gates: tuple = ()

    def __post_init__(self):
        if not 1 <= self.q <= MAX_QUBITS:
            raise ValueError(f"qubit count must lie in [1, {MAX_QUBITS}]")
        gates = tuple(self.gates)
        for g in gates:
            if g.op != "oracle" and len(g.wires) != _ARITY.get(g.op, -1):
                raise ValueError(f"bad gate {g}")
            if any(not 0 <= w < self.q for w in g.wires):
                raise ValueError(f"wire index out of range in {g.op}{g.wires} for q={self.q}")
            if len(set(g.wires)) != len(g.wires):
                raise ValueError(f"repeated wire in {g.op}{g.wires}")
        object.__setattr__(self, "gates", gates)

    @property
    def measurement_free(self) -> bool:
        return all(g.op != "measure" for g in self.gates)

    def then(self, *gates) -> "QuantumCircuit":
        return QuantumCircuit(self.q, self.gates + tuple(gates))

    def widen(self, q: int) -> "QuantumCircuit":
        return QuantumCircuit(q, self.gates)

    def inverse(self) -> "QuantumCircuit":
        if not self.measurement_free:
            raise ValueError("a circuit containing Measure has no inverse")
        return QuantumCircuit(self.q, self.gates[::-1])


@dataclass
class QuantumState:
    q: int
    amps: np.ndarray

    @classmethod
    def basis(cls, q: int, x: int = 0) -> "QuantumState":
        if x < 0 or x >> q:
            raise ValueError(f"input {x} does not fit in {q} qubits")
        amps = np.zeros(1 << q, dtype=np.complex128)
        amps[x] = 1.0
        return cls(q, amps)

    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def wire_probability(self, wire: int) -> float:
        """Probability that measuring ``wire`` gives 1."""
        mask = (_index(self.q) >> wire) & 1
        return float(self.probabilities()[mask.astype(bool)].sum())


@lru_cache(maxsize=32)
def _index(q: int) -> np.ndarray:
    idx = np.arange(1 << q, dtype=np.int64)
    idx.flags.writeable = False
    return idx


def _apply(state: QuantumState, g: Gate, rng, measured: list) -> None:
    amps, q = state.amps, state.q
    op, w = g.op, g.wires
    if op == "h":
        v = amps.reshape(-1, 2, 1 << w[0])
        a = v[:, 0, :].copy()
        v[:, 0, :] += v[:, 1, :]
        v[:, 1, :] = a - v[:, 1, :]
        v *= _SQRT_HALF
    elif op == "x":
        v = amps.reshape(-1, 2, 1 << w[0])
        v[:] = v[:, ::-1, :].copy()
    elif op == "z":
        amps.reshape(-1, 2, 1 << w[0])[:, 1, :] *= -1
    elif op == "cz":
        idx = _index(q)
        amps[((idx >> w[0]) & (idx >> w[1]) & 1).astype(bool)] *= -1
    elif op in ("cnot", "toffoli", "oracle"):
        idx = _index(q)
        if op == "cnot":
            flip = (idx >> w[0]) & 1
        elif op == "toffoli":
            flip = (idx >> w[0]) & (idx >> w[1]) & 1
        else:
            x = np.zeros_like(idx)
            for c, wire in enumerate(w[:-1]):
                x |= ((idx >> wire) & 1) << c
            flip = g.fn.table[x].astype(np.int64)
        state.amps = amps[idx ^ (flip << w[-1])]
    elif op == "measure":
        mask = ((_index(q) >> w[0]) & 1).astype(bool)
        p1 = float((np.abs(amps[mask]) ** 2).sum())
        bit = int(rng.random() < p1)
        keep = mask if bit else ~mask
        amps[~keep] = 0.0
        amps /= np.sqrt(p1 if bit else 1.0 - p1)
        measured.append(bit)
    else:
        raise ValueError(f"unknown gate {op}")


def run(c: QuantumCircuit, x: int = 0, rng=None):
    """Run ``c`` on ``|x, 0...>``; returns (measured bits in order, final state)."""
    state = QuantumState.basis(c.q, x)
    measured: list = []
    if rng is None and not c.measurement_free:
        raise ValueError("a circuit with measurements needs a random stream")
    for g in c.gates:
        _apply(state, g, rng, measured)
    norm = state.norm()
    assert abs(norm - 1.0) < 1e-9, f"state lost normalisation ({norm})"
    return measured, state


def final_state(c: QuantumCircuit, x: int = 0) -> QuantumState:
    """State after all unitary gates, with measurements skipped."""
    return run(QuantumCircuit(c.q, [g for g in c.gates if g.op != "measure"]), x)[1]


def measured_wires(c: QuantumCircuit) -> list:
    """Wires measured by ``c``, in order, checking that measurement can be deferred."""
    wires = []
    for pos, g in enumerate(c.gates):
        if g.op != "measure":
            continue
        w = g.wires[0]
        if w in wires or any(w in h.wires for h in c.gates[pos + 1:] if h.op != "measure"):
            raise ValueError(f"wire {w} is touched after being measured")
        wires.append(w)
    return wires


def outcome_distribution(c: QuantumCircuit, x: int = 0):
    """Joint law of the measured wires as ``(wires, probabilities over outcomes)``.

    Outcome ``o`` has bit ``i`` equal to the result of the ``i``-th measurement.
    """
    wires = measured_wires(c)
    p = final_state(c, x).probabilities()
    o = np.zeros(p.size, dtype=np.int64)
    idx = _index(c.q)
    for i, w in enumerate(wires):
        o |= ((idx >> w) & 1) << i
    return wires, np.bincount(o, weights=p, minlength=1 << len(wires))


def sample_outcomes(probs: np.ndarray, shots: int, rng) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    return np.searchsorted(cdf, rng.random(shots), side="right").astype(np.int64)


def sample_shots(c: QuantumCircuit, x: int, shots: int, rng) -> np.ndarray:
    """``shots`` independent runs of ``c``; outcome bit ``i`` is measurement ``i``."""
    return sample_outcomes(outcome_distribution(c, x)[1], shots, rng)


def uncompute_garbage(c: QuantumCircuit, out_wire: int = 0) -> QuantumCircuit:
    """Compute, copy ``out_wire`` to a fresh qubit, uncompute, measure the copy.

    The result acts on ``c.q + 1`` qubits; the copy is the last wire.
    """
    if not c.measurement_free:
        raise ValueError("garbage removal needs a measurement-free circuit")
    copy = c.q
    gates = c.gates + (CNOT(out_wire, copy),) + c.gates[::-1] + (Measure(copy),)
    return QuantumCircuit(c.q + 1, gates)


def restoration_probability(c: QuantumCircuit, x: int, out_wire: int = 0) -> float:
    """Probability that garbage removal returns every wire of ``c`` to ``|x, 0...>``."""
    cleaned = uncompute_garbage(c, out_wire)
    p = final_state(cleaned, x).probabilities()
    return float(p[x] + p[x | (1 << c.q)])


# -- Fourier sampling -------------------------------------------------------

def fourier_sampling_circuit(f: BooleanFunction) -> QuantumCircuit:
    """Wires ``0..n-1`` hold the register, wire ``n`` the flag.

    Measurement order is the flag first, then register bits ``0..n-1``.
    """
    n = f.n
    reg = list(range(n))
    gates = [H(i) for i in reg] + [membership_gate(f), H(n), Measure(n)]
    gates += [H(i) for i in reg] + [Measure(i) for i in reg]
    return QuantumCircuit(n + 1, gates)


def fourier_flag_probability(f: BooleanFunction) -> float:
    """Probability of the flag reading 1, from amplitudes just before it is measured."""
    n = f.n
    c = QuantumCircuit(n + 1, [H(i) for i in range(n)] + [membership_gate(f), H(n)])
    return final_state(c).wire_probability(n)


def fourier_sample(f: BooleanFunction, rng) -> Optional[int]:
    """One Fourier sample: ``None`` on a 0 flag, otherwise ``S`` with probability ``f^(S)**2``."""
    bits, _ = run(fourier_sampling_circuit(f), 0, rng)
    if bits[0] == 0:
        return None
    return sum(b << i for i, b in enumerate(bits[1:]))


def fourier_samples(f: BooleanFunction, shots: int, rng) -> np.ndarray:
    """``shots`` independent Fourier samples, ``-1`` marking a 0 flag."""
    o = sample_shots(fourier_sampling_circuit(f), 0, shots, rng)
    return np.where(o & 1, o >> 1, -1)


# -- Goldreich-Levin decoding -----------------------------------------------

def gl_circuit(A: QuantumCircuit, x_bits: int, k: int) -> QuantumCircuit:
    """The decoding circuit built around ``A``.

    ``A`` acts on ``x_bits + k + m`` wires laid out as input ``x``, the
    selector ``r``, then ``m >= 1`` workspace wires whose last one carries
    ``A``'s answer.  One extra flag wire (index ``A.q``) is prepared in
    ``|1>``.  Steps: superpose ``r``; run ``A``; controlled-Z between the
    answer wire and the flag; run ``A`` backwards; Hadamard ``r``; measure
    every wire.
    """
    if not A.measurement_free:
        raise ValueError("A must be measurement-free")
    if A.q < x_bits + k + 1:
        raise ValueError("A needs at least one workspace wire after x and r")
    flag, out = A.q, A.q - 1
    r = list(range(x_bits, x_bits + k))
    gates = [X(flag)] + [H(i) for i in r] + list(A.gates) + [CZ(out, flag)]
    gates += list(A.gates[::-1]) + [H(i) for i in r] + [Measure(i) for i in range(A.q + 1)]
    return QuantumCircuit(A.q + 1, gates)


def _gl_read(outcome: int, x: int, x_bits: int, k: int, q: int) -> Optional[int]:
    """Decode a full measurement record; ``None`` off the designated pattern."""
    if outcome & ((1 << x_bits) - 1) != x:
        return None
    work = outcome >> (x_bits + k)
    if work != 1 << (q - x_bits - k - 1):
        return None
    return (outcome >> x_bits) & ((1 << k) - 1)


def gl_decode(A: QuantumCircuit, x: int, x_bits: int, k: int, rng) -> Optional[int]:
    """One run of the decoder on input ``x``; ``None`` unless the designated outcome appears."""
    c = gl_circuit(A, x_bits, k)
    bits, _ = run(c, x, rng)
    outcome = sum(b << i for i, b in enumerate(bits))
    return _gl_read(outcome, x, x_bits, k, c.q)


def gl_success_probability(A: QuantumCircuit, x: int, x_bits: int, k: int, a: int) -> float:
    """Exact probability that the decoder outputs ``a`` on ``x``."""
    c = gl_circuit(A, x_bits, k)
    amps = final_state(c, x).amps
    return float(abs(amps[x | (a << x_bits) | (1 << A.q)]) ** 2)


def gl_correlation(A: QuantumCircuit, x: int, x_bits: int, k: int, a: int) -> float:
    """``E_r[Pr(A says <a,r>) - Pr(A says not <a,r>)]`` by running ``A`` on each ``|x, r, 0>``."""
    out = A.q - 1
    total = 0.0
    for r in range(1 << k):
        p1 = final_state(A, x | (r << x_bits)).wire_probability(out)
        want = int(popcount(a & r)) & 1
        total += (1 - p1) - p1 if want == 0 else p1 - (1 - p1)
    return total / (1 << k)


class GLDecoder:
    """Repeated decoding with ``A`` fixed.

    The pre-measurement state depends only on ``x``, so its outcome law is
    computed once per distinct ``x`` and each call samples that law.
    """

    def __init__(self, A: QuantumCircuit, x_bits: int, k: int):
        self.A, self.x_bits, self.k = A, x_bits, k
        self.circuit = gl_circuit(A, x_bits, k)
        self._laws: dict = {}
        self.simulations = 0

    def law(self, x: int) -> np.ndarray:
        if x not in self._laws:
            self._laws[x] = outcome_distribution(self.circuit, x)[1]
            self.simulations += 1
        return self._laws[x]

    def decode_batch(self, xs, rng) -> np.ndarray:
        """Decoded values, ``-1`` marking a failed run."""
        xs = np.asarray(xs, dtype=np.int64)
        out = np.full(xs.shape, -1, dtype=np.int64)
        for x in np.unique(xs):
            sel = np.flatnonzero(xs == x)
            draws = sample_outcomes(self.law(int(x)), sel.size, rng)
            out[sel] = [(-1 if v is None else v) for v in
                        (_gl_read(int(o), int(x), self.x_bits, self.k, self.circuit.q) for o in draws)]
        return out


def table_circuit(table: BooleanFunction, x_bits: int, k: int) -> QuantumCircuit:
    """``A`` answering a classical predicate of ``(x, r)`` on a single workspace wire."""
    if table.n != x_bits + k:
        raise ValueError("predicate arity must be x_bits + k")
    q = x_bits + k + 1
    return QuantumCircuit(q, [membership_gate(table, range(x_bits + k), q - 1)])


def biased_predicate(answers, x_bits: int, k: int, gamma: float, rng) -> BooleanFunction:
    """Predicate on ``(x, r)`` agreeing with ``<answers[x], r>`` on exactly ``1/2 + gamma`` of each row.

    For every ``x`` a uniformly chosen ``(1/2 - gamma) 2**k`` of the selectors
    get the wrong bit, so the advantage is exact and the same for every ``x``.
    """
    answers = np.asarray(answers, dtype=np.int64)
    if answers.shape != (1 << x_bits,):
        raise ValueError("need one k-bit answer per x")
    flips = (0.5 - gamma) * (1 << k)
    if not 0 <= flips <= 1 << k or abs(flips - round(flips)) > 1e-9:
        raise ValueError(f"(1/2 - gamma) * 2**k = {flips} must be a whole number of selectors")
    flips = int(round(flips))
    r = np.arange(1 << k, dtype=np.int64)
    table = np.empty(1 << (x_bits + k), dtype=np.uint8)
    for x in range(1 << x_bits):
        row = (popcount(answers[x] & r) & 1).astype(np.uint8)
        row[rng.permutation(1 << k)[:flips]] ^= 1
        table[x | (r << x_bits)] = row
    return BooleanFunction(x_bits + k, table)


# -- serialisation ----------------------------------------------------------

def circuit_to_dict(c: QuantumCircuit, fn_ref=None) -> dict:
    """JSON-ready gate list; ``fn_ref(f)`` names the file holding an oracle's table."""
    gates = []
    for g in c.gates:
        entry = {"op": g.op, "wires": list(g.wires)}
        if g.fn is not None:
            if fn_ref is None:
                raise ValueError("membership gates need fn_ref to name their tables")
            entry["fn_ref"] = fn_ref(g.fn)
        gates.append(entry)
    return {"q": c.q, "gates": gates}


def circuit_from_dict(d: dict, load_fn=None) -> QuantumCircuit:
    gates = []
    for e in d["gates"]:
        fn = load_fn(e["fn_ref"]) if "fn_ref" in e else None
        gates.append(Gate(e["op"], tuple(e["wires"]), fn))
    return QuantumCircuit(int(d["q"]), gates)
