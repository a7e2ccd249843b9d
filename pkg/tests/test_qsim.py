import numpy as np
import pytest
from hypothesis import given, strategies as st

from hardamp import qsim
from hardamp.bitfunc import BooleanFunction, chi, popcount, random_function, walsh_hadamard
from hardamp.oracle import proportion_estimate
from hardamp.qsim import CNOT, CZ, H, Measure, QuantumCircuit, Toffoli, X, Z, final_state, run
from hardamp.rng import make_rng

gates = st.one_of(
    st.builds(H, st.integers(0, 3)), st.builds(X, st.integers(0, 3)), st.builds(Z, st.integers(0, 3)),
    st.permutations(range(4)).map(lambda p: CZ(p[0], p[1])),
    st.permutations(range(4)).map(lambda p: CNOT(p[0], p[1])),
    st.permutations(range(4)).map(lambda p: Toffoli(p[0], p[1], p[2])))


def test_hadamard_twice_is_identity():
    assert np.allclose(final_state(QuantumCircuit(1, [H(0), H(0)])).amps, [1, 0], atol=0)


def test_toffoli_little_endian():
    # |110> with bits 0 and 1 set is basis index 3
    s = final_state(QuantumCircuit(3, [Toffoli(0, 1, 2)]), 0b011)
    assert abs(s.amps[0b111]) == 1.0


def test_born_rule(rng):
    c = QuantumCircuit(1, [H(0), Measure(0)])
    ones = qsim.sample_shots(c, 0, 100_000, rng).mean()
    assert abs(ones - 0.5) <= 0.005
    bits, _ = run(c, 0, rng)
    assert bits in ([0], [1])


@given(st.lists(gates, max_size=25), st.integers(0, 15))
def test_norm_and_inverse(gs, x):
    c = QuantumCircuit(4, gs)
    s = final_state(c, x)
    assert abs(s.norm() - 1) < 1e-10
    back = final_state(QuantumCircuit(4, list(gs) + list(c.inverse().gates)), x)
    expect = np.zeros(16)
    expect[x] = 1
    assert np.allclose(back.amps, expect, atol=1e-9)


def test_membership_gate_examples():
    zero = BooleanFunction.constant(2, 0)
    for b in range(8):
        assert abs(final_state(QuantumCircuit(3, [qsim.membership_gate(zero)]), b).amps[b]) == 1
    AND = BooleanFunction(2, np.array([0, 0, 0, 1], dtype=np.uint8))
    for b in range(8):
        want = b ^ 0b100 if b & 0b11 == 0b11 else b
        assert abs(final_state(QuantumCircuit(3, [qsim.membership_gate(AND)]), b).amps[want]) == 1


@pytest.mark.parametrize("n", range(1, 7))
def test_membership_self_inverse(n):
    f = random_function(n, n)
    g = qsim.membership_gate(f)
    c = QuantumCircuit(n + 1, [H(i) for i in range(n + 1)] + [g, g])
    assert np.allclose(final_state(c).amps, final_state(QuantumCircuit(n + 1, [H(i) for i in range(n + 1)])).amps,
                       atol=1e-12)


def test_gate_validation():
    with pytest.raises(ValueError):
        QuantumCircuit(2, [CNOT(0, 0)])
    with pytest.raises(ValueError):
        QuantumCircuit(2, [H(2)])
    with pytest.raises(ValueError):
        QuantumCircuit(2, [H(0), Measure(0)]).inverse()
    with pytest.raises(ValueError):
        qsim.Oracle(random_function(2, 0), [0, 1], 1)


def test_garbage_removal_classical():
    # reversible circuit: wire 2 = AND of wires 0, 1
    c = QuantumCircuit(3, [Toffoli(0, 1, 2)])
    for x in range(4):
        assert qsim.restoration_probability(c, x, out_wire=2) == pytest.approx(1.0, abs=1e-12)


def test_garbage_removal_of_hadamard():
    # copying a |+> wire entangles it; by hand the restoration probability is 1/2
    assert qsim.restoration_probability(QuantumCircuit(1, [H(0)]), 0) == pytest.approx(0.5, abs=1e-12)
    _, p = qsim.outcome_distribution(qsim.uncompute_garbage(QuantumCircuit(1, [H(0)])))
    assert p == pytest.approx([0.5, 0.5], abs=1e-12)


def test_double_uncompute_same_behaviour():
    c = QuantumCircuit(2, [H(0), CNOT(0, 1)])
    once = qsim.uncompute_garbage(c, 1)
    unmeasured = QuantumCircuit(once.q, [g for g in once.gates if g.op != "measure"])
    twice = qsim.uncompute_garbage(unmeasured, once.q - 1)
    p_once = qsim.outcome_distribution(once)[1]
    p_twice = qsim.outcome_distribution(twice)[1]
    assert p_once == pytest.approx(p_twice, abs=1e-12)


@given(st.integers(1, 6), st.integers(0, 10**6))
def test_fourier_flag_exactly_half(n, seed):
    assert qsim.fourier_flag_probability(random_function(n, seed)) == pytest.approx(0.5, abs=1e-12)


def test_fourier_sample_of_character(rng):
    f = chi(6, 0b101101)
    got = qsim.fourier_samples(f, 2000, rng)
    assert set(got[got >= 0].tolist()) == {0b101101}


def test_fourier_conditional_law(rng):
    f = random_function(8, 3)
    got = qsim.fourier_samples(f, 100_000, rng)
    hits = got[got >= 0]
    emp = np.bincount(hits, minlength=256) / hits.size
    assert 0.5 * np.abs(emp - walsh_hadamard(f).coeffs ** 2).sum() <= 0.05


def test_fourier_single_shot_runs_circuit(rng):
    f = chi(4, 3)
    seen = {qsim.fourier_sample(f, rng) for _ in range(40)}
    assert seen <= {None, 3} and seen == {None, 3}


def _answers(x_bits, k, seed):
    return make_rng(seed).integers(0, 1 << k, size=1 << x_bits)


def test_gl_perfect_circuit():
    ans = _answers(4, 2, 1)
    r = np.arange(4)
    table = np.zeros(64, dtype=np.uint8)
    for x in range(16):
        table[x | (r << 4)] = popcount(ans[x] & r) & 1
    A = qsim.table_circuit(BooleanFunction(6, table), 4, 2)
    for x in range(16):
        assert qsim.gl_success_probability(A, x, 4, 2, int(ans[x])) == pytest.approx(1.0, abs=1e-9)


def _noisy_selector_circuit(ans, x_bits, k, noisy_r):
    """Workspace ``sel, anc, out``: ``out`` is exact except on selectors in ``noisy_r``, where a |+> ancilla is xored in."""
    n = x_bits + k
    r = np.arange(1 << k)
    pred = np.zeros(1 << n, dtype=np.uint8)
    for x in range(1 << x_bits):
        pred[x | (r << x_bits)] = popcount(ans[x] & r) & 1
    sel = BooleanFunction(k, np.isin(r, noisy_r).astype(np.uint8))
    s, anc, out = n, n + 1, n + 2
    return QuantumCircuit(n + 3, [qsim.membership_gate(BooleanFunction(n, pred), range(n), out),
                                  qsim.membership_gate(sel, range(x_bits, n), s), H(anc), Toffoli(s, anc, out)])


@pytest.mark.parametrize("noisy_r", [[], [1], [0, 3], [1, 2, 3]])
def test_gl_success_is_squared_correlation(noisy_r):
    ans = _answers(3, 2, 5)
    A = _noisy_selector_circuit(ans, 3, 2, noisy_r)
    gamma = 1 - len(noisy_r) / 4
    for x in range(8):
        corr = qsim.gl_correlation(A, x, 3, 2, int(ans[x]))
        assert corr == pytest.approx(gamma, abs=1e-12)
        assert qsim.gl_success_probability(A, x, 3, 2, int(ans[x])) == pytest.approx(gamma ** 2, abs=1e-9)


def test_gl_end_to_end_bound(rng):
    gamma = 0.25
    ans = _answers(4, 2, 9)
    pred = qsim.biased_predicate(ans, 4, 2, gamma, rng)
    # exhaustive advantage check of the engineered predicate
    r = np.arange(4)
    right = np.mean([pred.table[x | (r << 4)] == (popcount(ans[x] & r) & 1) for x in range(16)])
    assert right == 0.5 + gamma
    dec = qsim.GLDecoder(qsim.table_circuit(pred, 4, 2), 4, 2)
    xs = rng.integers(0, 16, 10_000)
    est = proportion_estimate(int(np.sum(dec.decode_batch(xs, rng) == ans[xs])), xs.size)
    assert est.point >= gamma ** 3 / 2 - 3 * est.sigma


def test_gl_decode_single_run_matches_law(rng):
    ans = _answers(2, 2, 3)
    A = _noisy_selector_circuit(ans, 2, 2, [2])
    outs = [qsim.gl_decode(A, 1, 2, 2, rng) for _ in range(400)]
    p = qsim.gl_success_probability(A, 1, 2, 2, int(ans[1]))
    rate = np.mean([o == ans[1] for o in outs])
    assert abs(rate - p) < 4 * np.sqrt(p * (1 - p) / 400)


def test_biased_predicate_validation(rng):
    with pytest.raises(ValueError):
        qsim.biased_predicate(np.zeros(4, dtype=np.int64), 2, 2, 0.3, rng)
    with pytest.raises(ValueError):
        qsim.biased_predicate(np.zeros(3, dtype=np.int64), 2, 2, 0.25, rng)


def test_circuit_serialisation(tmp_path):
    f = random_function(3, 2)
    c = QuantumCircuit(4, [H(0), qsim.membership_gate(f), CZ(0, 3), Measure(3)])
    names = {}

    def ref(fn):
        path = tmp_path / f"f{len(names)}.tt"
        fn.save(path)
        names[str(path)] = fn
        return str(path)

    d = qsim.circuit_to_dict(c, ref)
    back = qsim.circuit_from_dict(d, BooleanFunction.load)
    assert back == c
    assert back.gates[1].fn == f
    with pytest.raises(ValueError):
        qsim.circuit_to_dict(c)
