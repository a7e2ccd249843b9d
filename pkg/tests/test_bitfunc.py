import numpy as np
import pytest
from hypothesis import given, strategies as st

from hardamp.bitfunc import (BooleanFunction, agreement, best_parity_agreement, bits_of, chi, fwht, int_of,
                             inverse_walsh_hadamard, log2_ceil, parity_fn, random_function, walsh_hadamard)


def brute_coeff(f: BooleanFunction, S: int) -> float:
    # direct double sum, no transform
    return sum((-1) ** (f(x) + bin(S & x).count("1")) for x in range(1 << f.n)) / (1 << f.n)


tables = st.integers(1, 7).flatmap(
    lambda n: st.lists(st.integers(0, 1), min_size=1 << n, max_size=1 << n).map(
        lambda t: BooleanFunction(n, np.array(t, dtype=np.uint8))))


def test_character_spectrum():
    c = walsh_hadamard(chi(3, 0b101)).coeffs
    assert c[0b101] == 1.0
    assert np.count_nonzero(c) == 1


def test_constant_spectrum():
    c = walsh_hadamard(BooleanFunction.constant(4, 0)).coeffs
    assert c[0] == 1.0 and np.count_nonzero(c) == 1


def test_random_matches_double_sum():
    f = random_function(3, 42)
    c = walsh_hadamard(f).coeffs
    for S in range(8):
        assert c[S] == pytest.approx(brute_coeff(f, S), abs=1e-15)


@given(tables)
def test_parseval(f):
    assert float(np.sum(walsh_hadamard(f).coeffs ** 2)) == pytest.approx(1.0, abs=1e-12)


@given(tables)
def test_involution(f):
    assert np.array_equal(inverse_walsh_hadamard(walsh_hadamard(f)), f.signs())


@given(tables, st.data())
def test_agreement_identity(f, data):
    S = data.draw(st.integers(0, (1 << f.n) - 1))
    c = walsh_hadamard(f).coeffs[S]
    assert agreement(f, chi(f.n, S)) - 0.5 == pytest.approx(c / 2, abs=1e-12)


def test_fwht_rejects_odd_length():
    with pytest.raises(ValueError):
        fwht(np.ones(6))


def test_best_parity_of_character_and_negation():
    assert best_parity_agreement(chi(5, 19))[:2] == (19, 1.0)
    fit = best_parity_agreement(chi(5, 19).negate())
    assert (fit.S, fit.agreement, fit.coeff) == (19, 1.0, -1.0)


def test_best_parity_exhaustive_scan():
    f = random_function(8, 7)
    scores = [agreement(f, chi(8, S)) for S in range(256)]
    best = max(max(s, 1 - s) for s in scores)
    fit = best_parity_agreement(f)
    assert fit.agreement == pytest.approx(best, abs=1e-12)
    s = scores[fit.S]
    assert max(s, 1 - s) == pytest.approx(best, abs=1e-12)


def test_parity_examples():
    assert parity_fn(1).table.tolist() == [0, 1]
    assert parity_fn(3)(0b110) == 0
    p = parity_fn(6)
    for x in range(64):
        for r in range(64):
            assert p(x) == p(x ^ r) ^ p(r)


def test_random_function_determinism_and_balance():
    assert random_function(8, 3) == random_function(8, 3)
    ones = np.mean([random_function(8, s).table.mean() for s in range(1000)])
    assert 0.45 <= ones <= 0.55
    assert random_function(1, 99).table.tolist() in ([0, 0], [0, 1], [1, 0], [1, 1])


@given(tables)
def test_hex_roundtrip(f):
    assert BooleanFunction.loads(f.dumps()) == f
    assert len(f.to_hex()) == -(-(1 << f.n) // 4)


def test_hex_digit_order():
    # f(x) = [x == 0] at n=3 is the integer 1
    assert BooleanFunction(3, np.array([1, 0, 0, 0, 0, 0, 0, 0], dtype=np.uint8)).to_hex() == "01"
    assert BooleanFunction.from_hex(2, "8").table.tolist() == [0, 0, 0, 1]


def test_file_roundtrip(tmp_path):
    f = random_function(6, 1)
    f.save(tmp_path / "f.tt")
    assert (tmp_path / "f.tt").read_text().startswith("n=6\n")
    assert BooleanFunction.load(tmp_path / "f.tt") == f


def test_rejects_bad_tables():
    with pytest.raises(ValueError):
        BooleanFunction(2, np.array([0, 1, 2, 0]))
    with pytest.raises(ValueError):
        BooleanFunction(2, np.array([0, 1, 1]))
    with pytest.raises(ValueError):
        BooleanFunction(25, np.zeros(1, dtype=np.uint8))
    with pytest.raises(ValueError):
        BooleanFunction.from_hex(2, "1f")


def test_table_is_read_only():
    f = random_function(3, 0)
    with pytest.raises(ValueError):
        f.table[0] = 1


@given(st.integers(0, 2**20 - 1))
def test_bit_strings(x):
    assert int_of(bits_of(x, 20)) == x
    assert bits_of(x, 20)[0] == str(x & 1)


def test_log2_ceil():
    assert [log2_ceil(t) for t in (1, 2, 3, 4, 5, 8, 9)] == [0, 1, 2, 2, 3, 3, 4]
