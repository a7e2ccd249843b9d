"""Boolean functions as truth tables, and their Fourier spectra.

Conventions
-----------
* An ``n``-bit input is an integer ``x`` in ``[0, 2**n)``; bit ``i`` of the
  input is ``(x >> i) & 1`` (little-endian, shared with :mod:`hardamp.qsim`).
* ``table[x]`` holds ``f(x)`` in ``{0, 1}``.
* Spectra use the +/-1 encoding ``(-1)**f(x)``, so a constant-zero function
  has all of its weight on the empty set.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .rng import make_rng

MAX_ARITY = 24


def popcount(a) -> np.ndarray:
    return np.bitwise_count(np.asarray(a, dtype=np.uint64)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class BooleanFunction:
    """A function ``{0,1}^n -> {0,1}`` stored as a read-only truth table.

    :param n: input arity, ``1 <= n <= 24``
    :param table: ``uint8`` array of length ``2**n``
    """

    n: int
    table: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n <= MAX_ARITY:
            raise ValueError(f"arity must lie in [1, {MAX_ARITY}], got {self.n}")
        tab = np.ascontiguousarray(self.table, dtype=np.uint8)
        if tab.shape != (1 << self.n,):
            raise ValueError(f"table length {tab.size} != 2**{self.n}")
        if tab.size and tab.max() > 1:
            raise ValueError("table entries must be 0 or 1")
        tab = tab.copy()
        tab.flags.writeable = False
        object.__setattr__(self, "table", tab)

    in_bits = property(lambda self: self.n)
    out_bits = property(lambda self: 1)

    def __call__(self, x: int) -> int:
        return int(self.table[x])

    def __eq__(self, other):
        return isinstance(other, BooleanFunction) and self.n == other.n and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash((self.n, self.table.tobytes()))

    def evaluate(self, xs) -> np.ndarray:
        """Vectorised evaluation returning ``uint64`` values."""
        return self.table[np.asarray(xs, dtype=np.int64)].astype(np.uint64)

    def sample_inputs(self, count: int, rng) -> np.ndarray:
        return rng.integers(0, 1 << self.n, size=count, dtype=np.int64)

    def signs(self) -> np.ndarray:
        """The table in +/-1 form, ``(-1)**f(x)``."""
        return 1.0 - 2.0 * self.table.astype(np.float64)

    @classmethod
    def from_callable(cls, n: int, fn) -> "BooleanFunction":
        return cls(n, np.array([fn(x) & 1 for x in range(1 << n)], dtype=np.uint8))

    @classmethod
    def constant(cls, n: int, bit: int = 0) -> "BooleanFunction":
        return cls(n, np.full(1 << n, bit & 1, dtype=np.uint8))

    def negate(self) -> "BooleanFunction":
        return BooleanFunction(self.n, 1 - self.table)

    # -- truth-table file format -------------------------------------------

    def to_hex(self) -> str:
        """Hex string of ``ceil(2**n / 4)`` digits, most significant first.

        Bit ``x`` of the encoded integer is ``f(x)``.
        """
        digits = -(-(1 << self.n) // 4)
        padded = np.zeros(digits * 4, dtype=np.uint8)
        padded[: self.table.size] = self.table
        nibbles = padded.reshape(-1, 4) @ np.array([1, 2, 4, 8])
        return "".join("0123456789abcdef"[v] for v in nibbles[::-1])

    @classmethod
    def from_hex(cls, n: int, text: str) -> "BooleanFunction":
        text = text.strip().lower()
        digits = -(-(1 << n) // 4)
        if len(text) != digits:
            raise ValueError(f"expected {digits} hex digits for n={n}, got {len(text)}")
        value = int(text, 16)
        if value >> (1 << n):
            raise ValueError("hex value has bits beyond 2**n")
        bits = [(value >> x) & 1 for x in range(1 << n)]
        return cls(n, np.array(bits, dtype=np.uint8))

    def dumps(self) -> str:
        return f"n={self.n}\n{self.to_hex()}\n"

    @classmethod
    def loads(cls, text: str) -> "BooleanFunction":
        lines = [ln.strip() for ln in text.strip().splitlines()]
        if len(lines) != 2 or not lines[0].startswith("n="):
            raise ValueError("truth-table file must have the lines 'n=<int>' and '<hex>'")
        return cls.from_hex(int(lines[0][2:]), lines[1])

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "BooleanFunction":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


class FourierSpectrum(NamedTuple):
    n: int
    coeffs: np.ndarray


class ParityFit(NamedTuple):
    S: int
    agreement: float
    coeff: float


def fwht(values: np.ndarray) -> np.ndarray:
    """Unnormalised fast Walsh-Hadamard transform along the last axis.

    Runs the usual butterfly: for each ``h = 1, 2, 4, ...`` pairs
    ``(a, b) -> (a + b, a - b)`` at distance ``h``.
    """
    a = np.array(values, dtype=np.float64, copy=True)
    size = a.shape[-1]
    if size & (size - 1):
        raise ValueError("length must be a power of two")
    lead = a.shape[:-1]
    h = 1
    while h < size:
        v = a.reshape(*lead, -1, 2, h)
        lo = v[..., 0, :].copy()
        v[..., 0, :] += v[..., 1, :]
        v[..., 1, :] = lo - v[..., 1, :]
        h *= 2
    return a


def walsh_hadamard(f: BooleanFunction) -> FourierSpectrum:
    """Fourier coefficients ``coeffs[S] = E_x[(-1)^(f(x) + S.x)]``."""
    return FourierSpectrum(f.n, fwht(f.signs()) / float(1 << f.n))


def inverse_walsh_hadamard(spec: FourierSpectrum) -> np.ndarray:
    """Recover the +/-1 table from its spectrum."""
    return fwht(spec.coeffs)


def agreement(f: BooleanFunction, g: BooleanFunction) -> float:
    if f.n != g.n:
        raise ValueError("arity mismatch")
    return float(np.mean(f.table == g.table))


def best_parity_agreement(f: BooleanFunction) -> ParityFit:
    """The parity closest to ``f`` or to its negation.

    Returns the index ``S`` maximising ``|f^(S)|`` (smallest ``S`` on ties),
    the agreement ``1/2 + |f^(S)|/2`` of the better of ``chi_S`` and its
    negation, and the signed coefficient.
    """
    c = walsh_hadamard(f).coeffs
    mags = np.abs(c)
    # tolerate round-off when deciding ties
    S = int(np.flatnonzero(mags >= mags.max() - 1e-12)[0])
    return ParityFit(S, 0.5 + 0.5 * float(mags[S]), float(c[S]))


def chi(n: int, S: int) -> BooleanFunction:
    """The parity ``x -> <S, x> mod 2`` in 0/1 form."""
    xs = np.arange(1 << n, dtype=np.uint64)
    return BooleanFunction(n, (popcount(xs & np.uint64(S)) & 1).astype(np.uint8))


def parity_fn(n: int) -> BooleanFunction:
    """PARITY on ``n`` bits."""
    return chi(n, (1 << n) - 1)


def random_function(n: int, seed: int) -> BooleanFunction:
    """A uniformly random function drawn from the stream keyed by ``seed``."""
    rng = make_rng(seed, 0xB17F, n)
    return BooleanFunction(n, rng.integers(0, 2, size=1 << n, dtype=np.uint8))


def random_function_from(n: int, rng) -> BooleanFunction:
    return BooleanFunction(n, rng.integers(0, 2, size=1 << n, dtype=np.uint8))


def log2_ceil(t: int) -> int:
    return (int(t) - 1).bit_length() if t > 1 else 0


def bits_of(x: int, width: int) -> str:
    """Render ``x`` as a bit string with character ``i`` equal to bit ``i``."""
    return "".join(str((x >> i) & 1) for i in range(width))


def int_of(bits: str) -> int:
    """Inverse of :func:`bits_of`."""
    if any(ch not in "01" for ch in bits):
        raise ValueError("bit string may contain only '0' and '1'")
    return sum(1 << i for i, ch in enumerate(bits) if ch == "1")
