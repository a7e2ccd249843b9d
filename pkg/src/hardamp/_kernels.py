"""Compiled inner loops for k-set sampling and k-set oracles.

Each sampling kernel runs its own splitmix64 stream seeded from a value the
caller draws from its keyed stream, so results stay reproducible.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _insertion_sort(row, length):
    for i in range(1, length):
        v = row[i]
        j = i - 1
        while j >= 0 and row[j] > v:
            row[j + 1] = row[j]
            j -= 1
        row[j + 1] = v


@njit(cache=True)
def _next(state):
    """splitmix64 step on a one-element state array."""
    state[0] += np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _threshold(bound):
    b = np.uint64(bound)
    return (np.uint64(2**32) - b) % b


@njit(cache=True)
def _below(state, bound, threshold):
    """Uniform integer in ``[0, bound)`` for ``bound < 2**32`` (multiply-shift with rejection)."""
    b = np.uint64(bound)
    while True:
        m = (_next(state) >> np.uint64(32)) * b
        if (m & np.uint64(0xFFFFFFFF)) >= threshold:
            return np.int64(m >> np.uint64(32))


_DEBRUIJN = np.uint64(0x03F79D71B4CB0A89)
_DEBRUIJN_TABLE = np.zeros(64, dtype=np.int64)
for _i in range(64):
    _DEBRUIJN_TABLE[(((1 << _i) * 0x03F79D71B4CB0A89) & (2**64 - 1)) >> 58] = _i
BITSET_WORDS = 64


@njit(cache=True)
def _emit_sorted(bits, words, out_row):
    """Write the set members of a bitset to ``out_row`` in increasing order and clear it."""
    p = 0
    for wi in range(words):
        w = bits[wi]
        while w:
            low = w & (~w + np.uint64(1))
            out_row[p] = wi * 64 + _DEBRUIJN_TABLE[(low * _DEBRUIJN) >> np.uint64(58)]
            p += 1
            w ^= low
        bits[wi] = np.uint64(0)


@njit(cache=True)
def sample_ksets(universe, k, count, seed):
    """``count`` uniform k-subsets of ``[0, universe)``, each sorted.

    Elements are drawn uniformly and rejected when already present.
    """
    state = np.array([np.uint64(seed)], dtype=np.uint64)
    thr = _threshold(universe)
    out = np.empty((count, k), dtype=np.int64)
    stamp = np.zeros(universe, dtype=np.int64)
    words = (universe + 63) // 64
    small = words <= BITSET_WORDS
    bits = np.zeros(words if small else 1, dtype=np.uint64)
    for r in range(count):
        filled = 0
        while filled < k:
            c = _below(state, universe, thr)
            if stamp[c] != r + 1:
                stamp[c] = r + 1
                if small:
                    bits[c >> 6] |= np.uint64(1) << np.uint64(c & 63)
                else:
                    out[r, filled] = c
                filled += 1
        if small:
            _emit_sorted(bits, words, out[r])
        else:
            _insertion_sort(out[r], k)
    return out


@njit(cache=True)
def sample_neighbors(a_elems, in_a, w_bits, xs, k, universe, seed):
    """Uniform k-sets containing ``A | {x}`` for each ``x`` in ``xs``.

    ``x`` must lie outside ``A``.  Returns the sorted rows, a bit mask of the
    positions holding elements of ``A``, the value ``w`` spread onto those
    positions, and the position of ``x``.
    """
    state = np.array([np.uint64(seed)], dtype=np.uint64)
    thr = _threshold(universe)
    half = a_elems.shape[0]
    extra = k - half - 1
    count = xs.shape[0]
    rows = np.empty((count, k), dtype=np.int64)
    amask = np.zeros(count, dtype=np.uint64)
    expect = np.zeros(count, dtype=np.uint64)
    xpos = np.zeros(count, dtype=np.int64)
    buf = np.empty(k, dtype=np.int64)
    stamp = np.zeros(universe, dtype=np.int64)
    words = (universe + 63) // 64
    small = words <= BITSET_WORDS
    bits = np.zeros(words if small else 1, dtype=np.uint64)
    for r in range(count):
        x = xs[r]
        stamp[x] = r + 1
        filled = 0
        while filled < extra:
            c = _below(state, universe, thr)
            if in_a[c] or stamp[c] == r + 1:
                continue
            stamp[c] = r + 1
            buf[filled] = c
            filled += 1
        buf[filled] = x
        if small:
            for i in range(half):
                c = a_elems[i]
                bits[c >> 6] |= np.uint64(1) << np.uint64(c & 63)
            for i in range(extra + 1):
                c = buf[i]
                bits[c >> 6] |= np.uint64(1) << np.uint64(c & 63)
            _emit_sorted(bits, words, rows[r])
            # branch-free placement of A's positions and w
            i = 0
            am = np.uint64(0)
            ex = np.uint64(0)
            for p in range(k):
                e = rows[r, p]
                inside = np.uint64(in_a[e])
                am |= inside << np.uint64(p)
                ex |= (w_bits[min(i, half - 1)] & inside) << np.uint64(p)
                i += np.int64(inside)
                xpos[r] += (p - xpos[r]) * np.int64(e == x)
            amask[r] = am
            expect[r] = ex
            continue
        _insertion_sort(buf, extra + 1)
        # merge the sorted extras with A
        i = 0
        j = 0
        for p in range(k):
            if j >= extra + 1 or (i < half and a_elems[i] < buf[j]):
                rows[r, p] = a_elems[i]
                amask[r] |= np.uint64(1) << np.uint64(p)
                expect[r] |= np.uint64(w_bits[i]) << np.uint64(p)
                i += 1
            else:
                rows[r, p] = buf[j]
                if buf[j] == x:
                    xpos[r] = p
                j += 1
    return rows, amask, expect, xpos


@njit(cache=True)
def pack_lookup(table, rows):
    """``out[r] = sum_i table[rows[r, i]] << i``."""
    count, k = rows.shape
    out = np.zeros(count, dtype=np.uint64)
    for r in range(count):
        v = np.uint64(0)
        for i in range(k):
            if table[rows[r, i]]:
                v |= np.uint64(1) << np.uint64(i)
        out[r] = v
    return out


@njit(cache=True)
def set_hash(keys, rows):
    """Order-independent 64-bit hash of each row (xor of per-element keys, then mixed)."""
    count, k = rows.shape
    out = np.empty(count, dtype=np.uint64)
    for r in range(count):
        h = np.uint64(0)
        for i in range(k):
            h ^= keys[rows[r, i]]
        h ^= h >> np.uint64(30)
        h *= np.uint64(0xBF58476D1CE4E5B9)
        h ^= h >> np.uint64(27)
        h *= np.uint64(0x94D049BB133111EB)
        h ^= h >> np.uint64(31)
        out[r] = h
    return out
