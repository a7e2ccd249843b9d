"""Keyed, splittable random streams.

Every stream is a Philox counter-based generator whose key is derived from
``(seed, *path)`` through :class:`numpy.random.SeedSequence`.  Child streams
are addressed by integer paths, so trial ``i`` always sees the same draws no
matter how trials are scheduled across workers.
"""

from __future__ import annotations

import numpy as np

Rng = np.random.Generator


def make_rng(seed: int, *path: int) -> Rng:
    """Return the stream addressed by ``(seed, *path)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def child(rng: Rng, *path: int) -> Rng:
    """Derive a sub-stream of ``rng`` keyed by ``path``.

    The result depends only on the key of ``rng`` and on ``path``, never on
    how many draws ``rng`` has already produced.
    """
    ss = rng.bit_generator.seed_seq
    sub = np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(sub))


def as_rng(rng_or_seed) -> Rng:
    if isinstance(rng_or_seed, np.random.Generator):
        return rng_or_seed
    return make_rng(0 if rng_or_seed is None else rng_or_seed)


def kernel_seed(rng: Rng) -> int:
    """A 63-bit seed for a compiled kernel's private generator."""
    return int(rng.integers(0, 2**63 - 1))
