"""Combinatorial designs: ordered families of n-subsets of [m] with small pairwise overlaps."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bitfunc import log2_ceil

DEFAULT_C = 16
MAX_DOUBLINGS = 4


class DesignInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class Design:
    n: int
    t: int
    m: int
    alpha: int
    sets: tuple

    def to_dict(self) -> dict:
        return {"n": self.n, "t": self.t, "m": self.m, "alpha": self.alpha, "sets": [list(s) for s in self.sets]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Design":
        return cls(int(d["n"]), int(d["t"]), int(d["m"]), int(d["alpha"]),
                   tuple(tuple(int(e) for e in s) for s in d["sets"]))


def _first_set(n: int, m: int, alpha: int, member: list, counts: np.ndarray, taken: set) -> Optional[tuple]:
    """Lexicographically first n-subset of [m] meeting every prior set in <= alpha points."""
    chosen: list = []

    def extend(start: int) -> bool:
        if len(chosen) == n:
            return tuple(chosen) not in taken
        for e in range(start, m - (n - len(chosen)) + 1):
            hits = member[e]
            if hits and counts[hits].max() >= alpha:
                continue
            counts[hits] += 1
            chosen.append(e)
            if extend(e + 1):
                return True
            chosen.pop()
            counts[hits] -= 1
        return False

    return tuple(chosen) if extend(0) else None


def _greedy(n: int, t: int, m: int, alpha: int) -> Optional[list]:
    member: list = [[] for _ in range(m)]
    sets: list = []
    taken: set = set()
    for i in range(t):
        counts = np.zeros(max(i, 1), dtype=np.int64)
        s = _first_set(n, m, alpha, member, counts, taken)
        if s is None:
            return None
        sets.append(s)
        taken.add(s)
        for e in s:
            member[e].append(i)
    return sets


def build_design(n: int, t: int, c: int = DEFAULT_C, m: Optional[int] = None,
                 alpha: Optional[int] = None) -> Design:
    """Greedy (t, m, n, alpha)-design, deterministic in its arguments.

    Each set is the lexicographically first n-subset of the universe that is
    new and meets every earlier set in at most ``alpha`` points.  ``alpha``
    defaults to ``ceil(log2 t)``.  Without an explicit ``m`` the search runs
    over ``[c * n**2]`` (doubling on failure) and the reported universe is
    trimmed to the largest element used plus one.
    """
    if n < 1 or t < 1:
        raise ValueError("need n >= 1 and t >= 1")
    if m is None and n < 63 and t > 1 << n:
        raise ValueError(f"t={t} exceeds 2**n={1 << n}")
    a = log2_ceil(t) if alpha is None else int(alpha)
    if m is not None:
        sets = _greedy(n, t, int(m), a)
        if sets is None:
            raise DesignInfeasible(f"design infeasible: no ({t}, {m}, {n}, {a})-design found greedily")
        return Design(n, t, int(m), a, tuple(sets))
    universe = c * n * n
    for _ in range(MAX_DOUBLINGS + 1):
        sets = _greedy(n, t, max(universe, n), a)
        if sets is not None:
            used = 1 + max(max(s) for s in sets)
            return Design(n, t, used, a, tuple(sets))
        universe *= 2
    raise DesignInfeasible(f"design infeasible: greedy search exhausted m={universe // 2} for n={n}, t={t}")


def verify_design(d: Design):
    """Check every design invariant; returns ``(ok, report)`` naming the first violation."""
    if len(d.sets) != d.t:
        return False, f"family has {len(d.sets)} sets, expected t={d.t}"
    as_sets = []
    for i, s in enumerate(d.sets):
        ss = set(s)
        if len(s) != d.n or len(ss) != d.n:
            return False, f"set {i} has {len(ss)} distinct elements, expected n={d.n}"
        bad = [e for e in s if not 0 <= e < d.m]
        if bad:
            return False, f"set {i} has element {bad[0]} outside [0, {d.m})"
        as_sets.append(ss)
    for i in range(d.t):
        for j in range(i + 1, d.t):
            overlap = len(as_sets[i] & as_sets[j])
            if overlap > d.alpha:
                return False, f"pair ({i}, {j}) overlaps in {overlap} > alpha={d.alpha} elements"
    return True, "ok"
