"""Shared independent oracles for the test suite.

These deliberately avoid the library's own solver/search code paths: brute
force enumeration only, so they can certify the optimized implementations.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from random import Random

import numpy as np

from cutsampler.instances import MaxCutInstance


def brute_force_max(inst: MaxCutInstance) -> tuple[Fraction, str]:
    """Exhaustive MaxCut optimum over all 2^n assignments."""
    best_val, best_x = None, None
    for bits in itertools.product("01", repeat=inst.n):
        x = "".join(bits)
        total = inst.offset
        for u, v, w in inst.edges:
            if x[u] != x[v]:
                total += w
        for v, h in enumerate(inst.linear):
            if h and x[v] == "1":
                total += h
        if best_val is None or total > best_val:
            best_val, best_x = total, x
    return best_val, best_x


def brute_force_min_separator(inst: MaxCutInstance, bound: int) -> int | None:
    """Minimum |S| over all (A, B, S) labelings, by vectorized enumeration.

    Returns None when no valid decomposition exists. Labels: 0=A, 1=B, 2=S.
    """
    n = inst.n
    total = 3 ** n
    labels = np.zeros((total, n), dtype=np.int8)
    idx = np.arange(total)
    for v in range(n):
        labels[:, v] = (idx // (3 ** v)) % 3
    ok = np.ones(total, dtype=bool)
    a_count = (labels == 0).sum(axis=1)
    b_count = (labels == 1).sum(axis=1)
    ok &= (a_count > 0) & (b_count > 0)
    ok &= (a_count <= bound) & (b_count <= bound)
    for u, v, _w in inst.edges:
        lu, lv = labels[:, u], labels[:, v]
        ok &= ~(((lu == 0) & (lv == 1)) | ((lu == 1) & (lv == 0)))
    if not ok.any():
        return None
    s_count = (labels == 2).sum(axis=1)
    return int(s_count[ok].min())


def random_instance(rng: Random, n: int, density: float = 0.5,
                    weights=(1,)) -> MaxCutInstance:
    """Random graph with the given edge density and weight choices."""
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < density:
                edges.append((u, v, Fraction(rng.choice(weights))))
    return MaxCutInstance(n=n, edges=tuple(edges))


def random_cuttable_instance(rng: Random, n: int,
                             weights=(1,)) -> tuple[MaxCutInstance, tuple, tuple, int]:
    """Random instance that admits a single-vertex separator: two sides plus
    one bridge vertex adjacent to both. Returns (inst, A, B, s)."""
    assert n >= 3
    s = rng.randrange(n)
    rest = [v for v in range(n) if v != s]
    rng.shuffle(rest)
    half = max(1, len(rest) // 2)
    a, b = sorted(rest[:half]), sorted(rest[half:])
    edges = {}

    def add(u, v):
        key = (u, v) if u < v else (v, u)
        edges[key] = Fraction(rng.choice(weights))

    add(s, rng.choice(a))
    add(s, rng.choice(b))
    for side in (a, b):
        for u, v in itertools.combinations(side, 2):
            if rng.random() < 0.5:
                add(u, v)
        for u in side:
            if rng.random() < 0.4:
                add(s, u)
    inst = MaxCutInstance(n=n, edges=tuple((u, v, w) for (u, v), w in edges.items()))
    return inst, tuple(a), tuple(b), s
