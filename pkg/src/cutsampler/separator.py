"""Minimum balanced vertex separators by exact branch-and-bound search.

A decomposition splits the vertices into disjoint sets (A, B, S) with no edge
between A and B and max(|A|, |B|) bounded. The search minimizes |S| over all
such decompositions and certifies minimality by completing; ties are broken
toward the more balanced split and then the lexicographically smallest S.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass

from .instances import MaxCutInstance


class SeparatorInfeasibleError(Exception):
    """No decomposition satisfies the constraints (e.g. complete graphs)."""


class SeparatorTimeoutError(Exception):
    """Search hit the time limit before certifying minimality."""


@dataclass(frozen=True)
class SeparatorDecomposition:
    A: tuple[int, ...]
    B: tuple[int, ...]
    S: tuple[int, ...]
    balance_bound: int

    def __post_init__(self):
        object.__setattr__(self, "A", tuple(sorted(self.A)))
        object.__setattr__(self, "B", tuple(sorted(self.B)))
        object.__setattr__(self, "S", tuple(sorted(self.S)))

    def to_json(self) -> str:
        return json.dumps({"A": list(self.A), "B": list(self.B), "S": list(self.S)},
                          sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SeparatorDecomposition":
        data = json.loads(text)
        a, b, s = data["A"], data["B"], data["S"]
        return cls(A=tuple(a), B=tuple(b), S=tuple(s),
                   balance_bound=max(len(a), len(b)))


def verify_separator(inst: MaxCutInstance, dec: SeparatorDecomposition) -> bool:
    """True iff (A, B, S) partition the vertices, A and B are nonempty and
    edge-disconnected, and both sides respect the balance bound."""
    a, b, s = set(dec.A), set(dec.B), set(dec.S)
    if a | b | s != set(range(inst.n)) or len(a) + len(b) + len(s) != inst.n:
        return False
    if not a or not b:
        return False
    if max(len(a), len(b)) > dec.balance_bound:
        return False
    for u, v, _w in inst.edges:
        if (u in a and v in b) or (u in b and v in a):
            return False
    return True


def balance_bound_for(n: int, balance_fraction: float) -> int:
    # round before ceil so 0.6 * 25 = 15.000000000000002 does not become 16
    return math.ceil(round(balance_fraction * n, 9))


_A, _B, _S = 1, 2, 4


def find_separator(inst: MaxCutInstance, balance_fraction: float = 0.6,
                   time_limit: float | None = None) -> SeparatorDecomposition:
    """Minimum balanced vertex separator by complete 3-label branch and bound.

    Vertices are assigned labels A/B/S in index order. Labeling a vertex A
    removes B from its neighbors' domains (and symmetrically); a vertex whose
    domain shrinks to {S} is forced. The A/B symmetry is broken by requiring
    the first non-separator vertex to land in A. Among minimum-|S| solutions,
    prefers larger min(|A|, |B|), then lexicographically smallest S.
    """
    n = inst.n
    if n < 3:
        raise ValueError("need at least 3 vertices")
    if not 0.5 <= balance_fraction < 1:
        raise ValueError("balance_fraction must be in [0.5, 1)")
    bound = balance_bound_for(n, balance_fraction)
    nbrs = [[] for _ in range(n)]
    for u, v, _w in inst.edges:
        nbrs[u].append(v)
        nbrs[v].append(u)

    labels = [0] * n  # 0 = unassigned, else _A/_B/_S
    domains = [_A | _B | _S] * n
    counts = {_A: 0, _B: 0, _S: 0}
    best_key: tuple | None = None
    best: tuple[list[int], list[int], list[int]] | None = None
    deadline = None if time_limit is None else time.monotonic() + time_limit
    timed_out = False
    nodes = 0

    def s_cap() -> int:
        return best_key[0] if best_key is not None else n - 2

    def assign(v: int, label: int, trail: list) -> bool:
        """Assign v, propagate forced separators; False on dead end."""
        queue = [(v, label)]
        while queue:
            w, lab = queue.pop()
            if labels[w]:
                if labels[w] != lab:
                    return False
                continue
            trail.append((w, domains[w]))
            labels[w] = lab
            counts[lab] += 1
            if lab == _A and counts[_A] > bound:
                return False
            if lab == _B and counts[_B] > bound:
                return False
            if lab == _S:
                if counts[_S] > s_cap():
                    return False
                continue
            remove = _B if lab == _A else _A
            for u in nbrs[w]:
                if labels[u]:
                    if labels[u] == remove:
                        return False
                    continue
                if domains[u] & remove:
                    trail.append((u, domains[u]))
                    domains[u] &= ~remove
                    if domains[u] == _S:
                        queue.append((u, _S))
        return True

    def undo(trail: list):
        for w, dom in reversed(trail):
            if labels[w]:
                counts[labels[w]] -= 1
                labels[w] = 0
            domains[w] = dom

    def record():
        nonlocal best_key, best
        if counts[_A] == 0 or counts[_B] == 0:
            return
        sets = {_A: [], _B: [], _S: []}
        for v, lab in enumerate(labels):
            sets[lab].append(v)
        key = (counts[_S], -min(counts[_A], counts[_B]), tuple(sets[_S]))
        if best_key is None or key < best_key:
            best_key = key
            best = (sets[_A], sets[_B], sets[_S])

    def dfs(start: int):
        nonlocal timed_out, nodes
        nodes += 1
        if timed_out or (deadline is not None and nodes % 1024 == 0
                         and time.monotonic() > deadline):
            timed_out = True
            return
        v = start
        while v < n and labels[v]:
            v += 1
        if v == n:
            record()
            return
        # remaining vertices cannot rescue a side that can no longer reach
        # its minimum size n - bound - |S|
        remaining = sum(1 for u in range(v, n) if not labels[u])
        need = n - bound - s_cap()
        if counts[_A] + remaining < need or counts[_B] + remaining < need:
            return
        for label in (_A, _B, _S):
            if not domains[v] & label:
                continue
            if label == _B and counts[_A] == 0:
                continue  # symmetry: lowest non-separator vertex goes to A
            trail: list = []
            if assign(v, label, trail):
                dfs(v + 1)
            undo(trail)
            if timed_out:
                return

    dfs(0)
    if timed_out:
        raise SeparatorTimeoutError(f"no certificate within {time_limit} s")
    if best is None:
        raise SeparatorInfeasibleError(
            f"no balanced decomposition with max side {bound} exists")
    a, b, s = best
    return SeparatorDecomposition(A=tuple(a), B=tuple(b), S=tuple(s), balance_bound=bound)
