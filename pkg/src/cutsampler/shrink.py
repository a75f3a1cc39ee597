"""Contract a vertex separator to a single vertex by correlation-guided merges.

Merging vertex j into vertex i under sign sigma assumes spin(x_j) =
sigma * spin(x_i) in the +/-1 encoding. The objective is rewritten exactly:
every edge (j, k) becomes (i, k) with weight sigma * w, a constant
w * (1 - sigma) / 2 moves to the offset, and the (i, j) edge itself collapses
to a constant. The recorded trace expands any shrunk solution back to an
original solution with the identical objective value.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .instances import MaxCutInstance, as_bits, cut_values_scaled
from .separator import SeparatorDecomposition


@dataclass(frozen=True)
class MergeRecord:
    kept: int
    removed: int
    sigma: int

    def __post_init__(self):
        if self.sigma not in (1, -1):
            raise ValueError("sigma must be +1 or -1")
        if self.kept == self.removed:
            raise ValueError("cannot merge a vertex with itself")


@dataclass(frozen=True)
class ShrinkTrace:
    n_original: int
    records: tuple[MergeRecord, ...]
    vertex_map: dict[int, int]  # surviving original id -> shrunk id
    offset_delta: Fraction

    @property
    def n_shrunk(self) -> int:
        return self.n_original - len(self.records)

    def to_json(self) -> str:
        return json.dumps({
            "n_original": self.n_original,
            "records": [{"kept": r.kept, "removed": r.removed, "sigma": r.sigma}
                        for r in self.records],
            "vertex_map": {str(k): v for k, v in sorted(self.vertex_map.items())},
            "offset_delta": str(self.offset_delta),
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ShrinkTrace":
        data = json.loads(text)
        return cls(
            n_original=data["n_original"],
            records=tuple(MergeRecord(r["kept"], r["removed"], r["sigma"])
                          for r in data["records"]),
            vertex_map={int(k): v for k, v in data["vertex_map"].items()},
            offset_delta=Fraction(data["offset_delta"]),
        )


def _pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


def estimate_correlations(inst: MaxCutInstance, pairs, budget: int = 200,
                          backend: str = "exhaustive", k: int = 32,
                          seed: int = 0) -> dict[tuple[int, int], Fraction]:
    """Spin correlation estimates over an ensemble of high-quality solutions.

    For each requested pair (i, j) returns the mean of spin(x_i) * spin(x_j)
    over the ensemble, an exact rational in [-1, 1].

    backend "exhaustive" (n <= 16): ensemble is all optimal assignments.
    backend "local-search": ensemble is the best k results out of `budget`
    seeded restarts of single-flip local ascent (duplicates kept).
    """
    pairs = [_pair(i, j) for i, j in pairs]
    if not pairs:
        return {}
    for i, j in pairs:
        if not (0 <= i < inst.n and 0 <= j < inst.n) or i == j:
            raise ValueError(f"invalid vertex pair ({i}, {j})")
    if budget < 1:
        raise ValueError("budget must be >= 1")

    if backend == "exhaustive":
        if inst.n > 16:
            raise ValueError("exhaustive backend limited to n <= 16")
        idx = np.arange(1 << inst.n, dtype=np.int64)
        bits = ((idx[:, None] >> np.arange(inst.n)) & 1).astype(np.int64)
        vals, _denom = cut_values_scaled(inst, bits)
        ensemble = bits[vals == vals.max()]
    elif backend == "local-search":
        ensemble = _local_search_ensemble(inst, restarts=budget, k=k, seed=seed)
    else:
        raise ValueError(f"unknown correlation backend {backend!r}")

    spins = 1 - 2 * ensemble  # bit 0 -> +1, bit 1 -> -1
    count = len(ensemble)
    out: dict[tuple[int, int], Fraction] = {}
    for i, j in pairs:
        out[(i, j)] = Fraction(int(np.sum(spins[:, i] * spins[:, j])), count)
    return out


def _local_search_ensemble(inst: MaxCutInstance, restarts: int, k: int,
                           seed: int) -> np.ndarray:
    denom, eu, ev, ew, h, off = inst._scaled
    n = inst.n
    incident: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for u, v, w in zip(eu, ev, ew):
        incident[int(u)].append((int(v), int(w)))
        incident[int(v)].append((int(u), int(w)))
    results = []
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        bits = rng.integers(0, 2, n).tolist()
        while True:
            best_gain, best_v = 0, -1
            for v in range(n):
                gain = int(h[v]) * (1 - 2 * bits[v])
                for u, w in incident[v]:
                    gain += w if bits[u] == bits[v] else -w
                if gain > best_gain:
                    best_gain, best_v = gain, v
            if best_v < 0:
                break
            bits[best_v] ^= 1
        value = off + sum(int(hv) * b for hv, b in zip(h, bits)) \
            + sum(w for u, v, w in zip(eu, ev, ew) if bits[int(u)] != bits[int(v)])
        results.append((-value, tuple(bits)))
    results.sort()
    top = results[:min(k, len(results))]
    return np.array([bits for _neg, bits in top], dtype=np.int64)


def shrink_separator(inst: MaxCutInstance, dec: SeparatorDecomposition,
                     correlations: dict[tuple[int, int], Fraction],
                     ) -> tuple[MaxCutInstance, ShrinkTrace]:
    """Merge the separator down to one vertex, largest |correlation| first.

    Performs exactly |S| - 1 merges. Correlations are keyed by original vertex
    pairs and must cover every pair within S; after a merge the kept vertex
    keeps its own correlation entries. Ties prefer larger signed correlation,
    then the lexicographically smallest pair. Zero correlation merges with
    sigma = +1.
    """
    if not dec.S:
        raise ValueError("separator is empty")
    alive = sorted(dec.S)
    for i in range(len(alive)):
        for j in range(i + 1, len(alive)):
            if _pair(alive[i], alive[j]) not in correlations:
                raise KeyError(f"missing correlation for separator pair "
                               f"({alive[i]}, {alive[j]})")

    edges = {(u, v): w for u, v, w in inst.edges}
    linear = list(inst.linear)
    offset = inst.offset
    records: list[MergeRecord] = []

    while len(alive) > 1:
        best = None
        for a in range(len(alive)):
            for b in range(a + 1, len(alive)):
                pair = (alive[a], alive[b])
                c = correlations[pair]
                key = (-abs(c), -c, pair)
                if best is None or key < best[0]:
                    best = (key, pair, c)
        _key, (kept, removed), c = best
        sigma = 1 if c >= 0 else -1
        records.append(MergeRecord(kept=kept, removed=removed, sigma=sigma))
        alive.remove(removed)

        # fold the (kept, removed) edge into the offset
        w_kr = edges.pop(_pair(kept, removed), Fraction(0))
        if sigma == -1:
            offset += w_kr
        # reattach all other edges of `removed` to `kept`
        for (u, v), w in list(edges.items()):
            if removed not in (u, v):
                continue
            del edges[(u, v)]
            other = v if u == removed else u
            key = _pair(kept, other)
            edges[key] = edges.get(key, Fraction(0)) + sigma * w
            if sigma == -1:
                offset += w
        # linear term of `removed`: x_j = x_i (sigma=+1) or 1 - x_i
        if linear[removed]:
            if sigma == 1:
                linear[kept] += linear[removed]
            else:
                offset += linear[removed]
                linear[kept] -= linear[removed]
            linear[removed] = Fraction(0)

    removed_set = {r.removed for r in records}
    survivors = [v for v in range(inst.n) if v not in removed_set]
    vertex_map = {orig: new for new, orig in enumerate(survivors)}
    shrunk = MaxCutInstance(
        n=len(survivors),
        edges=tuple((vertex_map[u], vertex_map[v], w) for (u, v), w in edges.items()),
        linear=tuple(linear[v] for v in survivors),
        offset=offset,
    )
    trace = ShrinkTrace(n_original=inst.n, records=tuple(records),
                        vertex_map=vertex_map, offset_delta=offset - inst.offset)
    return shrunk, trace


def shrunk_decomposition(dec: SeparatorDecomposition,
                         trace: ShrinkTrace) -> SeparatorDecomposition:
    """Map a decomposition of the original graph through the shrink trace."""
    removed = {r.removed for r in trace.records}
    a = tuple(trace.vertex_map[v] for v in dec.A if v not in removed)
    b = tuple(trace.vertex_map[v] for v in dec.B if v not in removed)
    s = tuple(trace.vertex_map[v] for v in dec.S if v not in removed)
    return SeparatorDecomposition(A=a, B=b, S=s, balance_bound=dec.balance_bound)


def expand_solution(trace: ShrinkTrace, x_shrunk) -> str:
    """Lift a shrunk assignment to the original vertices by replaying the
    merge records in reverse: x_removed = x_kept (sigma=+1) or 1 - x_kept."""
    bits = as_bits(x_shrunk, trace.n_shrunk)
    full: list[int | None] = [None] * trace.n_original
    for orig, new in trace.vertex_map.items():
        full[orig] = bits[new]
    for rec in reversed(trace.records):
        # the kept vertex is alive at this point of the replay
        full[rec.removed] = full[rec.kept] if rec.sigma == 1 else 1 - full[rec.kept]
    return "".join(str(b) for b in full)


def expand_bits(trace: ShrinkTrace, bits: np.ndarray) -> np.ndarray:
    """Vectorized expand_solution for a (num_samples, n_shrunk) matrix."""
    if bits.ndim != 2 or bits.shape[1] != trace.n_shrunk:
        raise ValueError("bit matrix shape must be (num_samples, n_shrunk)")
    full = np.zeros((bits.shape[0], trace.n_original), dtype=bits.dtype)
    for orig, new in trace.vertex_map.items():
        full[:, orig] = bits[:, new]
    for rec in reversed(trace.records):
        if rec.sigma == 1:
            full[:, rec.removed] = full[:, rec.kept]
        else:
            full[:, rec.removed] = 1 - full[:, rec.kept]
    return full
