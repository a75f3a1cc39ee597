"""MaxCut instances with exact rational bookkeeping.

Weights, linear terms and offsets are stored as `fractions.Fraction` so that
objective values, shrinking rewrites and solution expansion are bit-exact.
Floating point only appears at the simulator boundary.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from random import Random
from typing import Iterable, Sequence

import numpy as np

Bits = Sequence[int] | str


class ParseError(ValueError):
    """Malformed instance file; message carries the offending line number."""


def _fraction(value, what: str = "weight") -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"non-numeric {what}: {value!r}") from exc
    if isinstance(value, float):
        if not value.is_integer():
            raise TypeError(f"float {what} {value!r} is ambiguous; pass a Fraction or string")
        return Fraction(int(value))
    raise TypeError(f"unsupported {what} type: {type(value).__name__}")


def as_bits(x: Bits, n: int) -> tuple[int, ...]:
    """Normalize a bitstring or 0/1 sequence of length n to a tuple of ints."""
    if isinstance(x, str):
        bits = tuple(int(c) for c in x)
    else:
        bits = tuple(int(b) for b in x)
    if len(bits) != n:
        raise ValueError(f"assignment length {len(bits)} != vertex count {n}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("assignment must be 0/1 valued")
    return bits


@dataclass(frozen=True)
class MaxCutInstance:
    """Weighted MaxCut problem: maximize offset + sum_e w_e [x_u != x_v] + sum_v h_v x_v.

    Edges are canonicalized on construction: u < v, at most one edge per pair
    (parallel edges merged additively), zero-weight edges dropped, sorted.
    """

    n: int
    edges: tuple[tuple[int, int, Fraction], ...]
    linear: tuple[Fraction, ...] = ()
    offset: Fraction = Fraction(0)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("vertex count must be >= 1")
        merged: dict[tuple[int, int], Fraction] = {}
        for item in self.edges:
            u, v, w = item[0], item[1], _fraction(item[2])
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"vertex id out of range: edge ({u}, {v})")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            key = (u, v) if u < v else (v, u)
            merged[key] = merged.get(key, Fraction(0)) + w
        edges = tuple((u, v, w) for (u, v), w in sorted(merged.items()) if w != 0)
        linear = tuple(_fraction(h, "linear term") for h in self.linear)
        if not linear:
            linear = (Fraction(0),) * self.n
        if len(linear) != self.n:
            raise ValueError("linear term list length must equal vertex count")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "offset", _fraction(self.offset, "offset"))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, Fraction], ...], ...]:
        adj: list[list[tuple[int, Fraction]]] = [[] for _ in range(self.n)]
        for u, v, w in self.edges:
            adj[u].append((v, w))
            adj[v].append((u, w))
        return tuple(tuple(a) for a in adj)

    @cached_property
    def _scaled(self) -> tuple[int, np.ndarray, np.ndarray, np.ndarray, np.ndarray, int]:
        """Common-denominator integer view: (denom, eu, ev, ew, h, offset)."""
        denom = 1
        for *_pair, w in self.edges:
            denom = denom * w.denominator // math.gcd(denom, w.denominator)
        for h in self.linear:
            denom = denom * h.denominator // math.gcd(denom, h.denominator)
        denom = denom * self.offset.denominator // math.gcd(denom, self.offset.denominator)
        eu = np.fromiter((e[0] for e in self.edges), dtype=np.int64, count=len(self.edges))
        ev = np.fromiter((e[1] for e in self.edges), dtype=np.int64, count=len(self.edges))
        ew = np.fromiter((int(e[2] * denom) for e in self.edges), dtype=np.int64, count=len(self.edges))
        h = np.fromiter((int(hv * denom) for hv in self.linear), dtype=np.int64, count=self.n)
        return denom, eu, ev, ew, h, int(self.offset * denom)


@dataclass(frozen=True)
class ExactSolution:
    best_value: Fraction
    best_assignment: str
    proven: bool


def cut_value(inst: MaxCutInstance, x: Bits) -> Fraction:
    """Exact objective of assignment x."""
    bits = as_bits(x, inst.n)
    total = inst.offset
    for u, v, w in inst.edges:
        if bits[u] != bits[v]:
            total += w
    for v, h in enumerate(inst.linear):
        if h and bits[v]:
            total += h
    return total


def cut_values_scaled(inst: MaxCutInstance, bits: np.ndarray) -> tuple[np.ndarray, int]:
    """Vectorized objectives for a (num_samples, n) 0/1 matrix.

    Returns integer objective values scaled by a common denominator; the true
    objective of row i is Fraction(values[i], denom). Exact (int64 arithmetic).
    """
    denom, eu, ev, ew, h, off = inst._scaled
    if bits.ndim != 2 or bits.shape[1] != inst.n:
        raise ValueError("bit matrix shape must be (num_samples, n)")
    b = bits.astype(np.int64, copy=False)
    vals = np.full(bits.shape[0], off, dtype=np.int64)
    if len(ew):
        vals += (b[:, eu] != b[:, ev]) @ ew
    if h.any():
        vals += b @ h
    return vals, denom


def objective_vector(inst: MaxCutInstance, dtype=np.float64) -> np.ndarray:
    """Objective of every assignment, indexed with vertex 0 least significant.

    Float-valued; used by the simulator for expectation values and by the
    QAOA cost layer (the cost unitary is diagonal in the computational basis).
    """
    idx = np.arange(1 << inst.n, dtype=np.int64)
    vals = np.full(idx.size, float(inst.offset), dtype=dtype)
    for u, v, w in inst.edges:
        vals += float(w) * (((idx >> u) ^ (idx >> v)) & 1)
    for v, h in enumerate(inst.linear):
        if h:
            vals += float(h) * ((idx >> v) & 1)
    return vals


def parse_instance(text: str) -> MaxCutInstance:
    """Parse the instance file format.

    Line 1: "n m". Then edge lines "u v w" (0-indexed, w rational) and
    optional linear-term lines "h v value". "#" starts a comment. The header
    edge count must match either the number of edge lines or the number of
    edges after additive merging.
    """
    header: tuple[int, int] | None = None
    edges: list[tuple[int, int, Fraction]] = []
    linear: dict[int, Fraction] = {}
    n = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 2:
                raise ParseError(f"line {lineno}: malformed header (expected 'n m')")
            try:
                n, m = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"line {lineno}: malformed header (expected 'n m')") from None
            if n < 1 or m < 0:
                raise ParseError(f"line {lineno}: malformed header (n >= 1, m >= 0)")
            header = (n, m)
            continue
        if parts[0] == "h":
            if len(parts) != 3:
                raise ParseError(f"line {lineno}: linear term needs 'h v value'")
            try:
                v = int(parts[1])
            except ValueError:
                raise ParseError(f"line {lineno}: non-integer vertex id") from None
            if not 0 <= v < n:
                raise ParseError(f"line {lineno}: vertex id {v} out of range")
            try:
                linear[v] = linear.get(v, Fraction(0)) + Fraction(parts[2])
            except (ValueError, ZeroDivisionError):
                raise ParseError(f"line {lineno}: non-numeric value {parts[2]!r}") from None
            continue
        if len(parts) != 3:
            raise ParseError(f"line {lineno}: edge needs 'u v w'")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer vertex id") from None
        if not (0 <= u < n and 0 <= v < n):
            raise ParseError(f"line {lineno}: vertex id out of range")
        if u == v:
            raise ParseError(f"line {lineno}: self-loop at vertex {u}")
        try:
            w = Fraction(parts[2])
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"line {lineno}: non-numeric weight {parts[2]!r}") from None
        edges.append((u, v, w))
    if header is None:
        raise ParseError("line 1: missing header")
    inst = MaxCutInstance(n=header[0], edges=tuple(edges),
                          linear=tuple(linear.get(v, Fraction(0)) for v in range(header[0])))
    if len(edges) != header[1] and inst.num_edges != header[1]:
        raise ParseError(f"header edge count {header[1]} matches neither "
                         f"{len(edges)} edge lines nor {inst.num_edges} merged edges")
    return inst


def format_instance(inst: MaxCutInstance) -> str:
    """Canonical writer: sorted edges, then sorted nonzero linear terms."""
    lines = [f"{inst.n} {inst.num_edges}"]
    for u, v, w in inst.edges:
        lines.append(f"{u} {v} {w}")
    for v, h in enumerate(inst.linear):
        if h:
            lines.append(f"h {v} {h}")
    return "\n".join(lines) + "\n"


def solve_exact(inst: MaxCutInstance, time_limit: float | None = None) -> ExactSolution:
    """Branch-and-bound MaxCut solver, exact in scaled-integer arithmetic.

    Bound: decided contribution plus sum of max(w, 0) over undecided edges and
    max(h, 0) over undecided vertices. Branches on vertices in descending
    degree order. With a time limit, may return the incumbent (proven=False).
    """
    denom, eu, ev, ew, h, off = inst._scaled
    n = inst.n
    degree = [0] * n
    for u, v, _w in inst.edges:
        degree[u] += 1
        degree[v] += 1
    order = sorted(range(n), key=lambda v: (-degree[v], v))
    pos = {v: i for i, v in enumerate(order)}

    # edges indexed by the later endpoint in branch order: decided when that
    # endpoint is assigned
    edges_at: list[list[tuple[int, int]]] = [[] for _ in range(n)]  # (other vertex, w)
    for u, v, w in zip(eu, ev, ew):
        u, v, w = int(u), int(v), int(w)
        if pos[u] < pos[v]:
            edges_at[pos[v]].append((u, w))
        else:
            edges_at[pos[u]].append((v, w))

    optimistic = off + sum(max(int(w), 0) for w in ew) + sum(max(int(hv), 0) for hv in h)
    assign = [-1] * n
    best_val = None
    best_bits: list[int] | None = None
    symmetric = not any(inst.linear)
    deadline = None if time_limit is None else time.monotonic() + time_limit
    timed_out = False
    nodes = 0

    def dfs(depth: int, value: int, bound: int):
        nonlocal best_val, best_bits, timed_out, nodes
        nodes += 1
        if deadline is not None and nodes % 2048 == 0 and time.monotonic() > deadline:
            timed_out = True
        if timed_out:
            return
        if best_val is not None and bound <= best_val:
            return
        if depth == n:
            if best_val is None or value > best_val:
                best_val = value
                best_bits = assign.copy()
            return
        v = order[depth]
        choices = (0,) if depth == 0 and symmetric else (0, 1)
        hv = int(h[v])
        for bit in choices:
            assign[v] = bit
            dv = hv * bit
            db = dv - max(hv, 0)
            for u, w in edges_at[depth]:
                contrib = w if assign[u] != bit else 0
                dv += contrib
                db += contrib - max(w, 0)
            dfs(depth + 1, value + dv, bound + db)
        assign[v] = -1

    dfs(0, off, optimistic)
    if best_bits is None:
        # time limit expired before reaching any leaf; report all-zero
        best_bits = [0] * n
        val, _ = cut_values_scaled(inst, np.zeros((1, n), dtype=np.int64))
        best_val = int(val[0])
    return ExactSolution(
        best_value=Fraction(best_val, denom),
        best_assignment="".join(str(b) for b in best_bits),
        proven=not timed_out,
    )


def _partition(n: int, separator_size: int, rng: Random) -> tuple[list[int], list[int], list[int]]:
    rest = n - separator_size
    a_size = (rest + 1) // 2
    perm = list(range(n))
    rng.shuffle(perm)
    return perm[:a_size], perm[a_size:a_size + separator_size], perm[a_size + separator_size:]


def planted_sets(n: int, separator_size: int, seed: int) -> tuple[list[int], list[int], list[int]]:
    """The (A, S, B) vertex partition generate_instance plants for this seed."""
    return _partition(n, separator_size, Random(seed))


def generate_instance(n: int, m: int, separator_size: int, seed: int) -> MaxCutInstance:
    """Connected unit-weight graph with two near-equal communities bridged
    only through a planted separator of the requested size.

    Each separator vertex is adjacent to both communities; there are no direct
    community-to-community edges, so removing the separator disconnects them.
    Deterministic per seed.
    """
    if separator_size < 1:
        raise ValueError("separator_size must be >= 1")
    if n - separator_size < 2:
        raise ValueError(f"cannot split {n} nodes into two communities plus "
                         f"a separator of size {separator_size}")
    rng = Random(seed)
    part_a, sep, part_b = _partition(n, separator_size, rng)
    a_size, b_size = len(part_a), len(part_b)
    min_edges = (a_size - 1) + (b_size - 1) + 2 * separator_size
    max_edges = (a_size * (a_size - 1) + b_size * (b_size - 1)
                 + separator_size * (separator_size - 1)) // 2 \
        + separator_size * (a_size + b_size)
    if m < min_edges:
        raise ValueError(f"cannot connect {n} nodes with {m} edges "
                         f"(need at least {min_edges} for this layout)")
    if m > max_edges:
        raise ValueError(f"{m} edges exceed the {max_edges} pairs this layout allows")

    used: set[tuple[int, int]] = set()

    def add(u: int, v: int):
        used.add((u, v) if u < v else (v, u))

    for group in (part_a, part_b):
        for i in range(1, len(group)):
            add(group[i], group[rng.randrange(i)])
    for s in sep:
        add(s, part_a[rng.randrange(a_size)])
        add(s, part_b[rng.randrange(b_size)])

    candidates = []
    for group in (part_a, part_b, sep):
        g = sorted(group)
        for i in range(len(g)):
            for j in range(i + 1, len(g)):
                candidates.append((g[i], g[j]))
    for s in sorted(sep):
        for v in sorted(part_a + part_b):
            candidates.append((s, v) if s < v else (v, s))
    candidates = sorted(set(candidates) - used)
    used.update(rng.sample(candidates, m - len(used)))

    return MaxCutInstance(n=n, edges=tuple((u, v, Fraction(1)) for u, v in sorted(used)))


def is_connected(inst: MaxCutInstance, removed: Iterable[int] = ()) -> bool:
    """Breadth-first connectivity of the graph with `removed` vertices deleted."""
    removed = set(removed)
    alive = [v for v in range(inst.n) if v not in removed]
    if not alive:
        return True
    seen = {alive[0]}
    queue = [alive[0]]
    while queue:
        v = queue.pop()
        for u, _w in inst.adjacency[v]:
            if u not in removed and u not in seen:
                seen.add(u)
                queue.append(u)
    return len(seen) == len(alive)
