"""Objective-value histograms, normalized objectives and percentiles.

Histogram bin keys and weights are exact rationals. Signed sample sets
(from cut runs) produce signed bins; negative quasi-weights are clamped to
zero and the rest renormalized before percentile statistics.

The normalized objective r = (c - c0) / (c* - c0) maps the uniform-random
sampling expectation c0 to 0 and the optimum c* to 1.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .instances import MaxCutInstance, cut_values_scaled, format_instance
from .shrink import ShrinkTrace, expand_bits
from .wirecut import SignedSampleSet


@dataclass
class ObjectiveHistogram:
    bins: dict[Fraction, Fraction] = field(default_factory=dict)
    normalized: bool = False

    @property
    def total_weight(self) -> Fraction:
        return sum(self.bins.values(), Fraction(0))

    def sorted_items(self) -> list[tuple[Fraction, Fraction]]:
        return sorted(self.bins.items())


def _sample_bits(samples) -> tuple[np.ndarray, np.ndarray, int]:
    """Normalize plain or signed input to (bits, signs, kappa)."""
    if isinstance(samples, SignedSampleSet):
        return samples.bits, samples.signs.astype(np.int64), samples.kappa
    if isinstance(samples, np.ndarray):
        bits = samples.astype(np.uint8)
    else:
        rows = [[int(c) for c in (s if not isinstance(s, str) else list(s))]
                for s in samples]
        bits = np.array(rows, dtype=np.uint8)
    return bits, np.ones(bits.shape[0], dtype=np.int64), 1


def histogram_from_samples(samples, inst: MaxCutInstance,
                           trace: ShrinkTrace | None = None) -> ObjectiveHistogram:
    """Bin samples by exact objective value on `inst`.

    With a shrink trace, samples are expanded to the original vertices first.
    Weight per sample is sign * kappa / N (1 / N for plain samples), so an
    unsigned histogram totals exactly 1.
    """
    bits, signs, kappa = _sample_bits(samples)
    if trace is not None:
        bits = expand_bits(trace, bits)
    if bits.shape[1] != inst.n:
        raise ValueError(f"sample length {bits.shape[1]} != instance size {inst.n}")
    values, denom = cut_values_scaled(inst, bits)
    n_samples = bits.shape[0]
    uniq, inv = np.unique(values, return_inverse=True)
    sign_sums = np.bincount(inv, weights=signs.astype(np.float64)).astype(np.int64)
    bins = {Fraction(int(v), denom): Fraction(kappa * int(s), n_samples)
            for v, s in zip(uniq, sign_sums) if s != 0}
    return ObjectiveHistogram(bins=bins, normalized=False)


def negative_mass(h: ObjectiveHistogram) -> Fraction:
    """Total magnitude of negative bins (the mass clamp_normalize removes)."""
    return -sum((w for w in h.bins.values() if w < 0), Fraction(0))


def clamp_normalize(h: ObjectiveHistogram) -> ObjectiveHistogram:
    """Drop negative bins and rescale the rest to total weight 1."""
    positive = {c: w for c, w in h.bins.items() if w > 0}
    if not positive:
        raise ValueError("all bins non-positive; nothing to normalize")
    total = sum(positive.values(), Fraction(0))
    return ObjectiveHistogram(bins={c: w / total for c, w in positive.items()},
                              normalized=True)


def percentile(h: ObjectiveHistogram, q) -> Fraction:
    """Smallest bin key at which the ascending cumulative weight reaches q."""
    if not h.normalized:
        raise ValueError("percentile needs a normalized histogram")
    q = Fraction(q)
    if not 0 < q < 1:
        raise ValueError("q must be in (0, 1)")
    cum = Fraction(0)
    items = h.sorted_items()
    for c, w in items:
        cum += w
        if cum >= q:
            return c
    return items[-1][0]  # guard against rounding shortfall


def uniform_expectation(inst: MaxCutInstance) -> Fraction:
    """Expected objective under uniform random assignments: each edge is cut
    and each vertex set with probability 1/2."""
    total = inst.offset
    for *_uv, w in inst.edges:
        total += w / 2
    for h in inst.linear:
        total += h / 2
    return total


def normalized_objective(c, inst: MaxCutInstance, c_star) -> Fraction:
    """r = (c - c0) / (c* - c0) with c0 the uniform-sampling expectation."""
    c = Fraction(c)
    c_star = Fraction(c_star)
    c0 = uniform_expectation(inst)
    if c_star <= c0:
        raise ValueError(f"degenerate normalization: c* = {c_star} <= c0 = {c0}")
    return (c - c0) / (c_star - c0)


def instance_digest(inst: MaxCutInstance) -> str:
    return hashlib.sha256(format_instance(inst).encode()).hexdigest()


def summary_stats(h: ObjectiveHistogram, inst: MaxCutInstance,
                  c_star: Fraction) -> dict[str, float]:
    """Spread statistics of a (possibly signed) histogram on one instance.

    Clamps internally; reports the clamped mass alongside best/mean/95th
    percentile of the normalized objective.
    """
    clamped = h if h.normalized else clamp_normalize(h)
    neg = negative_mass(h)
    r = {c: normalized_objective(c, inst, c_star) for c in clamped.bins}
    best_c = max(clamped.bins)
    mean_r = sum((w * r[c] for c, w in clamped.bins.items()), Fraction(0))
    p95_c = percentile(clamped, Fraction(95, 100))
    return {
        "best_r": float(r[best_c]),
        "mean_r": float(mean_r),
        "p95_objective": float(p95_c),
        "p95_r": float(r[p95_c]),
        "min_r": float(r[min(clamped.bins)]),
        "negative_mass_clamped": float(neg),
    }


def histogram_to_csv(h: ObjectiveHistogram, path, *, inst: MaxCutInstance,
                     n_samples: int, kappa: int) -> None:
    """Write "objective,weight" rows with a metadata header."""
    with open(path, "w") as fh:
        fh.write(f"# instance_digest={instance_digest(inst)}\n")
        fh.write(f"# n_samples={n_samples}\n")
        fh.write(f"# kappa={kappa}\n")
        fh.write(f"# clamped_mass={float(negative_mass(h))!r}\n")
        fh.write("objective,weight\n")
        for c, w in h.sorted_items():
            fh.write(f"{c},{float(w)!r}\n")


def histogram_from_csv(path) -> ObjectiveHistogram:
    bins: dict[Fraction, Fraction] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("objective"):
                continue
            c, _, w = line.partition(",")
            bins[Fraction(c)] = Fraction(w)
    return ObjectiveHistogram(bins=bins, normalized=False)
