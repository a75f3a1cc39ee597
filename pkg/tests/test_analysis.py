from fractions import Fraction

import numpy as np
import pytest

from cutsampler.analysis import (ObjectiveHistogram, clamp_normalize,
                                 histogram_from_csv, histogram_from_samples,
                                 histogram_to_csv, negative_mass,
                                 normalized_objective, percentile,
                                 summary_stats, uniform_expectation)
from cutsampler.instances import generate_instance, parse_instance
from cutsampler.separator import SeparatorDecomposition
from cutsampler.shrink import estimate_correlations, shrink_separator
from cutsampler.wirecut import SignedSampleSet

K2 = parse_instance("2 1\n0 1 1")
TRIANGLE = parse_instance("3 3\n0 1 1\n0 2 1\n1 2 1")


def test_histogram_unsigned_samples():
    h = histogram_from_samples(["01", "00"], K2)
    assert h.bins == {Fraction(1): Fraction(1, 2), Fraction(0): Fraction(1, 2)}
    assert h.total_weight == 1


def test_histogram_unsigned_total_weight_exactly_one():
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, size=(997, 2)).astype(np.uint8)
    h = histogram_from_samples(bits, K2)
    assert h.total_weight == 1  # exact rational arithmetic


def test_histogram_signed_cancellation():
    ss = SignedSampleSet(bits=np.array([[1, 0], [1, 0]], dtype=np.uint8),
                         signs=np.array([1, -1], dtype=np.int8), kappa=12)
    h = histogram_from_samples(ss, K2)
    assert h.bins == {}


def test_histogram_signed_weights():
    ss = SignedSampleSet(bits=np.array([[1, 0], [0, 0], [0, 1]], dtype=np.uint8),
                         signs=np.array([1, 1, -1], dtype=np.int8), kappa=12)
    h = histogram_from_samples(ss, K2)
    # objective 1 collects +1 and -1 (cancel to 0 is wrong: two distinct
    # bitstrings share the bin): (+1) + (-1) = 0 at c=1, +1 at c=0
    assert h.bins == {Fraction(0): Fraction(12, 3)}


def test_histogram_through_shrink_trace_shifts_by_offset():
    dec = SeparatorDecomposition(A=(), B=(2,), S=(0, 1), balance_bound=2)
    corr = estimate_correlations(TRIANGLE, [(0, 1)], backend="exhaustive")
    shrunk, trace = shrink_separator(TRIANGLE, dec, corr)
    samples = ["00", "01", "10", "11"]
    h_orig = histogram_from_samples(samples, TRIANGLE, trace)
    h_shrunk = histogram_from_samples(samples, shrunk)
    # every original-level bin key equals the shrunk key plus the offset 2;
    # here the shrunk objective is the constant 2 = 0 + offset
    assert set(h_orig.bins) == {k for k in h_shrunk.bins}
    assert set(h_orig.bins) == {Fraction(2)}


def test_histogram_length_mismatch():
    with pytest.raises(ValueError, match="length"):
        histogram_from_samples(["010"], K2)


def test_normalized_objective_endpoints():
    inst = generate_instance(10, 13, 2, seed=7)
    c0 = uniform_expectation(inst)
    assert normalized_objective(c0, inst, Fraction(11)) == 0
    assert normalized_objective(11, inst, Fraction(11)) == 1


def test_normalized_objective_table_case():
    # 38 unit edges -> c0 = 19; optimum 33; c = 26 gives r = 7/14 = 1/2
    inst = generate_instance(25, 38, 3, seed=1)
    assert uniform_expectation(inst) == 19
    assert normalized_objective(26, inst, 33) == Fraction(1, 2)


def test_normalized_objective_degenerate():
    with pytest.raises(ValueError, match="degenerate"):
        normalized_objective(1, K2, Fraction(1, 2))


def test_uniform_expectation_general_weights():
    inst = parse_instance("3 2\n0 1 1/2\n1 2 -2\nh 0 4\n")
    assert uniform_expectation(inst) == Fraction(1, 2) / 2 - 1 + 2


def test_clamp_normalize_examples():
    h = ObjectiveHistogram(bins={Fraction(2): Fraction(12, 10),
                                 Fraction(1): Fraction(-2, 10)})
    clamped = clamp_normalize(h)
    assert clamped.bins == {Fraction(2): Fraction(1)}
    assert clamped.normalized
    assert negative_mass(h) == Fraction(2, 10)

    ok = ObjectiveHistogram(bins={Fraction(0): Fraction(1, 2),
                                  Fraction(1): Fraction(1, 2)})
    assert clamp_normalize(ok).bins == ok.bins

    with pytest.raises(ValueError, match="non-positive"):
        clamp_normalize(ObjectiveHistogram(bins={Fraction(0): Fraction(-1)}))


def test_percentile_examples():
    point = ObjectiveHistogram(bins={Fraction(5): Fraction(1)}, normalized=True)
    assert percentile(point, 0.95) == 5

    half = ObjectiveHistogram(bins={Fraction(0): Fraction(1, 2),
                                    Fraction(1): Fraction(1, 2)}, normalized=True)
    assert percentile(half, 0.95) == 1

    skew = ObjectiveHistogram(bins={Fraction(0): Fraction(96, 100),
                                    Fraction(1): Fraction(4, 100)}, normalized=True)
    assert percentile(skew, 0.95) == 0


def test_percentile_requires_normalized():
    h = ObjectiveHistogram(bins={Fraction(1): Fraction(2)})
    with pytest.raises(ValueError, match="normalized"):
        percentile(h, 0.5)
    with pytest.raises(ValueError, match="q must be"):
        percentile(clamp_normalize(h), 1.0)


def test_percentile_monotone_and_rescale_invariant():
    h = ObjectiveHistogram(bins={Fraction(c): Fraction(w, 10)
                                 for c, w in ((0, 1), (2, 4), (3, 3), (7, 2))},
                           normalized=True)
    values = [percentile(h, q) for q in (0.05, 0.25, 0.5, 0.75, 0.95)]
    assert values == sorted(values)
    scaled = ObjectiveHistogram(bins={c: 5 * w for c, w in h.bins.items()})
    renorm = clamp_normalize(scaled)
    for q in (0.05, 0.5, 0.95):
        assert percentile(renorm, q) == percentile(h, q)


def test_summary_stats_fields():
    ss = SignedSampleSet(bits=np.array([[0, 1], [1, 0], [0, 0], [1, 0]],
                                       dtype=np.uint8),
                         signs=np.array([1, 1, 1, -1], dtype=np.int8), kappa=12)
    h = histogram_from_samples(ss, K2)
    stats = summary_stats(h, K2, Fraction(1))
    for key in ("best_r", "mean_r", "p95_objective", "p95_r", "min_r",
                "negative_mass_clamped"):
        assert key in stats
    assert stats["best_r"] == 1.0
    assert stats["negative_mass_clamped"] == 0.0


def test_histogram_csv_roundtrip(tmp_path):
    ss = SignedSampleSet(bits=np.array([[0, 1], [1, 1], [1, 0]], dtype=np.uint8),
                         signs=np.array([1, -1, 1], dtype=np.int8), kappa=12)
    h = histogram_from_samples(ss, K2)
    path = tmp_path / "hist.csv"
    histogram_to_csv(h, path, inst=K2, n_samples=3, kappa=12)
    text = path.read_text()
    assert "# kappa=12" in text and "# instance_digest=" in text
    loaded = histogram_from_csv(path)
    for key, w in h.bins.items():
        assert float(loaded.bins[key]) == pytest.approx(float(w), abs=1e-15)
