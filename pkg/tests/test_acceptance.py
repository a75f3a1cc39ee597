"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Statistical criteria use fixed seeds; the noiseless-broadening criterion
retries once with a second seed before failing, as specified.
"""
import json
import time
from fractions import Fraction
from random import Random

import numpy as np
import pytest

from conftest import brute_force_min_separator, random_cuttable_instance, \
    random_instance
from cutsampler.analysis import (ObjectiveHistogram, clamp_normalize,
                                 normalized_objective, percentile,
                                 uniform_expectation)
from cutsampler.instances import (cut_value, generate_instance, planted_sets,
                                  solve_exact)
from cutsampler.pipeline import RunConfig, run_pipeline
from cutsampler.qaoa import QaoaParams, build_qaoa, init_schedule, \
    qaoa_expectation, train
from cutsampler.separator import balance_bound_for, find_separator, \
    verify_separator
from cutsampler.shrink import estimate_correlations, expand_bits, \
    shrink_separator
from cutsampler.separator import SeparatorDecomposition
from cutsampler.simulator import exact_distribution
from cutsampler.wirecut import (build_cut_plan, exact_cut_distribution,
                                reconstruct_distribution, sample_cut_shots)


def _report(num: int, ok: bool, detail: str):
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance #{num}] {status}: {detail}")
    assert ok, f"criterion {num}: {detail}"


def _qpd_battery(count: int = 50):
    """Randomized single-separator instances with signed rational weights and
    random two-layer parameters, paired with their exact cut/uncut maps."""
    rng = Random(2024)
    for trial in range(count):
        n = rng.randint(3, 10)
        inst, a, b, s = random_cuttable_instance(
            rng, n, weights=(1, -1, 2, -2, Fraction(1, 2), Fraction(-3, 2)))
        params = QaoaParams(
            p=2,
            gammas=(rng.uniform(-2, 2), rng.uniform(-2, 2)),
            betas=(rng.uniform(-2, 2), rng.uniform(-2, 2)))
        dec = SeparatorDecomposition(A=a, B=b, S=(s,), balance_bound=n)
        plan = build_cut_plan(inst, dec, params)
        signed, raw = exact_cut_distribution(plan)
        uncut = exact_distribution(build_qaoa(inst, params))
        yield trial, signed, raw, uncut


_BATTERY_CACHE: list | None = None


def _battery() -> list:
    global _BATTERY_CACHE
    if _BATTERY_CACHE is None:
        _BATTERY_CACHE = list(_qpd_battery(50))
    return _BATTERY_CACHE


def test_criterion_1_qpd_exactness():
    t0 = time.time()
    worst = 0.0
    for trial, signed, _raw, uncut in _battery():
        err = max(abs(signed.get(x, 0.0) - uncut.get(x, 0.0))
                  for x in set(signed) | set(uncut))
        worst = max(worst, err)
        assert err <= 1e-9, f"trial {trial}: L_inf {err}"
    elapsed = time.time() - t0
    _report(1, worst <= 1e-9 and elapsed <= 300,
            f"50 instances, worst L_inf(signed - uncut) = {worst:.2e}, "
            f"{elapsed:.0f}s")


def test_criterion_2_suppression_bound():
    worst = float("inf")
    for trial, _signed, raw, uncut in _battery():
        for x, p in uncut.items():
            margin = raw.get(x, 0.0) - p / 12
            worst = min(worst, margin)
            assert margin >= -1e-9, f"trial {trial}, bitstring {x}"
    _report(2, worst >= -1e-9,
            f"raw(x) >= p_uncut(x)/12 everywhere, worst margin = {worst:.2e}")


def test_criterion_3_monte_carlo_unbiasedness():
    t0 = time.time()
    rng = Random(99)
    inst, a, b, s = random_cuttable_instance(rng, 6, weights=(1, -1, 2))
    dec = SeparatorDecomposition(A=a, B=b, S=(s,), balance_bound=6)
    params = train(inst, p=2, dt=0.75, budget=200)
    plan = build_cut_plan(inst, dec, params)
    uncut = exact_distribution(build_qaoa(inst, params))
    samples = sample_cut_shots(plan, 1_000_000, seed=7)
    qhat = reconstruct_distribution(samples)
    err = max(abs(qhat.get(x, 0.0) - uncut.get(x, 0.0))
              for x in set(qhat) | set(uncut))
    elapsed = time.time() - t0
    _report(3, err <= 0.01 and elapsed <= 600,
            f"6-qubit plan, N=10^6: L_inf(qhat - p_uncut) = {err:.4f}, "
            f"{elapsed:.0f}s")


def _shrink_chain(n, m, sep, seed):
    inst = generate_instance(n, m, sep, seed)
    dec = find_separator(inst, 0.6)
    pairs = [(dec.S[i], dec.S[j]) for i in range(len(dec.S))
             for j in range(i + 1, len(dec.S))]
    backend = "exhaustive" if inst.n <= 16 else "local-search"
    corr = estimate_correlations(inst, pairs, budget=200, backend=backend,
                                 k=32, seed=5)
    shrunk, trace = shrink_separator(inst, dec, corr)
    return inst, shrunk, trace


def test_criterion_4_shrink_expand_identity():
    checked = 0
    for n, m, sep, seed in ((8, 11, 2, 0), (10, 13, 2, 7), (12, 16, 3, 3),
                            (14, 20, 3, 5), (15, 20, 3, 9)):
        inst, shrunk, trace = _shrink_chain(n, m, sep, seed)
        assert shrunk.n <= 14
        idx = np.arange(1 << shrunk.n, dtype=np.int64)
        bits = ((idx[:, None] >> np.arange(shrunk.n)) & 1).astype(np.uint8)
        expanded = expand_bits(trace, bits)
        for row, full in zip(bits, expanded):
            assert cut_value(shrunk, row) == cut_value(inst, full)
        checked += 1 << shrunk.n
    # spot-check at the largest scale
    inst, shrunk, trace = _shrink_chain(25, 38, 3, 1)
    rng = Random(1)
    for _ in range(500):
        y = [rng.randint(0, 1) for _ in range(shrunk.n)]
        full = expand_bits(trace, np.array([y], dtype=np.uint8))[0]
        assert cut_value(shrunk, y) == cut_value(inst, full)
        checked += 1
    _report(4, True, f"exact objective identity on {checked} expansions "
                     "(5 full enumerations + 25-node spot checks)")


def test_criterion_5_separator_optimality():
    rng = Random(314)
    exact_checked = 0
    for _trial in range(25):
        n = rng.randint(4, 12)
        inst = random_instance(rng, n, density=rng.uniform(0.2, 0.7))
        bound = balance_bound_for(n, 0.6)
        expected = brute_force_min_separator(inst, bound)
        if expected is None:
            continue
        dec = find_separator(inst, 0.6)
        assert len(dec.S) == expected
        assert verify_separator(inst, dec)
        exact_checked += 1
    assert exact_checked >= 12
    timings = []
    for n, m, sep in ((10, 13, 2), (15, 20, 3), (20, 29, 4), (25, 38, 3)):
        inst = generate_instance(n, m, sep, seed=3)
        t0 = time.time()
        dec = find_separator(inst, 0.6)
        timings.append(time.time() - t0)
        assert len(dec.S) <= sep, f"n={n}: |S|={len(dec.S)} > planted {sep}"
        assert timings[-1] <= 60
    _report(5, True, f"{exact_checked} exhaustive matches; planted bound held "
                     f"at 10-25 nodes (max {max(timings):.1f}s)")


def _broadening_run(seed: int):
    stats = {}
    for mode in ("uncut", "cut"):
        cfg = RunConfig(mode=mode, gen_n=25, gen_m=38, gen_sep=3,
                        n_samples=100_000, seed=seed,
                        out_dir=f"/tmp/acceptance6_{mode}_{seed}")
        stats[mode] = run_pipeline(cfg).summary["original"]
    ok = (stats["cut"]["p95_r"] <= stats["uncut"]["p95_r"]
          and stats["cut"]["min_r"] < stats["uncut"]["min_r"])
    return ok, stats


def test_criterion_6_noiseless_broadening():
    t0 = time.time()
    ok, stats = _broadening_run(seed=11)
    if not ok:  # statistical: retry once with a second seed
        ok, stats = _broadening_run(seed=12)
    elapsed = time.time() - t0
    _report(6, ok and elapsed <= 1800,
            f"25 nodes, N=10^5: p95_r cut {stats['cut']['p95_r']:.4f} <= "
            f"uncut {stats['uncut']['p95_r']:.4f}; min_r cut "
            f"{stats['cut']['min_r']:.3f} < uncut {stats['uncut']['min_r']:.3f}; "
            f"{elapsed:.0f}s")


def test_criterion_7_noise_crossover_trend():
    t0 = time.time()
    seed = 11
    # calibration gate: the documented default noise must degrade the
    # 20-node uncut circuit below 0.8 of its noiseless p95_r
    base = run_pipeline(RunConfig(
        mode="uncut", gen_n=20, gen_m=29, gen_sep=4, n_samples=100_000,
        seed=seed, out_dir="/tmp/acceptance7_base")).summary["original"]["p95_r"]
    noisy_uncut_20 = run_pipeline(RunConfig(
        mode="uncut", gen_n=20, gen_m=29, gen_sep=4, n_samples=100_000,
        seed=seed, noisy=True,
        out_dir="/tmp/acceptance7_u20")).summary["original"]["p95_r"]
    ratio = noisy_uncut_20 / base
    assert ratio < 0.8, f"calibration: noisy/noiseless p95_r ratio {ratio:.3f}"

    deltas = {}
    for n, m, sep in ((10, 13, 2), (15, 20, 3), (20, 29, 4)):
        p95 = {}
        for mode in ("uncut", "cut"):
            cfg = RunConfig(mode=mode, gen_n=n, gen_m=m, gen_sep=sep,
                            n_samples=100_000, seed=seed, noisy=True,
                            out_dir=f"/tmp/acceptance7_{n}_{mode}")
            p95[mode] = run_pipeline(cfg).summary["original"]["p95_r"]
        deltas[n] = p95["cut"] - p95["uncut"]
    ordered = [deltas[n] for n in (10, 15, 20)]
    ok = ordered[0] <= ordered[1] + 1e-12 and ordered[1] <= ordered[2] + 1e-12 \
        and ordered[2] > 0
    elapsed = time.time() - t0
    _report(7, ok and elapsed <= 7200,
            f"calibration ratio {ratio:.3f} < 0.8; Delta(n) = "
            f"{[round(d, 4) for d in ordered]} non-decreasing, "
            f"Delta(20) = {ordered[2]:.4f} > 0; {elapsed:.0f}s")


def test_criterion_8_training_contract():
    k2_params = train(parse_k2(), p=1, dt=0.75, budget=300)
    k2_final = qaoa_expectation(parse_k2(), k2_params)
    assert k2_final >= 0.99
    improved = []
    rng = Random(8)
    for _ in range(6):
        inst = random_instance(rng, rng.randint(3, 7), density=0.6,
                               weights=(1, -1, 2))
        init = init_schedule(2, 0.75)
        trained = train(inst, p=2, dt=0.75, budget=80)
        e_init = qaoa_expectation(inst, init)
        e_trained = qaoa_expectation(inst, trained)
        assert e_trained >= e_init - 1e-12
        improved.append(e_trained - e_init)
    _report(8, True, f"K2 p=1 expectation {k2_final:.4f} >= 0.99; trained >= "
                     f"initialized on 6 instances (gains {min(improved):.3f}"
                     f"..{max(improved):.3f})")


def parse_k2():
    from cutsampler.instances import parse_instance
    return parse_instance("2 1\n0 1 1")


def test_criterion_9_metric_unit_suite():
    inst = generate_instance(25, 38, 3, seed=1)
    assert uniform_expectation(inst) == 19  # 38 unit edges
    r = normalized_objective(26, inst, 33)
    assert r == Fraction(1, 2)
    assert normalized_objective(33, inst, 33) == 1
    assert normalized_objective(19, inst, 33) == 0

    h = ObjectiveHistogram(bins={Fraction(2): Fraction(12, 10),
                                 Fraction(1): Fraction(-2, 10)})
    assert clamp_normalize(h).bins == {Fraction(2): Fraction(1)}
    with pytest.raises(ValueError):
        clamp_normalize(ObjectiveHistogram(bins={Fraction(0): Fraction(-1)}))

    point = ObjectiveHistogram(bins={Fraction(5): Fraction(1)}, normalized=True)
    assert percentile(point, 0.95) == 5
    half = ObjectiveHistogram(bins={Fraction(0): Fraction(1, 2),
                                    Fraction(1): Fraction(1, 2)}, normalized=True)
    assert percentile(half, 0.95) == 1
    skew = ObjectiveHistogram(bins={Fraction(0): Fraction(96, 100),
                                    Fraction(1): Fraction(4, 100)}, normalized=True)
    assert percentile(skew, 0.95) == 0
    _report(9, True, "normalized objective (38-edge case r = 1/2 exactly), "
                     "clamp and percentile examples all exact")


def test_criterion_10_reproducibility(tmp_path):
    outputs = []
    for run in ("first", "second"):
        cfg = RunConfig(mode="cut", gen_n=10, gen_m=13, gen_sep=2,
                        n_samples=5000, seed=21,
                        out_dir=str(tmp_path / run), opt_budget=150)
        report = run_pipeline(cfg)
        outputs.append({name: report.paths[name].read_bytes()
                        for name in ("samples", "summary")})
    ok = outputs[0] == outputs[1]
    _report(10, ok, "run-all twice with one seed: samples.csv and "
                    "summary.json byte-identical")
