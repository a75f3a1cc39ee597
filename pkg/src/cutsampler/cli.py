"""Command line interface.

Subcommands mirror the pipeline stages (generate, separate, shrink, train,
sample, analyze), plus run-all for the whole procedure and compare for
cross-run tables. Exit codes: 0 success, 2 validation error, 3 infeasible
separator. The CUTSAMPLER_OUT environment variable overrides --out.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import clamp_normalize, histogram_from_samples, histogram_to_csv, \
    instance_digest, summary_stats, uniform_expectation
from .instances import (ParseError, format_instance, generate_instance,
                        parse_instance, solve_exact)
from .pipeline import (OUTPUT_DIR_ENV, ConfigError, RunConfig, classical_cut_run,
                       compare_runs, run_pipeline, stage_seed)
from .qaoa import QaoaParams, build_qaoa, train
from .separator import (SeparatorDecomposition, SeparatorInfeasibleError,
                        find_separator)
from .shrink import (ShrinkTrace, estimate_correlations, shrink_separator,
                     shrunk_decomposition)
from .simulator import NoiseModel, sample_bitstrings
from .wirecut import SignedSampleSet, build_cut_plan, sample_cut_shots

log = logging.getLogger("cutsampler")


def _out_dir(args) -> Path:
    out = Path(os.environ.get(OUTPUT_DIR_ENV) or args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_instance(path: str):
    return parse_instance(Path(path).read_text())


def _noise_from(args) -> NoiseModel | None:
    if not args.noisy:
        return None
    return NoiseModel(p1=args.noise_p1, p2=args.noise_p2, p_ro=args.noise_ro)


def _add_noise_flags(p: argparse.ArgumentParser):
    p.add_argument("--noisy", action="store_true", help="enable the noise model")
    p.add_argument("--noise-p1", type=float, default=0.006)
    p.add_argument("--noise-p2", type=float, default=0.045)
    p.add_argument("--noise-ro", type=float, default=0.03)
    p.add_argument("--trajectory-reuse", type=int, default=200)


def cmd_generate(args) -> int:
    inst = generate_instance(args.n, args.m, args.separator_size, args.seed)
    out = _out_dir(args) / "instance.txt"
    out.write_text(format_instance(inst))
    print(out)
    return 0


def cmd_separate(args) -> int:
    inst = _read_instance(args.instance)
    dec = find_separator(inst, args.balance_fraction, time_limit=args.time_limit)
    out = _out_dir(args) / "separator.json"
    out.write_text(dec.to_json() + "\n")
    print(out)
    return 0


def cmd_shrink(args) -> int:
    inst = _read_instance(args.instance)
    dec = SeparatorDecomposition.from_json(Path(args.separator).read_text())
    pairs = [(dec.S[i], dec.S[j]) for i in range(len(dec.S))
             for j in range(i + 1, len(dec.S))]
    corr = estimate_correlations(inst, pairs, budget=args.budget,
                                 backend=args.backend, k=args.k,
                                 seed=stage_seed(args.seed, "correlations"))
    out = _out_dir(args)
    (out / "correlations.json").write_text(json.dumps(
        {"pairs": [[i, j, str(c)] for (i, j), c in sorted(corr.items())]},
        sort_keys=True) + "\n")
    shrunk, trace = shrink_separator(inst, dec, corr)
    (out / "shrunk.txt").write_text(format_instance(shrunk))
    (out / "trace.json").write_text(trace.to_json() + "\n")
    (out / "separator_shrunk.json").write_text(
        shrunk_decomposition(dec, trace).to_json() + "\n")
    print(out / "shrunk.txt")
    return 0


def cmd_train(args) -> int:
    inst = _read_instance(args.instance)
    params = train(inst, p=args.p, dt=args.dt, budget=args.budget)
    out = _out_dir(args) / "params.json"
    out.write_text(params.to_json() + "\n")
    print(out)
    return 0


def cmd_sample(args) -> int:
    shrunk = _read_instance(args.shrunk)
    noise = _noise_from(args)
    out = _out_dir(args)
    if args.mode in ("cut", "uncut"):
        if not args.params:
            raise ConfigError(f"--params is required for mode {args.mode}")
        params = QaoaParams.from_json(Path(args.params).read_text())
    if args.mode == "uncut":
        bits = sample_bitstrings(build_qaoa(shrunk, params), args.n_samples,
                                 noise=noise, seed=args.seed,
                                 trajectory_reuse=args.trajectory_reuse)
        samples = SignedSampleSet(bits=bits,
                                  signs=np.ones(args.n_samples, dtype=np.int8),
                                  kappa=1, seed=args.seed, plan_digest="uncut")
    else:
        if not args.separator_shrunk:
            raise ConfigError(f"--separator-shrunk is required for mode {args.mode}")
        dec = SeparatorDecomposition.from_json(
            Path(args.separator_shrunk).read_text())
        if args.mode == "cut":
            plan = build_cut_plan(shrunk, dec, params)
            samples = sample_cut_shots(plan, args.n_samples, noise=noise,
                                       seed=args.seed,
                                       trajectory_reuse=args.trajectory_reuse)
        else:
            samples, sub_params = classical_cut_run(
                shrunk, dec, p=args.p, dt=args.dt, opt_budget=args.opt_budget,
                n_samples=args.n_samples, seed=args.seed, noise=noise,
                trajectory_reuse=args.trajectory_reuse)
            (out / "classical_params.json").write_text(json.dumps(
                {name: json.loads(p.to_json())
                 for name, p in sorted(sub_params.items())}, sort_keys=True) + "\n")
    samples.save_csv(out / "samples.csv")
    print(out / "samples.csv")
    return 0


def cmd_analyze(args) -> int:
    samples = SignedSampleSet.load_csv(args.samples)
    out = _out_dir(args)
    summary: dict = {"n_samples": samples.n_shots, "kappa": samples.kappa}
    levels = [("shrunk", _read_instance(args.shrunk), None)]
    if args.original and args.trace:
        trace = ShrinkTrace.from_json(Path(args.trace).read_text())
        levels.append(("original", _read_instance(args.original), trace))
    for label, inst, trace in levels:
        hist = histogram_from_samples(samples, inst, trace)
        solution = solve_exact(inst)
        stats = summary_stats(hist, inst, solution.best_value)
        histogram_to_csv(clamp_normalize(hist), out / f"histogram_{label}.csv",
                         inst=inst, n_samples=samples.n_shots,
                         kappa=samples.kappa)
        summary[label] = {
            "n": inst.n, "digest": instance_digest(inst),
            "c_star": float(solution.best_value),
            "c0": float(uniform_expectation(inst)), **stats,
        }
    (out / "analysis.json").write_text(
        json.dumps(summary, sort_keys=True, indent=1) + "\n")
    print(out / "analysis.json")
    return 0


def cmd_run_all(args) -> int:
    if args.config:
        cfg = RunConfig.from_file(args.config)
    else:
        cfg = RunConfig()
    overrides = {
        "mode": args.mode, "instance_file": args.instance,
        "gen_n": args.n, "gen_m": args.m, "gen_sep": args.separator_size,
        "n_samples": args.n_samples, "seed": args.seed, "out_dir": args.out,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    if args.noisy:
        cfg.noisy = True
    report = run_pipeline(cfg)
    print(report.paths["summary"])
    return 0


def cmd_compare(args) -> int:
    out = _out_dir(args) / "comparison.csv"
    rows = compare_runs(args.runs, out)
    print(out)
    if not all(r["instance_match"] for r in rows):
        log.warning("instance digests disagree between runs of the same size")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cutsampler",
        description="MaxCut sampling from wire-cut two-layer QAOA circuits")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a planted-separator instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--separator-size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("separate", help="find a minimum balanced vertex separator")
    p.add_argument("--instance", required=True)
    p.add_argument("--balance-fraction", type=float, default=0.6)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("shrink", help="contract the separator to one vertex")
    p.add_argument("--instance", required=True)
    p.add_argument("--separator", required=True)
    p.add_argument("--backend", default="local-search",
                   choices=("exhaustive", "local-search"))
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--k", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_shrink)

    p = sub.add_parser("train", help="train QAOA parameters on an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--dt", type=float, default=0.75)
    p.add_argument("--budget", type=int, default=500)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="sample bitstrings in one of the modes")
    p.add_argument("--mode", required=True, choices=("cut", "uncut", "classical-cut"))
    p.add_argument("--shrunk", required=True, help="shrunk instance file")
    p.add_argument("--separator-shrunk", help="shrunk separator json (cut modes)")
    p.add_argument("--params", help="trained parameters json")
    p.add_argument("--n-samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--dt", type=float, default=0.75)
    p.add_argument("--opt-budget", type=int, default=500)
    _add_noise_flags(p)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("analyze", help="histograms and metrics from samples")
    p.add_argument("--samples", required=True)
    p.add_argument("--shrunk", required=True)
    p.add_argument("--original")
    p.add_argument("--trace")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("run-all", help="run the full pipeline",
                       description="Flags override the config file.")
    p.add_argument("--config")
    p.add_argument("--mode", choices=("cut", "uncut", "classical-cut"))
    p.add_argument("--instance")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--separator-size", type=int)
    p.add_argument("--n-samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--noisy", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run_all)

    p = sub.add_parser("compare", help="tabulate several run summaries")
    p.add_argument("runs", nargs="+")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SeparatorInfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ParseError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
