"""End-to-end pipeline: instance -> separator -> shrink -> train -> sample
-> analyze, with file artifacts at every stage and fully seeded reproducibility.

Every stage writes its outputs into the run directory so later stages can be
re-run in isolation; two runs with identical config and seed produce
byte-identical artifacts.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .analysis import (clamp_normalize, histogram_from_samples, histogram_to_csv,
                       instance_digest, summary_stats, uniform_expectation)
from .instances import (MaxCutInstance, format_instance, generate_instance,
                        parse_instance, solve_exact)
from .qaoa import QaoaParams, build_qaoa, train
from .separator import SeparatorDecomposition, find_separator
from .shrink import (ShrinkTrace, estimate_correlations, shrink_separator,
                     shrunk_decomposition)
from .simulator import NoiseModel, sample_bitstrings
from .wirecut import SignedSampleSet, build_cut_plan, sample_cut_shots

log = logging.getLogger("cutsampler")

OUTPUT_DIR_ENV = "CUTSAMPLER_OUT"

MODES = ("cut", "uncut", "classical-cut")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str = "cut"
    instance_file: str | None = None
    gen_n: int | None = None
    gen_m: int | None = None
    gen_sep: int | None = None
    balance_fraction: float = 0.6
    corr_backend: str = "local-search"
    corr_budget: int = 200
    corr_k: int = 32
    p: int = 2
    dt: float = 0.75
    opt_budget: int = 500
    noisy: bool = False
    noise_p1: float = 0.006
    noise_p2: float = 0.045
    noise_ro: float = 0.03
    n_samples: int = 100_000
    seed: int = 0
    trajectory_reuse: int = 200
    out_dir: str = "run"

    _INT_KEYS = ("gen_n", "gen_m", "gen_sep", "corr_budget", "corr_k", "p",
                 "opt_budget", "n_samples", "seed", "trajectory_reuse")
    _FLOAT_KEYS = ("balance_fraction", "dt", "noise_p1", "noise_p2", "noise_ro")

    def validate(self) -> "RunConfig":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if self.mode == "cut" and self.p != 2:
            raise ConfigError("cut mode requires p = 2")
        if self.instance_file is None:
            if None in (self.gen_n, self.gen_m, self.gen_sep):
                raise ConfigError("provide instance_file or gen_n/gen_m/gen_sep")
        if self.corr_backend not in ("exhaustive", "local-search"):
            raise ConfigError(f"unknown correlation backend {self.corr_backend!r}")
        if self.trajectory_reuse < 1:
            raise ConfigError("trajectory_reuse must be >= 1")
        if not 0.5 <= self.balance_fraction < 1:
            raise ConfigError("balance_fraction must be in [0.5, 1)")
        return self

    @property
    def noise(self) -> NoiseModel | None:
        if not self.noisy:
            return None
        return NoiseModel(p1=self.noise_p1, p2=self.noise_p2, p_ro=self.noise_ro)

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "RunConfig":
        cfg = cls()
        for key, value in mapping.items():
            if not hasattr(cfg, key) or key.startswith("_"):
                raise ConfigError(f"unknown config key {key!r}")
            if key in cls._INT_KEYS:
                parsed: object = int(value)
            elif key in cls._FLOAT_KEYS:
                parsed = float(value)
            elif key == "noisy":
                parsed = str(value).lower() in ("1", "true", "yes", "on")
            else:
                parsed = value
            setattr(cfg, key, parsed)
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        mapping: dict[str, str] = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            mapping[key.strip()] = value.strip()
        return cls.from_mapping(mapping)

    def to_text(self) -> str:
        lines = []
        for key in ("mode", "instance_file", "gen_n", "gen_m", "gen_sep",
                    "balance_fraction", "corr_backend", "corr_budget", "corr_k",
                    "p", "dt", "opt_budget", "noisy", "noise_p1", "noise_p2",
                    "noise_ro", "n_samples", "seed", "trajectory_reuse"):
            value = getattr(self, key)
            if value is None:
                continue
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


@dataclass
class RunReport:
    out_dir: Path
    summary: dict
    paths: dict[str, Path] = field(default_factory=dict)


def stage_seed(master: int, stage: str) -> int:
    digest = hashlib.sha256(f"{master}/{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _write(path: Path, text: str) -> Path:
    path.write_text(text)
    log.info("wrote %s (sha256 %s)", path.name,
             hashlib.sha256(text.encode()).hexdigest()[:12])
    return path


def _level_summary(samples: SignedSampleSet, inst: MaxCutInstance,
                   trace: ShrinkTrace | None, out_dir: Path,
                   label: str, paths: dict[str, Path]) -> dict:
    hist = histogram_from_samples(samples, inst, trace)
    solution = solve_exact(inst)
    stats = summary_stats(hist, inst, solution.best_value)
    clamped = clamp_normalize(hist)
    csv_path = out_dir / f"histogram_{label}.csv"
    histogram_to_csv(clamped, csv_path, inst=inst, n_samples=samples.n_shots,
                     kappa=samples.kappa)
    paths[f"histogram_{label}"] = csv_path
    if samples.kappa != 1:
        signed_path = out_dir / f"histogram_{label}_signed.csv"
        histogram_to_csv(hist, signed_path, inst=inst,
                         n_samples=samples.n_shots, kappa=samples.kappa)
        paths[f"histogram_{label}_signed"] = signed_path
    return {
        "n": inst.n,
        "num_edges": inst.num_edges,
        "digest": instance_digest(inst),
        "c_star": float(solution.best_value),
        "c_star_proven": solution.proven,
        "c0": float(uniform_expectation(inst)),
        **stats,
    }


def pin_separator(shrunk: MaxCutInstance, dec: SeparatorDecomposition,
                  v: int) -> dict[str, tuple[MaxCutInstance, tuple[int, ...]]]:
    """Induced side instances with the separator vertex pinned to value v.

    Each separator edge (s, u, w) becomes a linear term on u's side: +w for
    v = 0, or -w plus a constant w for v = 1 (it is cut iff x_u differs
    from v). Constants land on side A, so for any assignment x with x_s = v,
    cut(shrunk, x) = cut(side_A, x_A) + cut(side_B, x_B) exactly.
    """
    if len(dec.S) != 1:
        raise ValueError("classical cutting needs exactly one separator vertex")
    if v not in (0, 1):
        raise ValueError("pin value must be 0 or 1")
    s = dec.S[0]
    out: dict[str, tuple[MaxCutInstance, tuple[int, ...]]] = {}
    for name, qubits in (("A", tuple(sorted(dec.A))), ("B", tuple(sorted(dec.B)))):
        local = {q: i for i, q in enumerate(qubits)}
        edges = []
        h = [shrunk.linear[q] for q in qubits]
        offset = Fraction(0)
        for a, b, w in shrunk.edges:
            if a in local and b in local:
                edges.append((local[a], local[b], w))
            elif s in (a, b):
                other = b if a == s else a
                if other in local:
                    if v == 0:
                        h[local[other]] += w
                    else:
                        h[local[other]] -= w
                        offset += w
        if name == "A":
            offset += shrunk.offset + shrunk.linear[s] * v
        out[name] = (MaxCutInstance(n=len(qubits), edges=tuple(edges),
                                    linear=tuple(h), offset=offset), qubits)
    return out


def classical_cut_run(shrunk: MaxCutInstance, dec: SeparatorDecomposition,
                      p: int, dt: float, opt_budget: int, n_samples: int,
                      seed: int = 0, noise: NoiseModel | None = None,
                      trajectory_reuse: int = 200,
                      ) -> tuple[SignedSampleSet, dict[str, QaoaParams]]:
    """Iterate over both separator assignments, run independent QAOA circuits
    on the two induced sides, and recombine the sampled bitstrings.

    Each of the four sub-instances (two sides times two pin values) trains
    its own parameters from the same schedule and budget. Pin value 0 gets
    the first n_samples // 2 shots, pin value 1 the rest.
    """
    counts = {0: n_samples // 2, 1: n_samples - n_samples // 2}
    all_bits = np.zeros((n_samples, shrunk.n), dtype=np.uint8)
    sub_params: dict[str, QaoaParams] = {}
    s = dec.S[0] if len(dec.S) == 1 else None
    row = 0
    for v in (0, 1):
        block = counts[v]
        for name, (sub, qubits) in pin_separator(shrunk, dec, v).items():
            params = train(sub, p=p, dt=dt, budget=opt_budget)
            sub_params[f"{name}{v}"] = params
            bits = sample_bitstrings(build_qaoa(sub, params), block,
                                     noise=noise,
                                     seed=stage_seed(seed, f"classical-{name}{v}"),
                                     trajectory_reuse=trajectory_reuse)
            for i, q in enumerate(qubits):
                all_bits[row:row + block, q] = bits[:, i]
        all_bits[row:row + block, s] = v
        row += block
    samples = SignedSampleSet(bits=all_bits,
                              signs=np.ones(n_samples, dtype=np.int8),
                              kappa=1, seed=seed, plan_digest="classical")
    return samples, sub_params


def run_pipeline(cfg: RunConfig) -> RunReport:
    """Execute the full procedure for one (instance, mode, noise) setting."""
    cfg.validate()
    out_dir = Path(os.environ.get(OUTPUT_DIR_ENV) or cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    paths["config"] = _write(out_dir / "config.txt", cfg.to_text())

    if cfg.instance_file:
        inst = parse_instance(Path(cfg.instance_file).read_text())
        log.info("loaded instance %s (n=%d, m=%d)", cfg.instance_file,
                 inst.n, inst.num_edges)
    else:
        inst = generate_instance(cfg.gen_n, cfg.gen_m, cfg.gen_sep, cfg.seed)
        log.info("generated instance n=%d m=%d sep=%d seed=%d",
                 cfg.gen_n, cfg.gen_m, cfg.gen_sep, cfg.seed)
    paths["instance"] = _write(out_dir / "instance.txt", format_instance(inst))

    dec = find_separator(inst, cfg.balance_fraction)
    paths["separator"] = _write(out_dir / "separator.json", dec.to_json() + "\n")
    log.info("separator |S|=%d |A|=%d |B|=%d", len(dec.S), len(dec.A), len(dec.B))

    pairs = [(dec.S[i], dec.S[j]) for i in range(len(dec.S))
             for j in range(i + 1, len(dec.S))]
    corr = estimate_correlations(inst, pairs, budget=cfg.corr_budget,
                                 backend=cfg.corr_backend, k=cfg.corr_k,
                                 seed=stage_seed(cfg.seed, "correlations"))
    corr_text = json.dumps(
        {"pairs": [[i, j, str(c)] for (i, j), c in sorted(corr.items())]},
        sort_keys=True) + "\n"
    paths["correlations"] = _write(out_dir / "correlations.json", corr_text)

    shrunk, trace = shrink_separator(inst, dec, corr)
    paths["shrunk"] = _write(out_dir / "shrunk.txt", format_instance(shrunk))
    paths["trace"] = _write(out_dir / "trace.json", trace.to_json() + "\n")
    dec_shrunk = shrunk_decomposition(dec, trace)
    paths["separator_shrunk"] = _write(out_dir / "separator_shrunk.json",
                                       dec_shrunk.to_json() + "\n")
    log.info("shrunk to n=%d (offset delta %s)", shrunk.n, trace.offset_delta)

    params = train(shrunk, p=cfg.p, dt=cfg.dt, budget=cfg.opt_budget)
    paths["params"] = _write(out_dir / "params.json", params.to_json() + "\n")

    noise = cfg.noise
    sample_seed = stage_seed(cfg.seed, "sample")
    if cfg.mode == "cut":
        plan = build_cut_plan(shrunk, dec_shrunk, params)
        samples = sample_cut_shots(plan, cfg.n_samples, noise=noise,
                                   seed=sample_seed,
                                   trajectory_reuse=cfg.trajectory_reuse)
    elif cfg.mode == "uncut":
        bits = sample_bitstrings(build_qaoa(shrunk, params), cfg.n_samples,
                                 noise=noise, seed=sample_seed,
                                 trajectory_reuse=cfg.trajectory_reuse)
        samples = SignedSampleSet(bits=bits,
                                  signs=np.ones(cfg.n_samples, dtype=np.int8),
                                  kappa=1, seed=sample_seed, plan_digest="uncut")
    else:
        samples, sub_params = classical_cut_run(
            shrunk, dec_shrunk, p=cfg.p, dt=cfg.dt, opt_budget=cfg.opt_budget,
            n_samples=cfg.n_samples, seed=cfg.seed, noise=noise,
            trajectory_reuse=cfg.trajectory_reuse)
        sub_text = json.dumps({name: json.loads(p.to_json())
                               for name, p in sorted(sub_params.items())},
                              sort_keys=True) + "\n"
        paths["classical_params"] = _write(out_dir / "classical_params.json",
                                           sub_text)
    samples.save_csv(out_dir / "samples.csv")
    paths["samples"] = out_dir / "samples.csv"
    log.info("sampled %d shots (mode %s, kappa %d)", samples.n_shots,
             cfg.mode, samples.kappa)

    summary = {
        "mode": cfg.mode,
        "noisy": cfg.noisy,
        "noise": None if noise is None else
            {"p1": noise.p1, "p2": noise.p2, "p_ro": noise.p_ro},
        "n_samples": cfg.n_samples,
        "kappa": samples.kappa,
        "seed": cfg.seed,
        "balance_fraction": cfg.balance_fraction,
        "separator_size": len(dec.S),
        "original": _level_summary(samples, inst, trace, out_dir, "original", paths),
        "shrunk": _level_summary(samples, shrunk, None, out_dir, "shrunk", paths),
    }
    paths["summary"] = _write(out_dir / "summary.json",
                              json.dumps(summary, sort_keys=True, indent=1) + "\n")
    return RunReport(out_dir=out_dir, summary=summary, paths=paths)


def compare_runs(run_dirs, out_path=None) -> list[dict]:
    """Tabulate summaries of several runs for side-by-side comparison.

    One row per run: instance size, mode, noise, percentile metrics. Rows
    whose instance digest disagrees with another run of the same size are
    flagged in the instance_match column.
    """
    summaries = []
    for d in run_dirs:
        data = json.loads((Path(d) / "summary.json").read_text())
        summaries.append(data)
    if len(summaries) < 2:
        raise ValueError("need at least two runs to compare")
    by_size: dict[int, set[str]] = {}
    for s in summaries:
        by_size.setdefault(s["original"]["n"], set()).add(s["original"]["digest"])
    rows = []
    for s in summaries:
        orig = s["original"]
        rows.append({
            "n": orig["n"],
            "mode": s["mode"],
            "noisy": s["noisy"],
            "p95_objective": orig["p95_objective"],
            "p95_r": orig["p95_r"],
            "best_r": orig["best_r"],
            "mean_r": orig["mean_r"],
            "instance_digest": orig["digest"][:12],
            "instance_match": len(by_size[orig["n"]]) == 1,
        })
    rows.sort(key=lambda r: (r["n"], r["mode"], r["noisy"]))
    if out_path is not None:
        cols = ["n", "mode", "noisy", "p95_objective", "p95_r", "best_r",
                "mean_r", "instance_digest", "instance_match"]
        lines = [",".join(cols)]
        for r in rows:
            lines.append(",".join(str(r[c]) for c in cols))
        Path(out_path).write_text("\n".join(lines) + "\n")
    return rows
