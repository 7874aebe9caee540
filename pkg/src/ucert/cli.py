"""Batch experiment driver: error-probability curves, certification runs,
sample dumps and bound reports, exposed as the ``ucert`` command.

Subcommands: fig5_curves (closed-form error curves for a batch of
arc-confined CUE channels), certify (run the incoherent test on one sampled
channel), sample (dump eigenangle samples), bounds (JSON bound report) and
qsvt_demo (solve deamplification phases and estimate the one-shot error).

Configuration comes from an optional JSON file plus flags; flags win.  The
master seed falls back to the UCERT_SEED environment variable, then to 0.
Channel k draws its randomness from a stream derived from (seed, k), so
outputs are byte-stable and independent of scheduling.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import bounds, certify, ensembles, qsvt

CURVES_HEADER = ["d", "epsilon", "channel_index", "trace_abs", "pass_prob", "N", "p_error"]
SUMMARY_HEADER = ["d", "epsilon", "channel_index", "trace_abs", "N_star"]

EXPERIMENTS = ("fig5_curves", "certify", "sample", "bounds", "qsvt_demo")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "fig5_curves"
    d: int = 4
    epsilon: float = 0.01
    channels: int = 200
    grid_start: float = 1e2
    grid_stop: float = 1e7
    grid_points: int = 60
    seed: int = 0
    queries: int = 100
    target: float = 1.0 / 3.0
    kind: str = "eps_cue"
    samples: int = 100
    sampler: ensembles.SamplerConfig = field(default_factory=ensembles.SamplerConfig)
    out_dir: str = "."

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.grid_start < 1 or self.grid_points < 2:
            raise ValueError("grid must start at N >= 1 and hold at least two points")
        if self.channels < 1:
            raise ValueError("need at least one channel")


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_csv(path, header, rows) -> None:
    """Plain CSV, LF newlines, floats at 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def query_grid(config: ExperimentConfig) -> np.ndarray:
    """Geometric grid of integer query counts."""
    g = np.geomspace(config.grid_start, config.grid_stop, config.grid_points)
    return np.unique(np.rint(g).astype(np.int64))


def channel_seed(master: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=(index,))


def run_fig5(config: ExperimentConfig):
    """Closed-form error curves for a batch of arc-confined CUE channels.

    Writes fig5_curves_*.csv (one row per channel per grid point) and
    fig5_summary_*.csv with each channel's N* = queries to reach the target
    miss probability.  Returns the two paths.
    """
    eps = ensembles.PerturbationParams(config.epsilon)
    seeds = [channel_seed(config.seed, k) for k in range(config.channels)]
    angle_sets = ensembles.eps_cue_eigenangles_batch(config.d, eps, seeds, config.sampler)
    Ns = query_grid(config)
    curves_rows = []
    summary_rows = []
    for k, angles in enumerate(angle_sets):
        trace_abs = float(np.abs(np.exp(1j * angles.angles).sum()))
        p = certify.pass_probability_from_angles(angles.angles, config.d)
        with np.errstate(divide="ignore"):
            perr = np.exp(Ns * math.log(p)) if p > 0 else np.zeros_like(Ns, dtype=float)
        for N, pe in zip(Ns, perr):
            curves_rows.append([config.d, config.epsilon, k, trace_abs, p, int(N), float(pe)])
        n_star = math.ceil(math.log(config.target) / math.log(p)) if p < 1.0 else -1
        summary_rows.append([config.d, config.epsilon, k, trace_abs, n_star])
    tag = f"d{config.d}_eps{config.epsilon:g}"
    curves_path = os.path.join(config.out_dir, f"fig5_curves_{tag}.csv")
    summary_path = os.path.join(config.out_dir, f"fig5_summary_{tag}.csv")
    write_csv(curves_path, CURVES_HEADER, curves_rows)
    write_csv(summary_path, SUMMARY_HEADER, summary_rows)
    return curves_path, summary_path


def run_certify(config: ExperimentConfig) -> dict:
    """Sample one channel and run the incoherent random-state test on it."""
    eps = ensembles.PerturbationParams(config.epsilon)
    rng = np.random.default_rng(channel_seed(config.seed, 0))
    if config.kind == "identity":
        U = np.eye(config.d, dtype=complex)
    elif config.kind == "single_basis":
        U = ensembles.single_basis_rotation(config.d, eps, ensembles.haar_state(config.d, rng))
    else:
        U = ensembles.eps_cue_unitary(config.d, eps, config.sampler, rng)
    decision = certify.simulate_incoherent(U, config.queries, rng)
    return {
        "experiment": "certify",
        "kind": config.kind,
        "d": config.d,
        "epsilon": config.epsilon,
        "queries": config.queries,
        "verdict": decision.verdict,
        "queries_used": decision.queries_used,
        "diamond_distance": certify.diamond_distance_to_identity(U),
        "pass_prob": certify.per_query_pass_probability(U),
    }


def run_sample(config: ExperimentConfig) -> str:
    """Dump eigenangle samples for one ensemble to CSV."""
    eps = ensembles.PerturbationParams(config.epsilon)
    rng = np.random.default_rng(channel_seed(config.seed, 0))
    if config.kind == "eps_uniform":
        samples = ensembles.eps_uniform_eigenangles_many(config.d, eps, config.samples, rng)
    elif config.kind == "eps_cue":
        samples = ensembles.eps_cue_eigenangles_many(config.d, eps, config.samples, config.sampler, rng)
    else:
        raise ValueError(f"unknown sample kind {config.kind!r}")
    path = os.path.join(
        config.out_dir, f"samples_{config.kind}_d{config.d}_eps{config.epsilon:g}.csv"
    )
    ensembles.write_angle_csv(path, config.kind, config.d, config.epsilon, config.seed, samples)
    return path


def run_bounds(config: ExperimentConfig) -> str:
    s = bounds.s_of_eps(config.epsilon)
    report = bounds.tvd_upper(s, config.d, config.queries)
    return report.to_json()


def run_qsvt_demo(config: ExperimentConfig) -> dict:
    """Build a deamplification plan, solve phases if tractable, estimate errors."""
    plan = qsvt.qsvt_params(config.d, config.epsilon)
    rng = np.random.default_rng(channel_seed(config.seed, 0))
    eps = ensembles.PerturbationParams(config.epsilon)
    U = ensembles.eps_cue_unitary(config.d, eps, config.sampler, rng)
    out = {
        "experiment": "qsvt_demo",
        "d": config.d,
        "epsilon": config.epsilon,
        "delta": plan.delta,
        "cap_delta": plan.cap_delta,
        "degree": plan.degree,
    }
    if plan.degree <= qsvt.PHASE_SOLVER_MAX_DEGREE:
        qsvt.solve_qsp_phases(plan)
        phase_path = os.path.join(
            config.out_dir, f"qsp_phases_d{config.d}_eps{config.epsilon:g}.csv"
        )
        qsvt.write_phases_csv(phase_path, plan.phases)
        out["phases_csv"] = phase_path
        out["solver_residual"] = plan.solver_residual
    est = qsvt.coherent_error_probability(U, plan, trials=config.samples, rng=rng)
    out["h1_error_mean"] = est.mean
    out["h1_error_stderr"] = est.stderr
    out["trials"] = est.trials
    return out


def load_config(args) -> ExperimentConfig:
    base: dict = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    sampler_kwargs = base.pop("sampler", {})
    base.setdefault("experiment", args.experiment)
    cfg = ExperimentConfig(**base, sampler=ensembles.SamplerConfig(**sampler_kwargs))
    cfg = replace(cfg, experiment=args.experiment)
    overrides = {}
    for name in ("d", "epsilon", "channels", "seed", "queries", "kind", "samples"):
        val = getattr(args, name, None)
        if val is not None:
            overrides[name] = val
    if args.out is not None:
        overrides["out_dir"] = args.out
    if getattr(args, "seed", None) is None and "seed" not in base:
        env = os.environ.get("UCERT_SEED")
        if env is not None:
            overrides["seed"] = int(env)
    return replace(cfg, **overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ucert", description="unitary-channel certification experiments"
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None, help="JSON config file")
        p.add_argument("--d", type=int, default=None)
        p.add_argument("--epsilon", type=float, default=None)
        p.add_argument("--channels", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument("--queries", type=int, default=None, help="query count N")
        p.add_argument("--samples", type=int, default=None, help="samples / trials")
        p.add_argument(
            "--kind", type=str, default=None,
            help="channel or ensemble kind (eps_cue, eps_uniform, single_basis, identity)",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
    except (ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(config.out_dir, exist_ok=True)
    if config.experiment == "fig5_curves":
        curves, summary = run_fig5(config)
        print(json.dumps({"curves": curves, "summary": summary}))
    elif config.experiment == "certify":
        print(json.dumps(run_certify(config)))
    elif config.experiment == "sample":
        print(json.dumps({"samples": run_sample(config)}))
    elif config.experiment == "bounds":
        print(run_bounds(config))
    elif config.experiment == "qsvt_demo":
        print(json.dumps(run_qsvt_demo(config)))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
