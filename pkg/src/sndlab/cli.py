"""Experiment runner and metric toolbox.

Subcommands:

* ``train``       -- run a config's variants x seeds, writing per-seed logs,
                     distance matrices, checkpoints and aggregated curves.
* ``metrics``     -- print {snd, hse, contributions, n, batch_size} for a
                     serialized matrix, or for a checkpoint evaluated on a
                     fresh batch.
* ``sweep-noise`` -- observation-noise robustness sweep of one or two
                     checkpoints, with per-delta Welch p-values for a pair.
* ``aggregate``   -- recompute mean/std curves from per-seed log.csv files.

Every output file embeds the resolved config and seed in a provenance
header, outputs carry no timestamps, and re-running an identical config
overwrites files byte-identically.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import noise_robustness_sweep
from .config import (
    ExperimentConfig,
    apply_variant,
    build_environment,
    build_policies,
    build_trainer_config,
    load_config,
)
from .distance import BehavioralDistanceMatrix, agent_contributions, collect_batch, distance_matrix
from .metrics import hse, snd
from .policies import PolicySet
from .seeding import derive_seed
from .training import train

OUT_ROOT_ENV = "SNDLAB_OUT_ROOT"


def _resolve_out_dir(config: ExperimentConfig, cli_out: str | None) -> Path:
    if cli_out is not None:
        return Path(cli_out)
    if config.out_dir is not None:
        return Path(config.out_dir)
    return Path(os.environ.get(OUT_ROOT_ENV, "runs")) / config.name


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _run_seed_job(config_dict: dict, variant_name: str | None, seed: int, out_dir: str) -> dict:
    """One training run; module-level so seed jobs can run in parallel processes."""
    config = ExperimentConfig.from_dict(config_dict)
    env = build_environment(config.task, seed=derive_seed(seed, "env"))
    policies = build_policies(config, env, seed)
    trainer_config = build_trainer_config(config, seed)
    seed_dir = Path(out_dir) / f"seed_{seed}"
    seed_dir.mkdir(parents=True, exist_ok=True)
    log = train(env, policies, trainer_config, checkpoint_dir=seed_dir)

    provenance = {"config": config_dict, "seed": seed, "variant": variant_name}
    log.to_csv(seed_dir / "log.csv", provenance=provenance)
    _write_json(seed_dir / "log.json", log.to_json_dict(provenance=provenance))
    policies.save(seed_dir / "checkpoint.json")
    if log.final_matrix is not None:
        log.final_matrix.save_csv(seed_dir / "matrix.csv", provenance=provenance)
        log.final_matrix.save_json(seed_dir / "matrix.json")
    last = log.records[-1]
    summary = {
        "config": config_dict,
        "variant": variant_name,
        "seed": seed,
        "iterations": len(log),
        "final_reward_mean": last.reward_mean,
        "final_snd": last.snd,
        "final_hse": last.hse,
        "final_contributions": list(last.contributions) if last.contributions else None,
    }
    _write_json(seed_dir / "summary.json", summary)
    return summary


def _aggregate_log_csvs(paths: list[Path], out_path: Path) -> None:
    """Pointwise mean/std across per-seed log.csv files, written as one CSV."""
    tables = []
    header = None
    for path in paths:
        with open(path) as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
        cols = lines[0].strip().split(",")
        if header is None:
            header = cols
        elif cols != header:
            raise ValueError(f"{path}: log columns disagree with the first file")
        data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
        tables.append(data)
    if len({t.shape for t in tables}) != 1:
        raise ValueError("per-seed logs have mismatched shapes")
    stacked = np.stack(tables)
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0, ddof=1) if len(tables) > 1 else np.zeros_like(mean)
    out_cols = ["iteration"]
    for name in header[1:]:
        out_cols += [f"{name}_mean", f"{name}_std"]
    with open(out_path, "w") as fh:
        fh.write("# aggregated over " + ",".join(p.parent.name for p in paths) + "\n")
        fh.write(",".join(out_cols) + "\n")
        for row_mean, row_std in zip(mean, std):
            cells = [repr(float(row_mean[0]))]
            for j in range(1, len(header)):
                cells += [repr(float(row_mean[j])), repr(float(row_std[j]))]
            fh.write(",".join(cells) + "\n")


def cmd_train(args) -> int:
    config = load_config(args.config)
    if args.seeds is not None:
        seeds = tuple(int(s) for s in args.seeds.split(","))
    else:
        seeds = config.seeds
    out_root = _resolve_out_dir(config, args.out)
    variants = config.variants or (None,)

    jobs = []
    for variant in variants:
        if variant is None:
            resolved, vname, vdir = config, None, out_root
        else:
            resolved, vname, vdir = apply_variant(config, variant), variant.name, out_root / variant.name
        resolved_dict = resolved.to_dict()
        resolved_dict.pop("variants", None)
        for seed in seeds:
            jobs.append((resolved_dict, vname, seed, str(vdir)))

    if args.parallel > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.parallel) as pool:
            summaries = list(pool.map(_run_seed_job, *zip(*jobs)))
    else:
        summaries = [_run_seed_job(*job) for job in jobs]

    for variant in variants:
        vname = variant.name if variant is not None else None
        vdir = out_root / vname if vname else out_root
        paths = [vdir / f"seed_{s}" / "log.csv" for s in seeds]
        _aggregate_log_csvs(paths, vdir / "aggregate.csv")

    table = [
        {k: s[k] for k in ("variant", "seed", "final_reward_mean", "final_snd", "final_hse")}
        for s in summaries
    ]
    _write_json(out_root / "summary.json", {"config": config.to_dict(), "runs": table})
    for row in table:
        label = row["variant"] or "base"
        print(
            f"{label} seed={row['seed']}: reward={row['final_reward_mean']:.4f} "
            f"snd={row['final_snd']:.4f} hse={row['final_hse']:.4f}"
        )
    print(f"outputs written to {out_root}")
    return 0


def _load_matrix(path: Path) -> BehavioralDistanceMatrix:
    if path.suffix == ".json":
        return BehavioralDistanceMatrix.load_json(path)
    return BehavioralDistanceMatrix.load_csv(path)


def cmd_metrics(args) -> int:
    if args.matrix is not None:
        D = _load_matrix(Path(args.matrix))
    else:
        if args.checkpoint is None or args.config is None:
            raise ValueError("metrics needs either --matrix or both --checkpoint and --config")
        config = load_config(args.config)
        policies = PolicySet.load(args.checkpoint)
        env = build_environment(config.task, seed=derive_seed(args.seed, "env"))
        batch = collect_batch(env, policies, args.episodes, seed=args.seed)
        D = distance_matrix(policies, batch, kind=config.trainer.distance_kind)
    payload = {
        "n": D.n,
        "batch_size": D.batch_size,
        "snd": snd(D),
        "hse": hse(D),
        "contributions": [float(c) for c in agent_contributions(D)],
    }
    print(json.dumps(payload, sort_keys=True, indent=1))
    return 0


def _parse_deltas(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError("delta spec must look like start:stop:count, e.g. 0:2:10")
    start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    if start < 0.0 or stop < start or count < 1:
        raise ValueError(f"invalid delta spec {spec!r}: bounds must be non-negative and ordered")
    return np.linspace(start, stop, count)


def cmd_sweep_noise(args) -> int:
    config = load_config(args.config)
    deltas = _parse_deltas(args.deltas)
    policies = PolicySet.load(args.checkpoint)
    baseline = PolicySet.load(args.checkpoint_b) if args.checkpoint_b else None
    env = build_environment(config.task, seed=derive_seed(args.seed, "env"))
    rows = noise_robustness_sweep(
        policies, env, deltas, episodes=args.episodes, seed=args.seed, baseline=baseline
    )
    header = "delta,reward_mean,reward_std" + (",p_value" if baseline is not None else "")
    lines = [header]
    for row in rows:
        cells = [repr(row.delta), repr(row.reward_mean), repr(row.reward_std)]
        if baseline is not None:
            cells.append(repr(row.p_value))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if args.out is not None:
        provenance = {"config": config.to_dict(), "seed": args.seed, "deltas": args.deltas}
        with open(args.out, "w") as fh:
            fh.write("# " + json.dumps(provenance, sort_keys=True) + "\n")
            fh.write(text)
        print(f"sweep written to {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_aggregate(args) -> int:
    run_dir = Path(args.run_dir)
    paths = sorted(run_dir.glob("seed_*/log.csv"))
    if not paths:
        raise ValueError(f"no seed_*/log.csv files under {run_dir}")
    out = Path(args.out) if args.out else run_dir / "aggregate.csv"
    _aggregate_log_csvs(paths, out)
    print(f"aggregated {len(paths)} logs into {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sndlab", description="behavioral-diversity experiments and metrics"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run a training config (variants x seeds)")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--out", default=None, help="output directory (overrides config)")
    p_train.add_argument("--seeds", default=None, help="comma-separated seed override")
    p_train.add_argument("--parallel", type=int, default=1, help="parallel seed jobs")
    p_train.set_defaults(func=cmd_train)

    p_metrics = sub.add_parser("metrics", help="SND/HSE/contributions of a distance matrix")
    p_metrics.add_argument("--matrix", default=None, help="matrix .csv or .json")
    p_metrics.add_argument("--checkpoint", default=None, help="policy checkpoint instead")
    p_metrics.add_argument("--config", default=None, help="env config for fresh measurement")
    p_metrics.add_argument("--episodes", type=int, default=10)
    p_metrics.add_argument("--seed", type=int, default=0)
    p_metrics.set_defaults(func=cmd_metrics)

    p_sweep = sub.add_parser("sweep-noise", help="observation-noise robustness sweep")
    p_sweep.add_argument("--checkpoint", required=True)
    p_sweep.add_argument("--checkpoint-b", default=None, help="second checkpoint for Welch p-values")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--deltas", default="0:2:10", help="start:stop:count grid")
    p_sweep.add_argument("--episodes", type=int, default=50)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--out", default=None, help="CSV output path (stdout if omitted)")
    p_sweep.set_defaults(func=cmd_sweep_noise)

    p_agg = sub.add_parser("aggregate", help="aggregate per-seed logs into mean/std curves")
    p_agg.add_argument("--run-dir", required=True)
    p_agg.add_argument("--out", default=None)
    p_agg.set_defaults(func=cmd_aggregate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
