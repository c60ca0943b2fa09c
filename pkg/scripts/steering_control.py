"""Diversity control on differential steering: set-point sweep.

Runs the steering task with the diversity set-point at the task-derived
optimum 4/3 (two clusters of two agents at W2 distance 2), at a too-low and
a too-high target, plus unconstrained heterogeneous and index-free
homogeneous baselines.  The optimum target should win on reward and its
final matrix should show the two-cluster block structure.
"""

import argparse
import sys
from pathlib import Path

import yaml

from sndlab.cli import main as cli_main
from sndlab.control import optimal_snd_for_clusters


def build_config(seeds, iterations, name="steering-control"):
    optimum = round(optimal_snd_for_clusters(2.0, 4, 2), 4)
    control = {"mode": "equality", "weight": 3.5, "warmup_fraction": 0.1, "gradient_steps": 2}
    return {
        "name": name,
        "task": {"id": "differential_steering", "n": 4, "horizon": 50},
        "policy": {"mode": "heterogeneous", "hidden": [32, 32], "mean_bound": 1.25},
        "trainer": {
            "iterations": iterations,
            "episodes_per_iteration": 20,
            "eval_episodes": 10,
            "learning_rate": 6e-4,
        },
        "seeds": list(seeds),
        "variants": [
            {"name": "target-optimal", "overrides": {"control": {**control, "target": optimum}}},
            {"name": "target-low", "overrides": {"control": {**control, "target": 0.5}}},
            {"name": "target-high", "overrides": {"control": {**control, "target": 2.0}}},
            {"name": "unconstrained", "overrides": {}},
            {"name": "homogeneous", "overrides": {"policy": {"mode": "homogeneous"}}},
        ],
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/steering-control")
    parser.add_argument("--seeds", default="0,1,2")
    parser.add_argument("--iterations", type=int, default=260)
    parser.add_argument("--parallel", type=int, default=1)
    args = parser.parse_args(argv)

    seeds = [int(s) for s in args.seeds.split(",")]
    config = build_config(seeds, args.iterations)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.yaml"
    cfg_path.write_text(yaml.safe_dump(config, sort_keys=False))
    return cli_main(
        ["train", "--config", str(cfg_path), "--out", str(out), "--parallel", str(args.parallel)]
    )


if __name__ == "__main__":
    sys.exit(main())
