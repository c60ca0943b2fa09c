"""Deployment-noise robustness of frozen homogeneous vs heterogeneous policies.

Trains both modes on goal navigation (two agents sharing observations of two
goals), freezes the learned policies, then evaluates each under uniform
observation noise U(-delta, delta) over a 10-point grid in [0, 2] with a
Welch p-value per delta comparing the two reward samples.
"""

import argparse
import sys
from pathlib import Path

import yaml

from sndlab.cli import main as cli_main


def build_config(seed, iterations, name="noise-robustness"):
    return {
        "name": name,
        "task": {"id": "goal_navigation", "n": 4, "horizon": 50, "goal_assignment": [0, 1, 2, 3]},
        "policy": {"mode": "heterogeneous", "hidden": [32, 32], "mean_bound": 1.0},
        "trainer": {
            "iterations": iterations,
            "episodes_per_iteration": 20,
            "eval_episodes": 10,
            "learning_rate": 6e-4,
        },
        "seeds": [seed],
        "variants": [
            {"name": "heterogeneous", "overrides": {}},
            {"name": "homogeneous", "overrides": {"policy": {"mode": "homogeneous"}}},
        ],
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/noise-robustness")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--iterations", type=int, default=150)
    parser.add_argument("--episodes", type=int, default=50)
    parser.add_argument("--deltas", default="0:2:10")
    args = parser.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = build_config(args.seed, args.iterations)
    cfg_path = out / "config.yaml"
    cfg_path.write_text(yaml.safe_dump(config, sort_keys=False))
    code = cli_main(["train", "--config", str(cfg_path), "--out", str(out)])
    if code != 0:
        return code
    het = out / "heterogeneous" / f"seed_{args.seed}" / "checkpoint.json"
    hom = out / "homogeneous" / f"seed_{args.seed}" / "checkpoint.json"
    return cli_main(
        [
            "sweep-noise",
            "--checkpoint", str(het),
            "--checkpoint-b", str(hom),
            "--config", str(cfg_path),
            "--deltas", args.deltas,
            "--episodes", str(args.episodes),
            "--seed", str(args.seed),
            "--out", str(out / "sweep.csv"),
        ]
    )


if __name__ == "__main__":
    sys.exit(main())
