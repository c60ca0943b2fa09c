"""Goal-navigation diversity sweep: SND vs number of shared goals.

Trains heterogeneous teams of four agents with 4/3/2/1 distinct goals and
writes per-variant training curves plus final distance matrices.  With fewer
distinct goals more agents share a goal and the measured diversity drops,
approaching zero when all agents share one goal.
"""

import argparse
import sys
from pathlib import Path

import yaml

from sndlab.cli import main as cli_main

ASSIGNMENTS = {
    "goals4": [0, 1, 2, 3],
    "goals3": [0, 0, 1, 2],
    "goals2": [0, 0, 0, 1],
    "goals1": [0, 0, 0, 0],
}


def build_config(seeds, iterations, name="goal-diversity"):
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
        "seeds": list(seeds),
        "variants": [
            {"name": vname, "overrides": {"task": {"goal_assignment": assign}}}
            for vname, assign in ASSIGNMENTS.items()
        ],
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/goal-diversity")
    parser.add_argument("--seeds", default="0,1,2")
    parser.add_argument("--iterations", type=int, default=150)
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
