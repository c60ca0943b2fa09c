"""Redundancy table: SND and HSE as team size grows at a fixed two goals.

With the goal count pinned to two behavioral clusters, adding agents makes
behaviors redundant: the mean pairwise diversity falls toward the two-cluster
closed form x * n / (2(n-1)) while HSE stays put (or creeps up).
"""

import argparse
import sys
from pathlib import Path

import numpy as np

import sndlab as sl
from sndlab.policies import PolicySet, PolicyShape


def run_team_size(n, seeds, iterations):
    import dataclasses

    assignment = [0] * (n // 2) + [1] * (n - n // 2)
    finals = {"snd": [], "hse": []}
    cfg = sl.TrainerConfig(
        iterations=iterations, episodes_per_iteration=20, eval_episodes=10, learning_rate=6e-4
    )
    for seed in seeds:
        env = sl.goal_navigation_env(n, assignment, horizon=50)
        shape = PolicyShape(env.obs_dim, env.action_dim, mean_bound=env.max_speed)
        policies = PolicySet.initialize("heterogeneous", n, shape, seed=seed)
        log = sl.train(env, policies, dataclasses.replace(cfg, seed=seed))
        window = log.records[-min(50, iterations) :]
        finals["snd"].append(np.mean([r.snd for r in window]))
        finals["hse"].append(np.mean([r.hse for r in window]))
    return {k: (float(np.mean(v)), float(np.std(v))) for k, v in finals.items()}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/redundancy-table")
    parser.add_argument("--sizes", default="2,4,6,8")
    parser.add_argument("--seeds", default="0,1,2")
    parser.add_argument("--iterations", type=int, default=250)
    args = parser.parse_args(argv)

    sizes = [int(s) for s in args.sizes.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    lines = ["n,snd_mean,snd_std,hse_mean,hse_std"]
    for n in sizes:
        row = run_team_size(n, seeds, args.iterations)
        lines.append(
            f"{n},{row['snd'][0]!r},{row['snd'][1]!r},{row['hse'][0]!r},{row['hse'][1]!r}"
        )
        print(lines[-1])
    (out / "table.csv").write_text("\n".join(lines) + "\n")
    print(f"table written to {out / 'table.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
