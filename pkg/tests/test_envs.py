import numpy as np
import pytest

from sndlab.distance import collect_batch
from sndlab.envs import (
    WindSchedule,
    differential_steering_env,
    flocking_wind_env,
    goal_navigation_env,
    wrap_angle,
)
from sndlab.policies import PolicySet, PolicyShape


def random_policies(env, seed=0, mode="heterogeneous"):
    shape = PolicyShape(env.obs_dim, env.action_dim, hidden=(8, 8))
    return PolicySet.initialize(mode, env.n_agents, shape, seed=seed)


class TestWindSchedule:
    def test_lookup(self):
        ws = WindSchedule(((0, 10, 0.0), (10, 30, 0.5), (30, 40, 0.0)))
        assert ws.magnitude_at(0) == 0.0
        assert ws.magnitude_at(10) == 0.5
        assert ws.magnitude_at(29) == 0.5
        assert ws.magnitude_at(30) == 0.0
        assert ws.magnitude_at(99) == 0.0

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            WindSchedule(((0, 10, 0.0), (5, 20, 1.0)))

    def test_negative_magnitude_rejected(self):
        with pytest.raises(ValueError):
            WindSchedule(((0, 10, -1.0),))


class TestGoalNavigation:
    def test_observation_shape(self):
        env = goal_navigation_env(4, [0, 1, 2, 3], horizon=5)
        obs = env.reset_batch(3, np.random.default_rng(0))
        assert obs.shape == (3, 4, env.obs_dim)
        assert env.obs_dim == 2 * 4 + 2

    def test_determinism(self):
        env = goal_navigation_env(3, [0, 1, 1], horizon=10)
        ps = random_policies(env)
        b1 = collect_batch(env, ps, 4, seed=5)
        b2 = collect_batch(env, ps, 4, seed=5)
        assert np.array_equal(b1.observations, b2.observations)
        assert np.array_equal(b1.actions, b2.actions)
        assert np.array_equal(b1.rewards, b2.rewards)

    def test_stationary_agent_zero_reward(self):
        env = goal_navigation_env(2, [0, 1], horizon=5)
        env.reset_batch(2, np.random.default_rng(1))
        for _ in range(5):
            _, rew = env.step_batch(np.zeros((2, 2, 2)))
            assert np.all(rew == 0.0)

    def test_reward_telescopes(self):
        env = goal_navigation_env(3, [0, 1, 2], horizon=20)
        ps = random_policies(env, seed=2)
        env2 = goal_navigation_env(3, [0, 1, 2], horizon=20)
        rng = np.random.default_rng(3)
        obs = env2.reset_batch(4, rng)
        initial = env2._goal_distances().copy()
        total = np.zeros((4, 3))
        act_rng = np.random.default_rng(4)
        for _ in range(20):
            actions = np.empty((4, 3, 2))
            for a in range(3):
                means, stds = ps.evaluate_batch(a, obs[:, a, :])
                actions[:, a, :] = means + stds * act_rng.standard_normal(means.shape)
            obs, rew = env2.step_batch(actions)
            total += rew
        final = env2._goal_distances()
        assert np.allclose(total, initial - final, atol=1e-9)

    def test_goal_separation(self):
        env = goal_navigation_env(4, [0, 1, 2, 3], horizon=5)
        env.reset_batch(50, np.random.default_rng(0))
        d = np.linalg.norm(env.goals[:, :, None, :] - env.goals[:, None, :, :], axis=-1)
        iu = np.triu_indices(4, k=1)
        assert np.all(d[:, iu[0], iu[1]] >= env.min_goal_separation)

    def test_invalid_assignment_rejected(self):
        with pytest.raises(ValueError):
            goal_navigation_env(3, [0, 2, 2], horizon=5)  # goal 1 unused
        with pytest.raises(ValueError):
            goal_navigation_env(3, [0, 1], horizon=5)  # wrong length


class TestDifferentialSteering:
    def test_odd_agent_count_rejected(self):
        with pytest.raises(ValueError):
            differential_steering_env(3)

    def test_sides_cancel_for_equal_actions(self):
        env = differential_steering_env(4, horizon=5)
        env.reset_batch(3, np.random.default_rng(0))
        theta_before = env.theta.copy()
        env.step_batch(np.ones((3, 4, 1)))
        assert np.allclose(env.theta, theta_before)

    def test_opposed_sides_rotate_fastest(self):
        env = differential_steering_env(4, horizon=5)
        env.reset_batch(1, np.random.default_rng(0))
        theta_before = env.theta.copy()
        actions = np.concatenate([np.ones((1, 2, 1)), -np.ones((1, 2, 1))], axis=1)
        env.step_batch(actions)
        delta = wrap_angle(env.theta - theta_before)
        assert delta[0] == pytest.approx(env.turn_rate * 4 * env.dt)

    def test_action_negation_flips_rotation(self):
        rng_state = np.random.default_rng(7)
        env = differential_steering_env(4, horizon=5)
        env.reset_batch(2, rng_state)
        theta0 = env.theta.copy()
        actions = np.random.default_rng(1).uniform(-1, 1, size=(2, 4, 1))
        env.step_batch(actions)
        d_pos = wrap_angle(env.theta - theta0)

        env2 = differential_steering_env(4, horizon=5)
        env2.reset_batch(2, np.random.default_rng(7))
        env2.step_batch(-actions)
        d_neg = wrap_angle(env2.theta - theta0)
        assert np.allclose(d_pos, -d_neg)

    def test_observation_is_shared(self):
        env = differential_steering_env(4, horizon=5)
        obs = env.reset_batch(3, np.random.default_rng(0))
        assert obs.shape == (3, 4, 2)
        for a in range(1, 4):
            assert np.array_equal(obs[:, a, :], obs[:, 0, :])

    def test_desired_orientation_resampled_on_reach(self):
        env = differential_steering_env(2, horizon=5)
        env.reset_batch(1, np.random.default_rng(0))
        env.theta_des = env.theta + 0.04  # within reach threshold after a no-op step
        env._prev_abs_err = np.abs(wrap_angle(env.theta_des - env.theta))
        old_des = env.theta_des.copy()
        env.step_batch(np.zeros((1, 2, 1)))
        assert env.theta_des[0] != old_des[0]


class TestFlockingWind:
    def test_two_agents_fixed(self):
        env = flocking_wind_env(horizon=5)
        assert env.n_agents == 2

    def test_spawn_geometry(self):
        env = flocking_wind_env(horizon=5)
        env.reset_batch(200, np.random.default_rng(0))
        spacing = np.linalg.norm(env.pos[:, 0] - env.pos[:, 1], axis=-1)
        assert np.allclose(spacing, 1.0)
        rel = env.pos[:, 0] - env.pos[:, 1]
        angle = np.arctan2(rel[:, 1], rel[:, 0])
        folded = np.abs(wrap_angle(np.where(np.abs(angle) > np.pi / 2, angle + np.pi, angle)))
        assert np.all(folded <= np.pi / 8 + 1e-9)

    def test_wind_reward_term_zero_without_wind(self):
        env = flocking_wind_env(horizon=5, wind=0.0)
        env.reset_batch(4, np.random.default_rng(0))
        env_w = flocking_wind_env(horizon=5, wind=0.0)
        env_w.reset_batch(4, np.random.default_rng(0))
        actions = np.random.default_rng(1).uniform(-1, 1, size=(4, 2, 2))
        _, r1 = env.step_batch(actions)
        _, r2 = env_w.step_batch(actions)
        assert np.array_equal(r1, r2)

    def test_shielding_factor_range_and_alignment(self):
        env = flocking_wind_env(horizon=5, wind=1.0)
        env.reset_batch(1, np.random.default_rng(0))
        # circular agent directly downwind (south of) triangular -> factor 0
        env.pos = np.array([[[0.0, 0.5], [0.0, -0.5]]])
        assert env.shielding_factor()[0] == pytest.approx(0.0)
        # horizontal formation -> full wind on both
        env.pos = np.array([[[-0.5, 0.0], [0.5, 0.0]]])
        assert env.shielding_factor()[0] == pytest.approx(1.0)
        # circular agent in front (north) -> not behind, factor 1
        env.pos = np.array([[[0.0, -0.5], [0.0, 0.5]]])
        assert env.shielding_factor()[0] == pytest.approx(1.0)

    def test_horizontal_formation_worst_case_reward(self):
        env = flocking_wind_env(horizon=5, wind=1.0)
        env.reset_batch(1, np.random.default_rng(0))
        env.pos = np.array([[[-0.5, 0.0], [0.5, 0.0]]])
        env._prev_error = env._tracking_error()
        _, r_horizontal = env.step_batch(np.zeros((1, 2, 2)))

        env2 = flocking_wind_env(horizon=5, wind=1.0)
        env2.reset_batch(1, np.random.default_rng(0))
        env2.pos = np.array([[[0.0, 0.5], [0.0, -0.5]]])
        env2._prev_error = env2._tracking_error()
        _, r_aligned = env2.step_batch(np.zeros((1, 2, 2)))
        assert r_aligned[0, 0] > r_horizontal[0, 0]

    def test_set_wind_validation(self):
        env = flocking_wind_env(horizon=5)
        with pytest.raises(ValueError):
            env.set_wind(-0.5)

    def test_determinism(self):
        env = flocking_wind_env(horizon=8, wind=0.7)
        ps = random_policies(env)
        b1 = collect_batch(env, ps, 3, seed=9)
        b2 = collect_batch(env, ps, 3, seed=9)
        assert np.array_equal(b1.rewards, b2.rewards)


class TestTrajectoryDump:
    def test_csv_schema(self, tmp_path):
        from sndlab.envs import write_trajectory_csv

        env = goal_navigation_env(2, [0, 1], horizon=12)
        ps = random_policies(env)
        path = tmp_path / "traj.csv"
        write_trajectory_csv(env, ps, seed=4, path=path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,agent,x,y,vx,vy,reward"
        assert len(lines) == 1 + 12 * 2
        first = lines[1].split(",")
        assert first[0] == "0" and first[1] == "0"
        assert len(first) == 7
