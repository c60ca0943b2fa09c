"""Deterministic, seedable 2D multi-agent tasks, vectorized over episodes.

All environments share the same conventions: fixed horizon, timestep
``dt = 0.1`` s, a square 2 m workspace, and velocity-controlled point-mass
agents (the action is a desired velocity applied with a first-order lag).
State arrays carry a leading episode axis so a whole batch of episodes is
stepped together; one environment instance is single-threaded and parallel
collection uses independently seeded instances.

Tasks:

* ``goal_navigation_env`` -- each agent is assigned one of several goals and
  is rewarded by the per-step reduction of the distance to its own goal.
* ``differential_steering_env`` -- agents apply 1D forces that torque a boat
  toward a desired orientation; force signs are flipped between the two
  (unobservable) sides, so index-free homogeneous policies produce zero net
  torque.
* ``flocking_wind_env`` -- two physically different agents track a northward
  reference velocity at 1 m spacing; a schedulable southbound wind can be
  partially shielded by hiding the circular agent downwind of the triangular
  one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DT = 0.1
WORKSPACE_HALF = 1.0  # square workspace of side 2 m


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def wrap_angle(theta: np.ndarray) -> np.ndarray:
    """Wrap angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - theta, 2.0 * np.pi)


@dataclass(frozen=True)
class WindSchedule:
    """Piecewise-constant wind magnitude over training iterations.

    ``phases`` are ``(start, end, magnitude)`` with end exclusive; intervals
    must be sorted and non-overlapping.  Iterations not covered by any phase
    have zero wind.
    """

    phases: tuple[tuple[int, int, float], ...]

    def __post_init__(self) -> None:
        phases = tuple((int(s), int(e), float(m)) for s, e, m in self.phases)
        prev_end = None
        for start, end, mag in phases:
            if end <= start:
                raise ValueError(f"empty or inverted interval [{start}, {end})")
            if mag < 0.0:
                raise ValueError("wind magnitude must be non-negative")
            if prev_end is not None and start < prev_end:
                raise ValueError("wind phases must be sorted and non-overlapping")
            prev_end = end
        object.__setattr__(self, "phases", phases)

    def magnitude_at(self, iteration: int) -> float:
        for start, end, mag in self.phases:
            if start <= iteration < end:
                return mag
        return 0.0

    @property
    def end(self) -> int:
        return self.phases[-1][1] if self.phases else 0


class _PointMassEnv:
    """Shared kinematics: first-order velocity lag, clamped desired velocity."""

    dt = DT
    action_lag = 0.5
    max_speed = 1.0

    def __init__(self, n_agents, obs_dim, action_dim, horizon, seed):
        if horizon < 1:
            raise ValueError("horizon must be positive")
        self.n_agents = n_agents
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.horizon = horizon
        self.default_seed = seed

    def _check_actions(self, actions) -> np.ndarray:
        a = np.asarray(actions, dtype=float)
        expected = (self._episodes, self.n_agents, self.action_dim)
        if a.shape != expected:
            raise ValueError(f"expected actions of shape {expected}, got {a.shape}")
        return np.clip(a, -self.max_speed, self.max_speed)


class GoalNavigationEnv(_PointMassEnv):
    """Agents navigate to fixed assigned goals spawned at random positions.

    Observations are the relative positions to all goals plus the agent's own
    velocity; which goal is "theirs" is not observable, so only per-agent
    parameters can specialize.  Per-agent reward is the reduction in distance
    to the assigned goal between consecutive timesteps.
    """

    min_goal_separation = 0.5

    def __init__(self, n, goal_assignment, seed=None, horizon=100):
        assignment = np.asarray(goal_assignment, dtype=int)
        if assignment.shape != (n,):
            raise ValueError(f"goal assignment must list one goal per agent, got {assignment.shape}")
        num_goals = int(assignment.max()) + 1 if assignment.size else 0
        if np.any(assignment < 0):
            raise ValueError("goal indices must be non-negative")
        if set(assignment.tolist()) != set(range(num_goals)):
            raise ValueError("goal indices must be contiguous from 0 with every goal used")
        if num_goals > n:
            raise ValueError("cannot have more goals than agents")
        super().__init__(n, 2 * num_goals + 2, 2, horizon, seed)
        self.assignment = assignment
        self.num_goals = num_goals

    def _spawn_goals(self, episodes, rng) -> np.ndarray:
        goals = rng.uniform(-WORKSPACE_HALF, WORKSPACE_HALF, size=(episodes, self.num_goals, 2))
        if self.num_goals < 2:
            return goals
        while True:
            diffs = goals[:, :, None, :] - goals[:, None, :, :]
            dist = np.linalg.norm(diffs, axis=-1)
            iu = np.triu_indices(self.num_goals, k=1)
            bad = np.any(dist[:, iu[0], iu[1]] < self.min_goal_separation, axis=1)
            if not np.any(bad):
                return goals
            goals[bad] = rng.uniform(
                -WORKSPACE_HALF, WORKSPACE_HALF, size=(int(bad.sum()), self.num_goals, 2)
            )

    def reset_batch(self, episodes, rng_or_seed=None) -> np.ndarray:
        rng = _as_rng(self.default_seed if rng_or_seed is None else rng_or_seed)
        self._episodes = episodes
        self.pos = rng.uniform(-WORKSPACE_HALF, WORKSPACE_HALF, size=(episodes, self.n_agents, 2))
        self.vel = np.zeros((episodes, self.n_agents, 2))
        self.goals = self._spawn_goals(episodes, rng)
        self._prev_dist = self._goal_distances()
        return self._observe()

    def _goal_distances(self) -> np.ndarray:
        own = self.goals[:, self.assignment, :]  # (E, n, 2)
        return np.linalg.norm(own - self.pos, axis=-1)

    def _observe(self) -> np.ndarray:
        rel = self.goals[:, None, :, :] - self.pos[:, :, None, :]  # (E, n, G, 2)
        flat = rel.reshape(self._episodes, self.n_agents, 2 * self.num_goals)
        return np.concatenate([flat, self.vel], axis=-1)

    def step_batch(self, actions) -> tuple[np.ndarray, np.ndarray]:
        a = self._check_actions(actions)
        self.vel = self.vel + self.action_lag * (a - self.vel)
        self.pos = self.pos + self.vel * self.dt
        dist = self._goal_distances()
        rewards = self._prev_dist - dist
        self._prev_dist = dist
        return self._observe(), rewards

    def state_snapshot(self) -> np.ndarray:
        """(episodes, n, 4) rows of x, y, vx, vy."""
        return np.concatenate([self.pos, self.vel], axis=-1)


def goal_navigation_env(n, goal_assignment, seed=None, horizon=100) -> GoalNavigationEnv:
    if n < 2:
        raise ValueError("goal navigation needs at least two agents")
    return GoalNavigationEnv(n, goal_assignment, seed=seed, horizon=horizon)


class DifferentialSteeringEnv(_PointMassEnv):
    """A rowboat steered by 1D agent forces with side-flipped effect.

    Half the agents sit on each side; an agent's side sign multiplies its
    force in the net torque but is not observable.  All agents see the same
    observation (current orientation, desired orientation) and share the
    reward: the per-step reduction of the absolute orientation error.  The
    desired orientation is resampled as soon as it is reached.
    """

    turn_rate = 0.5  # rad/s per unit net torque
    reach_threshold = 0.05  # rad

    def __init__(self, n, seed=None, horizon=100):
        if n < 2 or n % 2 != 0:
            raise ValueError("differential steering needs an even number of agents (>= 2)")
        super().__init__(n, 2, 1, horizon, seed)
        self.side_signs = np.where(np.arange(n) < n // 2, 1.0, -1.0)

    def reset_batch(self, episodes, rng_or_seed=None) -> np.ndarray:
        rng = _as_rng(self.default_seed if rng_or_seed is None else rng_or_seed)
        self._rng = rng
        self._episodes = episodes
        self.theta = rng.uniform(-np.pi, np.pi, size=episodes)
        self.theta_des = rng.uniform(-np.pi, np.pi, size=episodes)
        self._prev_abs_err = np.abs(wrap_angle(self.theta_des - self.theta))
        return self._observe()

    def _observe(self) -> np.ndarray:
        obs = np.stack([self.theta, self.theta_des], axis=-1)  # (E, 2)
        return np.broadcast_to(obs[:, None, :], (self._episodes, self.n_agents, 2)).copy()

    def step_batch(self, actions) -> tuple[np.ndarray, np.ndarray]:
        a = self._check_actions(actions)[:, :, 0]
        torque = (a * self.side_signs).sum(axis=1)
        self.theta = wrap_angle(self.theta + self.turn_rate * torque * self.dt)
        abs_err = np.abs(wrap_angle(self.theta_des - self.theta))
        rewards = np.broadcast_to(
            (self._prev_abs_err - abs_err)[:, None], (self._episodes, self.n_agents)
        ).copy()
        reached = abs_err < self.reach_threshold
        if np.any(reached):
            self.theta_des = self.theta_des.copy()
            self.theta_des[reached] = self._rng.uniform(-np.pi, np.pi, size=int(reached.sum()))
            abs_err = np.abs(wrap_angle(self.theta_des - self.theta))
        self._prev_abs_err = abs_err
        return self._observe(), rewards

    def state_snapshot(self) -> np.ndarray:
        """(episodes, n, 4) rows of orientation, desired orientation, 0, 0."""
        cols = np.stack(
            [self.theta, self.theta_des, np.zeros_like(self.theta), np.zeros_like(self.theta)],
            axis=-1,
        )
        return np.broadcast_to(cols[:, None, :], (self._episodes, self.n_agents, 4)).copy()


def differential_steering_env(n, seed=None, horizon=100) -> DifferentialSteeringEnv:
    return DifferentialSteeringEnv(n, seed=seed, horizon=horizon)


class FlockingWindEnv(_PointMassEnv):
    """Two-agent flock tracking 0.5 m/s North at 1 m spacing, under wind.

    Agent 0 (triangular) always perceives the full wind; agent 1 (circular)
    perceives a fraction that ramps linearly with its angular displacement
    from the directly-downwind position behind agent 0, reaching 0 at full
    alignment and 1 at horizontal (or when it is not behind at all).  The
    shared reward is the per-step reduction of the tracking + spacing error,
    plus a wind term equal to minus the total perceived wind, which is
    exactly 0 whenever the wind magnitude is 0.
    """

    desired_velocity = np.array([0.0, 0.5])
    desired_spacing = 1.0
    wind_direction = np.array([0.0, -1.0])  # southbound
    spawn_angle = np.pi / 8

    def __init__(
        self,
        seed=None,
        schedule: WindSchedule | None = None,
        horizon=100,
        wind=0.0,
        wind_reward_coeff=2.0,
    ):
        super().__init__(2, 6, 2, horizon, seed)
        self.schedule = schedule
        if wind < 0.0:
            raise ValueError("wind magnitude must be non-negative")
        if wind_reward_coeff < 0.0:
            raise ValueError("wind reward coefficient must be non-negative")
        self.wind = float(wind)
        self.wind_reward_coeff = float(wind_reward_coeff)

    def set_wind(self, magnitude: float) -> None:
        if magnitude < 0.0:
            raise ValueError("wind magnitude must be non-negative")
        self.wind = float(magnitude)

    def reset_batch(self, episodes, rng_or_seed=None) -> np.ndarray:
        rng = _as_rng(self.default_seed if rng_or_seed is None else rng_or_seed)
        self._episodes = episodes
        angle = rng.uniform(-self.spawn_angle, self.spawn_angle, size=episodes)
        axis = np.stack([np.cos(angle), np.sin(angle)], axis=-1)
        order = np.where(rng.random(episodes) < 0.5, 1.0, -1.0)[:, None]
        self.pos = np.stack([0.5 * order * axis, -0.5 * order * axis], axis=1)
        self.vel = np.zeros((episodes, 2, 2))
        self._prev_error = self._tracking_error()
        return self._observe()

    def shielding_factor(self) -> np.ndarray:
        """Perceived-wind fraction for the circular agent, in [0, 1]."""
        rel = self.pos[:, 1, :] - self.pos[:, 0, :]
        norm = np.linalg.norm(rel, axis=-1)
        cosang = np.where(norm > 1e-9, rel @ self.wind_direction / np.maximum(norm, 1e-9), 1.0)
        ang = np.arccos(np.clip(cosang, -1.0, 1.0))
        return np.clip(ang / (np.pi / 2.0), 0.0, 1.0)

    def _tracking_error(self) -> np.ndarray:
        vel_err = np.linalg.norm(self.vel - self.desired_velocity, axis=-1).mean(axis=1)
        spacing = np.linalg.norm(self.pos[:, 0, :] - self.pos[:, 1, :], axis=-1)
        return vel_err + np.abs(spacing - self.desired_spacing)

    def _observe(self) -> np.ndarray:
        other = self.pos[:, ::-1, :] - self.pos
        other_vel = self.vel[:, ::-1, :] - self.vel
        return np.concatenate([self.vel, other, other_vel], axis=-1)

    def step_batch(self, actions) -> tuple[np.ndarray, np.ndarray]:
        a = self._check_actions(actions)
        factors = np.stack([np.ones(self._episodes), self.shielding_factor()], axis=1)
        self.vel = self.vel + self.action_lag * (a - self.vel)
        if self.wind > 0.0:
            self.vel = self.vel + self.wind_direction * (self.wind * factors[:, :, None] * self.dt)
        self.pos = self.pos + self.vel * self.dt
        error = self._tracking_error()
        reward = self._prev_error - error
        if self.wind > 0.0:
            reward = reward - self.wind_reward_coeff * self.wind * factors.sum(axis=1) * self.dt
        self._prev_error = error
        rewards = np.broadcast_to(reward[:, None], (self._episodes, 2)).copy()
        return self._observe(), rewards

    def state_snapshot(self) -> np.ndarray:
        return np.concatenate([self.pos, self.vel], axis=-1)


def flocking_wind_env(
    seed=None,
    schedule: WindSchedule | None = None,
    horizon=100,
    wind=0.0,
    wind_reward_coeff=2.0,
) -> FlockingWindEnv:
    return FlockingWindEnv(
        seed=seed, schedule=schedule, horizon=horizon, wind=wind, wind_reward_coeff=wind_reward_coeff
    )


def write_trajectory_csv(env, policies, seed: int, path) -> None:
    """Roll out one episode and dump per-step agent states to CSV for plotting.

    Columns are ``t, agent, x, y, vx, vy, reward``; the meaning of the four
    state columns is env-specific (see each env's ``state_snapshot``).
    """
    env_ss, act_ss = np.random.SeedSequence(seed).spawn(2)
    env_rng = np.random.default_rng(env_ss)
    act_rng = np.random.default_rng(act_ss)
    obs = env.reset_batch(1, env_rng)
    rows = []
    for t in range(env.horizon):
        actions = np.empty((1, env.n_agents, env.action_dim))
        for agent in range(env.n_agents):
            means, stds = policies.evaluate_batch(agent, obs[:, agent, :])
            actions[:, agent, :] = means + stds * act_rng.standard_normal(means.shape)
        obs, rewards = env.step_batch(actions)
        snap = env.state_snapshot()
        for agent in range(env.n_agents):
            x, y, vx, vy = snap[0, agent]
            rows.append(f"{t},{agent},{x!r},{y!r},{vx!r},{vy!r},{rewards[0, agent]!r}")
    with open(path, "w") as fh:
        fh.write("t,agent,x,y,vx,vy,reward\n")
        fh.write("\n".join(rows) + "\n")
