"""Episode collection and batched policy-gradient estimation.

Episodes run the slot loop against the channel simulator: the block
evolves, the policy acts on the previous slot's observation, the
transmission outcome becomes the next observation. Gradient estimates
average per-episode losses and gradients over independently seeded
episodes in a fixed order, so a k-episode estimate equals the mean of
the k single-episode results bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import TaskSpec
from .nets import (
    ParamVector,
    action_prob_table,
    episode_loss_and_gradient,
    returns_weights,
)

__all__ = [
    "Trajectory",
    "GradEstimate",
    "collect_episode",
    "estimate_gradient",
    "returns_weights",
]

MODES = ("sampled", "greedy")


@dataclass(frozen=True)
class Trajectory:
    """One episode: per-slot observation rows, actions, and rewards."""

    states: np.ndarray  # (H, N) float64, each row the pre-slot observation
    actions: np.ndarray  # (H,) int64
    rewards: np.ndarray  # (H,) int64

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def steps(self):
        """Ordered (state, action, reward) triples."""
        return list(zip(self.states, self.actions, self.rewards))

    @property
    def n_success(self) -> int:
        return int((self.rewards == 1).sum())


@dataclass(frozen=True)
class GradEstimate:
    mean_loss: float
    mean_grad: np.ndarray
    success_rate: float
    episodes_used: int


def _collect_with_table(
    task: TaskSpec,
    table: np.ndarray,
    horizon: int,
    mode: str,
    rng: np.random.Generator,
) -> Trajectory:
    """Roll one episode using a precomputed per-observation probability table.

    Draw order per slot is (evolve, sample); drawing them as one block
    keeps the stream identical to per-slot single draws.
    """
    n = task.n_channels
    sampled = mode == "sampled"

    trailing = int(rng.integers(n))
    occupied = (trailing + int(rng.integers(task.good_count))) % n
    u = rng.random(2 * horizon if sampled else horizon)

    if sampled:
        cum = np.cumsum(table, axis=1)
        cum_rows = [row.tolist() for row in cum]
    else:
        act_rows = np.argmax(table, axis=1)

    p = task.p
    good = task.good_count
    states = np.zeros((horizon, n))
    actions = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon, dtype=np.int64)

    key = occupied  # row index: channel for +1 observations, N + channel for -1
    states[0, occupied] = 1.0
    for t in range(horizon):
        if sampled:
            row = cum_rows[key]
            v = u[2 * t + 1]
            action = n - 1
            for i in range(n):
                if v < row[i]:
                    action = i
                    break
            drift = u[2 * t]
        else:
            action = int(act_rows[key])
            drift = u[t]
        if drift < p:
            trailing = trailing + 1 if trailing + 1 < n else 0
        reward = 1 if (action - trailing) % n < good else -1
        actions[t] = action
        rewards[t] = reward
        key = action if reward == 1 else n + action
        if t + 1 < horizon:
            states[t + 1, action] = float(reward)
    return Trajectory(states=states, actions=actions, rewards=rewards)


def collect_episode(
    task: TaskSpec,
    params: ParamVector,
    horizon: int,
    mode: str = "sampled",
    rng: np.random.Generator | None = None,
) -> Trajectory:
    """Run one episode of `horizon` slots under the given policy parameters."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if params.layout.input_size != task.n_channels:
        raise ValueError(
            f"policy expects {params.layout.input_size} channels, task has {task.n_channels}"
        )
    return _collect_with_table(task, action_prob_table(params), horizon, mode, rng)


def estimate_gradient(
    task: TaskSpec,
    params: ParamVector,
    n_episodes: int,
    horizon: int,
    gamma: float,
    convention: str = "reward_to_go",
    mode: str = "sampled",
    rng: np.random.Generator | None = None,
) -> GradEstimate:
    """Average loss and gradient over independently seeded episodes.

    Episode j uses the j-th child stream of rng; sums accumulate in
    episode order so results are reproducible bit for bit.
    """
    if n_episodes < 1:
        raise ValueError(f"n_episodes must be >= 1, got {n_episodes}")
    streams = rng.spawn(n_episodes)
    table = action_prob_table(params)
    loss_sum = 0.0
    grad_sum = np.zeros(params.layout.dim)
    successes = 0
    for j in range(n_episodes):
        traj = _collect_with_table(task, table, horizon, mode, streams[j])
        loss, grad = episode_loss_and_gradient(params, traj, gamma, convention)
        loss_sum += loss
        grad_sum += grad
        successes += traj.n_success
    return GradEstimate(
        mean_loss=loss_sum / n_episodes,
        mean_grad=grad_sum / n_episodes,
        success_rate=successes / (n_episodes * horizon),
        episodes_used=n_episodes,
    )
