"""Round-robin channel environment.

N channels share a contiguous block of `good_count` good channels that
cyclically advances one position per slot with probability p. Within a
slot the block evolves first, then the agent transmits on one channel:
reward +1 if that channel is good afterwards, -1 otherwise. The agent
only ever sees the outcome of its previous transmission, encoded as a
length-N observation vector with a single +1/-1 entry.

Also provides the known-pattern reference strategy (stay/hop keyed on
whether p is below or above one half) and its analytic long-run success
rate, used as the performance ceiling in experiments.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Observation = np.ndarray  # length-N int8 vector, entries in {-1, 0, +1}


@dataclass(frozen=True)
class TaskSpec:
    """One channel-selection task: channel count, drift probability, block size."""

    n_channels: int
    p: float
    good_count: int = 2

    def __post_init__(self):
        if self.n_channels < 2:
            raise ValueError(f"n_channels must be >= 2, got {self.n_channels}")
        if not 1 <= self.good_count < self.n_channels:
            raise ValueError(
                f"good_count must be in [1, {self.n_channels - 1}], got {self.good_count}"
            )
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")


@dataclass(frozen=True)
class ChannelState:
    """Position of the good block: channels trailing..trailing+good_count-1 (mod N)."""

    trailing: int


@dataclass(frozen=True)
class SlotOutcome:
    reward: int
    observation: Observation
    next_state: ChannelState


def make_task(n_channels: int, p: float, good_count: int = 2) -> TaskSpec:
    """Validate and build a task."""
    return TaskSpec(n_channels=n_channels, p=float(p), good_count=good_count)


def in_good_set(task: TaskSpec, state: ChannelState, channel: int) -> bool:
    """True if channel lies in the current good block."""
    return (channel - state.trailing) % task.n_channels < task.good_count


def condition_vector(task: TaskSpec, state: ChannelState) -> np.ndarray:
    """Binary good/bad indicator per channel."""
    c = np.zeros(task.n_channels, dtype=np.int8)
    for k in range(task.good_count):
        c[(state.trailing + k) % task.n_channels] = 1
    return c


def evolve(task: TaskSpec, state: ChannelState, rng: np.random.Generator) -> ChannelState:
    """Advance the good block one position with probability p.

    Consumes exactly one uniform variate.
    """
    if rng.random() < task.p:
        return ChannelState((state.trailing + 1) % task.n_channels)
    return state


def make_observation(action: int, reward: int, n_channels: int) -> Observation:
    """Zero vector except entry `action`, which records the slot reward."""
    obs = np.zeros(n_channels, dtype=np.int8)
    obs[action] = reward
    return obs


def init_episode(
    task: TaskSpec, rng: np.random.Generator
) -> tuple[ChannelState, Observation, int]:
    """Start an episode on a random good channel.

    The block position is uniform; the occupied channel is uniform over
    the good block, and the first observation records that implicit
    successful transmission.
    """
    trailing = int(rng.integers(task.n_channels))
    occupied = (trailing + int(rng.integers(task.good_count))) % task.n_channels
    state = ChannelState(trailing)
    return state, make_observation(occupied, 1, task.n_channels), occupied


def transmit(task: TaskSpec, state_after_evolve: ChannelState, action: int) -> SlotOutcome:
    """Resolve one transmission against the already-evolved block."""
    if not 0 <= action < task.n_channels:
        raise ValueError(f"action must be in [0, {task.n_channels}), got {action}")
    reward = 1 if in_good_set(task, state_after_evolve, action) else -1
    return SlotOutcome(
        reward=reward,
        observation=make_observation(action, reward, task.n_channels),
        next_state=state_after_evolve,
    )


def oracle_action(task: TaskSpec, prev_action: int, prev_reward: int) -> int:
    """Known-pattern strategy: stay or hop one channel based on p and the last outcome.

    Slow drift (p <= 0.5): stay after success, hop after failure.
    Fast drift (p > 0.5): hop after success, stay after failure.
    """
    succeeded = prev_reward == 1
    hop = succeeded == (task.p > 0.5)
    if hop:
        return (prev_action + 1) % task.n_channels
    return prev_action


def oracle_success_rate(p: float) -> float:
    """Long-run per-slot success probability of the known-pattern strategy."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    return max(p, 1.0 - p)


def simulate_oracle_sr(task: TaskSpec, n_slots: int, rng: np.random.Generator) -> float:
    """Measured success rate of the known-pattern strategy over one long rollout."""
    state, _, action = init_episode(task, rng)
    reward = 1
    successes = 0
    for _ in range(n_slots):
        action = oracle_action(task, action, reward)
        state = evolve(task, state, rng)
        reward = 1 if in_good_set(task, state, action) else -1
        if reward == 1:
            successes += 1
    return successes / n_slots


def render_pattern(task: TaskSpec, horizon: int, rng: np.random.Generator) -> np.ndarray:
    """Condition grid of shape (horizon, N): row t is the block after t+1 evolve steps."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    state = ChannelState(int(rng.integers(task.n_channels)))
    grid = np.zeros((horizon, task.n_channels), dtype=np.int8)
    for t in range(horizon):
        state = evolve(task, state, rng)
        grid[t] = condition_vector(task, state)
    return grid
