"""Softmax policy network over flat parameter vectors.

Two hidden rectifier layers feed a softmax over channels. Forward and
backward passes are written out by hand on numpy arrays so the gradient
of the episode loss is exact and cheap to audit. Parameters live in one
flat float64 vector with a fixed layout (W1 row-major, b1, W2, b2, W3,
b3), which keeps optimizer steps and checkpointing trivial.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOG_FLOOR = 1e-12

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

CONVENTIONS = ("reward_to_go", "global_discount")


@dataclass(frozen=True)
class NetLayout:
    """Layer widths; input and output both equal the task's channel count."""

    input_size: int
    hidden1: int = 50
    hidden2: int = 20
    output_size: int = 0

    def __post_init__(self):
        if self.output_size == 0:
            object.__setattr__(self, "output_size", self.input_size)
        for name in ("input_size", "hidden1", "hidden2", "output_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def sizes(self) -> tuple[int, int, int, int]:
        return (self.input_size, self.hidden1, self.hidden2, self.output_size)

    @property
    def dim(self) -> int:
        n_in, h1, h2, n_out = self.input_size, self.hidden1, self.hidden2, self.output_size
        return (n_in * h1 + h1) + (h1 * h2 + h2) + (h2 * n_out + n_out)


@dataclass(frozen=True)
class ParamVector:
    """Flat network parameters plus the layout needed to interpret them."""

    layout: NetLayout
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.layout.dim,):
            raise ValueError(
                f"parameter vector has length {self.values.shape}, layout needs {self.layout.dim}"
            )


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step_count: int

    @classmethod
    def zeros(cls, dim: int) -> "AdamState":
        return cls(m=np.zeros(dim), v=np.zeros(dim), step_count=0)


@dataclass(frozen=True)
class ActionDistribution:
    probs: np.ndarray


def unflatten(params: ParamVector):
    """Views (W1, b1, W2, b2, W3, b3) into the flat vector."""
    lo = params.layout
    n_in, h1, h2, n_out = lo.input_size, lo.hidden1, lo.hidden2, lo.output_size
    v = params.values
    i = 0
    w1 = v[i : i + n_in * h1].reshape(h1, n_in)
    i += n_in * h1
    b1 = v[i : i + h1]
    i += h1
    w2 = v[i : i + h1 * h2].reshape(h2, h1)
    i += h1 * h2
    b2 = v[i : i + h2]
    i += h2
    w3 = v[i : i + h2 * n_out].reshape(n_out, h2)
    i += h2 * n_out
    b3 = v[i : i + n_out]
    return w1, b1, w2, b2, w3, b3


def flatten(layout: NetLayout, w1, b1, w2, b2, w3, b3) -> ParamVector:
    values = np.concatenate(
        [np.ravel(w1), np.ravel(b1), np.ravel(w2), np.ravel(b2), np.ravel(w3), np.ravel(b3)]
    )
    return ParamVector(layout=layout, values=values)


def init_params(layout: NetLayout, rng: np.random.Generator) -> ParamVector:
    """Rectifier-scaled gaussian weights (std sqrt(2/fan_in)), zero biases."""
    n_in, h1, h2, n_out = layout.input_size, layout.hidden1, layout.hidden2, layout.output_size
    w1 = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(h1, n_in))
    w2 = rng.normal(0.0, np.sqrt(2.0 / h1), size=(h2, h1))
    w3 = rng.normal(0.0, np.sqrt(2.0 / h2), size=(n_out, h2))
    return flatten(layout, w1, np.zeros(h1), w2, np.zeros(h2), w3, np.zeros(n_out))


def _check_finite(params: ParamVector) -> None:
    if not np.isfinite(params.values).all():
        raise ValueError("parameter vector contains non-finite entries")


def forward(params: ParamVector, obs: np.ndarray) -> ActionDistribution:
    """Action probabilities for one observation."""
    _check_finite(params)
    w1, b1, w2, b2, w3, b3 = unflatten(params)
    x = np.asarray(obs, dtype=np.float64)
    h1 = np.maximum(w1 @ x + b1, 0.0)
    h2 = np.maximum(w2 @ h1 + b2, 0.0)
    z = w3 @ h2 + b3
    z = z - z.max()  # keeps exp in range
    e = np.exp(z)
    return ActionDistribution(probs=e / e.sum())


def greedy_action(dist: ActionDistribution) -> int:
    """Highest-probability action; ties go to the lowest index."""
    return int(np.argmax(dist.probs))


def _inverse_cdf(probs: np.ndarray, u: float) -> int:
    cum = np.cumsum(probs)
    idx = int(np.searchsorted(cum, u, side="right"))
    return min(idx, len(probs) - 1)


def sample_action(dist: ActionDistribution, rng: np.random.Generator) -> int:
    """Draw an action by inverse CDF on a single uniform variate."""
    return _inverse_cdf(dist.probs, rng.random())


def action_prob_table(params: ParamVector) -> np.ndarray:
    """Policy output for every observation a rollout can produce.

    Row a (a < N) is the response to +1 on channel a, row N + a the
    response to -1 on channel a. Built from the same forward pass the
    policy uses, so table rows match forward() exactly.
    """
    n = params.layout.input_size
    table = np.empty((2 * n, n))
    obs = np.zeros(n)
    for a in range(n):
        obs[a] = 1.0
        table[a] = forward(params, obs).probs
        obs[a] = -1.0
        table[n + a] = forward(params, obs).probs
        obs[a] = 0.0
    return table


def returns_weights(rewards, gamma: float, convention: str = "reward_to_go") -> np.ndarray:
    """Per-step return weights for the episode loss.

    reward_to_go discounts each future reward relative to the current
    slot; global_discount counts the exponent from the episode start, so
    the whole suffix sum shrinks with t.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    r = np.asarray(rewards, dtype=np.float64)
    n = len(r)
    w = np.empty(n)
    if convention == "reward_to_go":
        acc = 0.0
        for t in range(n - 1, -1, -1):
            acc = r[t] + gamma * acc
            w[t] = acc
    elif convention == "global_discount":
        acc = 0.0
        for t in range(n - 1, -1, -1):
            acc += gamma ** (t + 1) * r[t]
            w[t] = acc
    else:
        raise ValueError(f"unknown return convention: {convention!r}")
    return w


def episode_loss_and_gradient(
    params: ParamVector, traj, gamma: float, convention: str = "reward_to_go"
) -> tuple[float, np.ndarray]:
    """Weighted negative-log-likelihood loss of one episode and its exact gradient.

    loss = -(1/H) * sum_t w_t * log pi(a_t | s_t), with log arguments
    floored at LOG_FLOOR. Where the floor engages, that slot contributes
    a constant, so its gradient contribution is zero.
    """
    _check_finite(params)
    w1, b1, w2, b2, w3, b3 = unflatten(params)
    x = np.asarray(traj.states, dtype=np.float64)
    actions = np.asarray(traj.actions)
    hh = len(actions)
    rows = np.arange(hh)

    weights = returns_weights(traj.rewards, gamma, convention)

    z1 = x @ w1.T + b1
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ w2.T + b2
    a2 = np.maximum(z2, 0.0)
    z3 = a2 @ w3.T + b3
    z3 = z3 - z3.max(axis=1, keepdims=True)
    e = np.exp(z3)
    probs = e / e.sum(axis=1, keepdims=True)

    p_act = probs[rows, actions]
    floored = p_act < LOG_FLOOR
    loss = float(-(weights @ np.log(np.maximum(p_act, LOG_FLOOR))) / hh)

    coef = weights / hh
    coef = np.where(floored, 0.0, coef)
    dz3 = probs * coef[:, None]
    dz3[rows, actions] -= coef

    dw3 = dz3.T @ a2
    db3 = dz3.sum(axis=0)
    da2 = dz3 @ w3
    dz2 = np.where(z2 > 0.0, da2, 0.0)
    dw2 = dz2.T @ a1
    db2 = dz2.sum(axis=0)
    da1 = dz2 @ w2
    dz1 = np.where(z1 > 0.0, da1, 0.0)
    dw1 = dz1.T @ x
    db1 = dz1.sum(axis=0)

    grad = np.concatenate(
        [dw1.ravel(), db1.ravel(), dw2.ravel(), db2.ravel(), dw3.ravel(), db3.ravel()]
    )
    return loss, grad


def adam_step(
    params: ParamVector, state: AdamState, grad: np.ndarray, lr: float
) -> tuple[ParamVector, AdamState]:
    """One bias-corrected Adam update; pure in all inputs."""
    if grad.shape != params.values.shape:
        raise ValueError("gradient length does not match parameter vector")
    t = state.step_count + 1
    m = ADAM_BETA1 * state.m + (1.0 - ADAM_BETA1) * grad
    v = ADAM_BETA2 * state.v + (1.0 - ADAM_BETA2) * grad * grad
    m_hat = m / (1.0 - ADAM_BETA1**t)
    v_hat = v / (1.0 - ADAM_BETA2**t)
    values = params.values - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return ParamVector(params.layout, values), AdamState(m=m, v=v, step_count=t)


def sgd_step(params: ParamVector, grad: np.ndarray, lr: float) -> ParamVector:
    """Plain gradient descent step."""
    if grad.shape != params.values.shape:
        raise ValueError("gradient length does not match parameter vector")
    return ParamVector(params.layout, params.values - lr * grad)


def save_params(params: ParamVector, path) -> None:
    """Write a plain-text checkpoint; repr round-trips each float64 exactly."""
    lo = params.layout
    lines = [
        f"layout {lo.input_size} {lo.hidden1} {lo.hidden2} {lo.output_size}",
        str(lo.dim),
    ]
    lines.extend(repr(float(v)) for v in params.values)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_params(path) -> ParamVector:
    """Read a checkpoint written by save_params."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 5 or header[0] != "layout":
            raise ValueError(f"{path}: malformed checkpoint header")
        layout = NetLayout(*(int(x) for x in header[1:]))
        dim = int(fh.readline())
        if dim != layout.dim:
            raise ValueError(
                f"{path}: declared length {dim} does not match layout dimension {layout.dim}"
            )
        values = np.array([float(fh.readline()) for _ in range(dim)])
    return ParamVector(layout=layout, values=values)
