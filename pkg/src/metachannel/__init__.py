"""Meta-learned dynamic channel selection.

A slotted multichannel environment whose good channels rotate with a
task-specific probability, a small softmax policy network trained by
policy gradient, first-order meta-training across a distribution of
tasks, and a command-line harness that emits reproducible CSV metrics.
"""
from .channels import (
    ChannelState,
    SlotOutcome,
    TaskSpec,
    condition_vector,
    evolve,
    in_good_set,
    init_episode,
    make_observation,
    make_task,
    oracle_action,
    oracle_success_rate,
    render_pattern,
    simulate_oracle_sr,
    transmit,
)
from .episodes import GradEstimate, Trajectory, collect_episode, estimate_gradient, returns_weights
from .meta import (
    MetaConfig,
    PretrainResult,
    TrainRecord,
    adapt_and_evaluate,
    evaluate_sr,
    fomaml_iteration,
    inner_adapt,
    joint_iteration,
    joint_train,
    meta_train,
    outer_update,
    pretrain_task_specific,
    sample_task_pool,
    task_meta_gradient,
)
from .nets import (
    ActionDistribution,
    AdamState,
    NetLayout,
    ParamVector,
    action_prob_table,
    adam_step,
    episode_loss_and_gradient,
    flatten,
    forward,
    greedy_action,
    init_params,
    load_params,
    sample_action,
    save_params,
    sgd_step,
    unflatten,
)
from .seeding import stream

__all__ = [
    "ActionDistribution",
    "AdamState",
    "ChannelState",
    "GradEstimate",
    "MetaConfig",
    "NetLayout",
    "ParamVector",
    "PretrainResult",
    "SlotOutcome",
    "TaskSpec",
    "TrainRecord",
    "Trajectory",
    "action_prob_table",
    "adam_step",
    "adapt_and_evaluate",
    "collect_episode",
    "condition_vector",
    "episode_loss_and_gradient",
    "estimate_gradient",
    "evaluate_sr",
    "evolve",
    "flatten",
    "fomaml_iteration",
    "forward",
    "greedy_action",
    "in_good_set",
    "init_episode",
    "init_params",
    "inner_adapt",
    "joint_iteration",
    "joint_train",
    "load_params",
    "make_observation",
    "make_task",
    "meta_train",
    "oracle_action",
    "oracle_success_rate",
    "outer_update",
    "pretrain_task_specific",
    "render_pattern",
    "returns_weights",
    "sample_action",
    "sample_task_pool",
    "save_params",
    "sgd_step",
    "simulate_oracle_sr",
    "stream",
    "task_meta_gradient",
    "transmit",
    "unflatten",
]
