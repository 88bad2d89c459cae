"""Command-line front end: config parsing, experiment orchestration, CSV output.

Every run derives all randomness from a single run seed through named
streams, so identical (config, seed) pairs produce byte-identical
artifacts. Metrics go to CSV with fixed headers; parameters go to
decimal-text checkpoints that round-trip exactly.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .channels import make_task, oracle_success_rate, render_pattern, simulate_oracle_sr
from .meta import (
    MetaConfig,
    adapt_and_evaluate,
    joint_train,
    meta_train,
    pretrain_task_specific,
)
from .nets import load_params, save_params
from .seeding import stream

_INT_KEYS = (
    "n_channels",
    "good_count",
    "meta_batch_size",
    "episode_len",
    "inner_updates",
    "episodes_per_update",
    "train_pool_size",
    "validation_tasks",
    "adapt_updates_eval",
    "hidden1",
    "hidden2",
    "run_seed",
    "total_iterations",
    "eval_every",
)
_FLOAT_KEYS = ("adapt_lr", "meta_lr", "joint_lr", "pretrain_lr", "gamma")
_STR_KEYS = ("convention", "inner_opt", "output_dir")
_RUN_KEYS = ("total_iterations", "eval_every", "output_dir")


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand needs: hyperparameters plus run plumbing."""

    meta: MetaConfig = MetaConfig()
    total_iterations: int = 2000
    eval_every: int = 100
    output_dir: str = "."

    def __post_init__(self):
        if self.total_iterations < 1:
            raise ValueError("total_iterations must be >= 1")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")


def _parse_intervals(text: str) -> tuple[tuple[float, float], ...]:
    """Parse `lo:hi` pairs separated by commas, e.g. `0:0.2,0.8:1`."""
    intervals = []
    for part in text.split(","):
        lo_text, sep, hi_text = part.partition(":")
        if not sep:
            raise ValueError(f"interval {part!r} is not of the form lo:hi")
        intervals.append((float(lo_text), float(hi_text)))
    return tuple(intervals)


def load_config(path: str) -> RunConfig:
    """Parse a key = value config file; unset keys keep their defaults."""
    values: dict[str, object] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (part.strip() for part in line.partition("="))
            if not sep or not key:
                raise ValueError(f"{path}:{lineno}: expected `key = value`, got {raw.strip()!r}")
            try:
                if key in _INT_KEYS:
                    values[key] = int(value)
                elif key in _FLOAT_KEYS:
                    values[key] = float(value)
                elif key in _STR_KEYS:
                    values[key] = value
                elif key == "p_intervals":
                    values[key] = _parse_intervals(value)
                else:
                    raise KeyError
            except KeyError:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}") from None
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    run_kwargs = {k: values.pop(k) for k in list(values) if k in _RUN_KEYS}
    return RunConfig(meta=MetaConfig(**values), **run_kwargs)


def _prepare_out(cfg: RunConfig) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg.output_dir


def _write_csv(path: str, header: str, rows: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def _train_command(cfg: RunConfig, trainer, csv_name: str) -> None:
    out = _prepare_out(cfg)
    rows: list[str] = []

    def on_eval(iteration, params, record):
        rows.append(
            f"{iteration},{record.mean_validation_sr:.6f},"
            f"{min(record.per_task_sr):.6f},{max(record.per_task_sr):.6f}"
        )
        save_params(params, os.path.join(out, f"phi_iter{iteration}.txt"))

    shared, _ = trainer(
        cfg.meta,
        total_iterations=cfg.total_iterations,
        eval_every=cfg.eval_every,
        on_eval=on_eval,
        verbose=True,
    )
    save_params(shared, os.path.join(out, "phi_final.txt"))
    _write_csv(os.path.join(out, csv_name), "iteration,mean_sr,min_sr,max_sr", rows)


def cmd_meta_train(cfg: RunConfig) -> None:
    _train_command(cfg, meta_train, "meta_train.csv")


def cmd_joint_train(cfg: RunConfig) -> None:
    _train_command(cfg, joint_train, "joint_train.csv")


def cmd_adapt(cfg: RunConfig, checkpoint: str, p: float, n_updates: int) -> None:
    out = _prepare_out(cfg)
    params = load_params(checkpoint)
    expected = cfg.meta.layout
    if params.layout != expected:
        raise ValueError(
            f"checkpoint layout {params.layout.sizes()} does not match "
            f"configured network {expected.sizes()}"
        )
    task = make_task(cfg.meta.n_channels, p, cfg.meta.good_count)
    curve = adapt_and_evaluate(
        params, task, n_updates, cfg.meta, stream(cfg.meta.run_seed, "adapt")
    )
    rows = [f"{k},{sr:.6f}" for k, sr in enumerate(curve)]
    _write_csv(os.path.join(out, f"adapt_p{p:g}.csv"), "update,sr", rows)


def cmd_pretrain(cfg: RunConfig, p: float, max_updates: int = 3000) -> None:
    out = _prepare_out(cfg)
    task = make_task(cfg.meta.n_channels, p, cfg.meta.good_count)
    result = pretrain_task_specific(
        task, cfg.meta, stream(cfg.meta.run_seed, "pretrain"), max_updates=max_updates
    )
    save_params(result.params, os.path.join(out, f"pretrain_p{p:g}.txt"))
    rows = [f"{k},{sr:.6f}" for k, sr in enumerate(result.sr_history, start=1)]
    _write_csv(os.path.join(out, f"pretrain_p{p:g}.csv"), "update,sr", rows)


def cmd_eval_oracle(cfg: RunConfig, p_values: list[float], slots: int) -> None:
    out = _prepare_out(cfg)
    rows = []
    for i, p in enumerate(p_values):
        task = make_task(cfg.meta.n_channels, p, cfg.meta.good_count)
        measured = simulate_oracle_sr(task, slots, stream(cfg.meta.run_seed, "oracle", i))
        rows.append(f"{p:g},{measured:.6f},{oracle_success_rate(p):.6f}")
    _write_csv(os.path.join(out, "oracle_sr.csv"), "p,measured_sr,analytic_sr", rows)


def cmd_render_pattern(cfg: RunConfig, p: float, horizon: int) -> None:
    out = _prepare_out(cfg)
    task = make_task(cfg.meta.n_channels, p, cfg.meta.good_count)
    grid = render_pattern(task, horizon, stream(cfg.meta.run_seed, "pattern"))
    header = "t," + ",".join(f"c{i}" for i in range(task.n_channels))
    rows = [
        f"{t + 1}," + ",".join(str(int(v)) for v in grid[t]) for t in range(horizon)
    ]
    _write_csv(os.path.join(out, f"pattern_p{p:g}.csv"), header, rows)


def _parse_p_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metachannel",
        description="Meta-learned channel selection: training, adaptation, and baselines.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--seed", type=int, help="override run_seed")
    common.add_argument("--out", help="override output directory")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("meta-train", parents=[common], help="meta-train a shared initialization")
    sub.add_parser("joint-train", parents=[common], help="train one model jointly across tasks")

    p_adapt = sub.add_parser("adapt", parents=[common], help="adapt a checkpoint to one task")
    p_adapt.add_argument("--checkpoint", required=True, help="parameter checkpoint to start from")
    p_adapt.add_argument("--p", type=float, required=True, help="task transition probability")
    p_adapt.add_argument("--n-updates", type=int, default=None, help="adaptation updates")

    p_pre = sub.add_parser("pretrain", parents=[common], help="train a single-task model")
    p_pre.add_argument("--p", type=float, required=True, help="task transition probability")
    p_pre.add_argument("--max-updates", type=int, default=3000, help="update cap")

    p_oracle = sub.add_parser("eval-oracle", parents=[common], help="measure oracle success rates")
    p_oracle.add_argument(
        "--p", default="0.05,0.1,0.2,0.8,0.9,0.95", help="comma-separated p values"
    )
    p_oracle.add_argument("--slots", type=int, default=1_000_000, help="slots per p value")

    p_pat = sub.add_parser("render-pattern", parents=[common], help="emit a channel-condition grid")
    p_pat.add_argument("--p", type=float, required=True, help="task transition probability")
    p_pat.add_argument("--horizon", type=int, default=50, help="number of slots to render")
    return parser


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, meta=dataclasses.replace(cfg.meta, run_seed=args.seed))
    if args.out is not None:
        cfg = dataclasses.replace(cfg, output_dir=args.out)
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if args.command == "meta-train":
            cmd_meta_train(cfg)
        elif args.command == "joint-train":
            cmd_joint_train(cfg)
        elif args.command == "adapt":
            n_updates = args.n_updates
            if n_updates is None:
                n_updates = cfg.meta.adapt_updates_eval
            cmd_adapt(cfg, args.checkpoint, args.p, n_updates)
        elif args.command == "pretrain":
            cmd_pretrain(cfg, args.p, args.max_updates)
        elif args.command == "eval-oracle":
            cmd_eval_oracle(cfg, _parse_p_list(args.p), args.slots)
        elif args.command == "render-pattern":
            cmd_render_pattern(cfg, args.p, args.horizon)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
