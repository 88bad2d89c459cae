"""Shared fixtures for the acceptance suite.

The full training runs are expensive (tens of minutes), so they are
computed once per session and shared by every criterion that needs
them. Each acceptance test registers a one-line verdict that is printed
after the run, pass or fail, so the whole gate is auditable at a
glance.
"""
import pytest

from metachannel.channels import make_task
from metachannel.meta import (
    MetaConfig,
    joint_train,
    meta_train,
    pretrain_task_specific,
)
from metachannel.seeding import stream

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_criterion(name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS.append((name, ok, detail))


@pytest.fixture(scope="session")
def table1_cfg():
    return MetaConfig()


@pytest.fixture(scope="session")
def meta_run(table1_cfg):
    """Full meta-training run at reference scale: (final params, records)."""
    return meta_train(table1_cfg, total_iterations=2000, eval_every=100, verbose=True)


@pytest.fixture(scope="session")
def joint_run(table1_cfg):
    """Full joint-training run with the same seeds and budget."""
    return joint_train(table1_cfg, total_iterations=2000, eval_every=100, verbose=True)


@pytest.fixture(scope="session")
def pretrained_models(table1_cfg):
    """Task-specific models trained to plateau on the two extreme tasks."""
    out = {}
    for p in (0.1, 0.9):
        task = make_task(table1_cfg.n_channels, p, table1_cfg.good_count)
        out[p] = pretrain_task_specific(
            task, table1_cfg, stream(table1_cfg.run_seed, "pretrain")
        )
    return out


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}: {detail}")
