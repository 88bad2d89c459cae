"""Tests for config parsing, the CLI subcommands, and artifact reproducibility."""
import filecmp
import os

import numpy as np
import pytest

from metachannel.harness import (
    RunConfig,
    cmd_eval_oracle,
    load_config,
    main,
)
from metachannel.meta import MetaConfig
from metachannel.nets import NetLayout, init_params, load_params, save_params

TINY = """
# small end-to-end configuration
n_channels = 4
good_count = 2
meta_batch_size = 2
episode_len = 5
inner_updates = 2
episodes_per_update = 2
train_pool_size = 4
validation_tasks = 2
adapt_updates_eval = 1
hidden1 = 6
hidden2 = 5
total_iterations = 2
eval_every = 1
"""


def _write_tiny(tmp_path, extra=""):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY + extra)
    return str(path)


# ---------------------------------------------------------------- config file

def test_empty_config_gives_defaults(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("")
    cfg = load_config(str(path))
    assert cfg == RunConfig()
    assert cfg.meta == MetaConfig()
    assert cfg.total_iterations == 2000
    assert cfg.eval_every == 100


def test_config_parses_typed_values(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text(
        "meta_lr = 0.07\n"
        "gamma=0.5\n"  # spaces around = are optional
        "run_seed = 9\n"
        "convention = global_discount\n"
        "p_intervals = 0:0.3,0.7:1\n"
        "output_dir = runs/a\n"
        "total_iterations = 12\n"
    )
    cfg = load_config(str(path))
    assert cfg.meta.meta_lr == 0.07
    assert cfg.meta.gamma == 0.5
    assert cfg.meta.run_seed == 9
    assert cfg.meta.convention == "global_discount"
    assert cfg.meta.p_intervals == ((0.0, 0.3), (0.7, 1.0))
    assert cfg.output_dir == "runs/a"
    assert cfg.total_iterations == 12


def test_config_ignores_comments_and_blanks(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# full line comment\n\ngamma = 0.8  # trailing comment\n")
    assert load_config(str(path)).meta.gamma == 0.8


def test_config_unknown_key_names_the_key(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("gama = 0.9\n")
    with pytest.raises(ValueError, match=r"c\.cfg:1: unknown config key 'gama'"):
        load_config(str(path))


def test_config_malformed_line_reports_line_number(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("gamma = 0.9\njust some words\n")
    with pytest.raises(ValueError, match=r"c\.cfg:2: expected `key = value`"):
        load_config(str(path))


def test_config_bad_value_reports_key(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("episode_len = 1.5\n")
    with pytest.raises(ValueError, match="bad value for episode_len"):
        load_config(str(path))


def test_config_out_of_range_value_rejected(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("gamma = -1\n")
    with pytest.raises(ValueError, match="gamma"):
        load_config(str(path))


def test_run_config_validates_schedule():
    with pytest.raises(ValueError):
        RunConfig(total_iterations=0)
    with pytest.raises(ValueError):
        RunConfig(eval_every=0)


# ---------------------------------------------------------------- subcommands

def test_meta_train_command_artifacts(tmp_path):
    cfg_path = _write_tiny(tmp_path)
    out = tmp_path / "out"
    assert main(["meta-train", "--config", cfg_path, "--out", str(out)]) == 0

    csv = (out / "meta_train.csv").read_text().splitlines()
    assert csv[0] == "iteration,mean_sr,min_sr,max_sr"
    assert len(csv) == 4  # snapshots at 0, 1, 2
    assert csv[1].startswith("0,")
    for row in csv[1:]:
        fields = row.split(",")
        assert len(fields) == 4
        assert all(0.0 <= float(x) <= 1.0 for x in fields[1:])

    for name in ("phi_iter0.txt", "phi_iter1.txt", "phi_iter2.txt", "phi_final.txt"):
        assert (out / name).exists()
    params = load_params(out / "phi_final.txt")
    assert params.layout.sizes() == (4, 6, 5, 4)


def test_joint_train_command_artifacts(tmp_path):
    cfg_path = _write_tiny(tmp_path)
    out = tmp_path / "out"
    assert main(["joint-train", "--config", cfg_path, "--out", str(out)]) == 0
    csv = (out / "joint_train.csv").read_text().splitlines()
    assert csv[0] == "iteration,mean_sr,min_sr,max_sr"
    assert len(csv) == 4
    assert (out / "phi_final.txt").exists()


def test_adapt_command_curve(tmp_path):
    cfg_path = _write_tiny(tmp_path)
    out = tmp_path / "out"
    main(["meta-train", "--config", cfg_path, "--out", str(out)])
    assert (
        main(
            [
                "adapt",
                "--config",
                cfg_path,
                "--out",
                str(out),
                "--checkpoint",
                str(out / "phi_final.txt"),
                "--p",
                "0.1",
                "--n-updates",
                "3",
            ]
        )
        == 0
    )
    csv = (out / "adapt_p0.1.csv").read_text().splitlines()
    assert csv[0] == "update,sr"
    assert len(csv) == 5  # initial value plus three updates
    assert csv[1].startswith("0,")
    assert csv[4].startswith("3,")


def test_adapt_defaults_to_configured_update_count(tmp_path):
    cfg_path = _write_tiny(tmp_path)
    out = tmp_path / "out"
    main(["meta-train", "--config", cfg_path, "--out", str(out)])
    main(
        [
            "adapt",
            "--config",
            cfg_path,
            "--out",
            str(out),
            "--checkpoint",
            str(out / "phi_final.txt"),
            "--p",
            "0.9",
        ]
    )
    csv = (out / "adapt_p0.9.csv").read_text().splitlines()
    assert len(csv) == 3  # adapt_updates_eval = 1 in the tiny config


def test_adapt_rejects_layout_mismatch(tmp_path, capsys):
    cfg_path = _write_tiny(tmp_path)
    other = init_params(NetLayout(7, 3, 3), np.random.default_rng(0))
    ckpt = tmp_path / "other.txt"
    save_params(other, ckpt)
    code = main(
        ["adapt", "--config", cfg_path, "--checkpoint", str(ckpt), "--p", "0.1"]
    )
    assert code == 2
    err = capsys.readouterr().err
    assert "does not match" in err


def test_pretrain_command_artifacts(tmp_path):
    cfg_path = _write_tiny(tmp_path)
    out = tmp_path / "out"
    code = main(
        [
            "pretrain",
            "--config",
            cfg_path,
            "--out",
            str(out),
            "--p",
            "0.9",
            "--max-updates",
            "12",
        ]
    )
    assert code == 0
    csv = (out / "pretrain_p0.9.csv").read_text().splitlines()
    assert csv[0] == "update,sr"
    assert 2 <= len(csv) <= 13
    assert csv[1].startswith("1,")
    params = load_params(out / "pretrain_p0.9.txt")
    assert params.layout.sizes() == (4, 50, 50, 4)


def test_eval_oracle_command(tmp_path):
    cfg_path = _write_tiny(tmp_path)
    out = tmp_path / "out"
    code = main(
        [
            "eval-oracle",
            "--config",
            cfg_path,
            "--out",
            str(out),
            "--p",
            "0.1,0.9",
            "--slots",
            "20000",
        ]
    )
    assert code == 0
    csv = (out / "oracle_sr.csv").read_text().splitlines()
    assert csv[0] == "p,measured_sr,analytic_sr"
    assert len(csv) == 3
    for row in csv[1:]:
        p, measured, analytic = row.split(",")
        assert float(analytic) == 0.9
        assert abs(float(measured) - 0.9) < 0.02


def test_render_pattern_command(tmp_path):
    cfg_path = _write_tiny(tmp_path)
    out = tmp_path / "out"
    code = main(
        [
            "render-pattern",
            "--config",
            cfg_path,
            "--out",
            str(out),
            "--p",
            "0.9",
            "--horizon",
            "7",
        ]
    )
    assert code == 0
    csv = (out / "pattern_p0.9.csv").read_text().splitlines()
    assert csv[0] == "t,c0,c1,c2,c3"
    assert len(csv) == 8
    for i, row in enumerate(csv[1:], start=1):
        fields = [int(x) for x in row.split(",")]
        assert fields[0] == i
        assert sum(fields[1:]) == 2  # the good block is always two channels


def test_missing_config_file_reports_error(tmp_path, capsys):
    code = main(["meta-train", "--config", str(tmp_path / "absent.cfg")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_seed_flag_overrides_config(tmp_path):
    cfg_path = _write_tiny(tmp_path)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    main(["eval-oracle", "--config", cfg_path, "--out", str(out_a), "--p", "0.2", "--slots", "5000"])
    main(
        [
            "eval-oracle",
            "--config",
            cfg_path,
            "--seed",
            "77",
            "--out",
            str(out_b),
            "--p",
            "0.2",
            "--slots",
            "5000",
        ]
    )
    a = (out_a / "oracle_sr.csv").read_text()
    b = (out_b / "oracle_sr.csv").read_text()
    assert a != b  # measured column moves with the seed


# ---------------------------------------------------------------- reproducibility

def _run_twice(tmp_path, argv_tail):
    cfg_path = _write_tiny(tmp_path)
    outs = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        assert main(argv_tail[:1] + ["--config", cfg_path, "--out", str(out)] + argv_tail[1:]) == 0
        outs.append(out)
    return outs


def test_meta_train_byte_identical(tmp_path):
    a, b = _run_twice(tmp_path, ["meta-train"])
    for name in ("meta_train.csv", "phi_final.txt", "phi_iter0.txt", "phi_iter2.txt"):
        assert filecmp.cmp(a / name, b / name, shallow=False), name


def test_joint_train_byte_identical(tmp_path):
    a, b = _run_twice(tmp_path, ["joint-train"])
    for name in ("joint_train.csv", "phi_final.txt"):
        assert filecmp.cmp(a / name, b / name, shallow=False), name


def test_pretrain_byte_identical(tmp_path):
    a, b = _run_twice(tmp_path, ["pretrain", "--p", "0.1", "--max-updates", "8"])
    for name in ("pretrain_p0.1.csv", "pretrain_p0.1.txt"):
        assert filecmp.cmp(a / name, b / name, shallow=False), name


def test_oracle_and_pattern_byte_identical(tmp_path):
    a, b = _run_twice(tmp_path, ["eval-oracle", "--p", "0.1", "--slots", "3000"])
    assert filecmp.cmp(a / "oracle_sr.csv", b / "oracle_sr.csv", shallow=False)
    c, d = _run_twice(tmp_path, ["render-pattern", "--p", "0.8", "--horizon", "9"])
    assert filecmp.cmp(c / "pattern_p0.8.csv", d / "pattern_p0.8.csv", shallow=False)


def test_checkpoint_round_trip_through_cli(tmp_path):
    cfg_path = _write_tiny(tmp_path)
    out = tmp_path / "out"
    main(["meta-train", "--config", cfg_path, "--out", str(out)])
    final = load_params(out / "phi_final.txt")
    save_params(final, out / "again.txt")
    assert filecmp.cmp(out / "phi_final.txt", out / "again.txt", shallow=False)
