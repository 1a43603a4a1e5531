# coding=utf-8
import os

import pytest

from pytdnerf.cli import COMMANDS, build_parser, main
from pytdnerf.pydata.partition import PartitionPlan
from pytdnerf.pyproduct.report import read_csv

from conftest import TARGET

TINY = ["--resolution", str(TARGET), "--levels", "2", "--table-size-log2", "7", "--base-resolution", "4",
        "--finest-resolution", "16", "--batch", "64", "--tile", "64", "--max-samples", "16",
        "--occ-resolution", "8", "--eval-every", "0", "--checkpoint-every", "0", "--max-frames", "1", "-q"]


def test_every_command_has_a_parser():
    parser = build_parser()
    for name in COMMANDS:
        args = parser.parse_args([name, "--steps", "5"])
        assert args.command == name and args.steps == "5"


def test_usage_errors_exit_with_two(capsys):
    assert main([]) == 2
    assert main(["train", "--no-such-flag"]) == 2
    assert main(["partition", "-q"]) == 2
    assert main(["budget", "--steps", "lots", "-q"]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_budget(tmp_path, capsys):
    assert main(["budget", "--out", str(tmp_path), "-q"]) == 0
    printed = capsys.readouterr().out
    assert "baseline" in printed and "selected" in printed
    frame = read_csv(os.path.join(str(tmp_path), "budget.csv"))
    assert frame["name"].tolist() == ["baseline", "selected", "current"]


def test_partition(scene_dir, tmp_path):
    out = str(tmp_path)
    assert main(["partition", "--scene", scene_dir, "--resolution", str(TARGET), "--n-clients", "3",
                 "--partition-mode", "non-iid", "--out", out, "-q"]) == 0
    plan = PartitionPlan.read(os.path.join(out, "partition.txt"))
    assert plan.mode == "non_iid" and plan.sizes() == [2, 2, 2]


def test_check(capsys):
    assert main(["check", "-q"]) == 0
    assert "Exists" in capsys.readouterr().out


def test_missing_checkpoint_is_a_runtime_error(scene_dir, tmp_path):
    assert main(["eval", "--scene", scene_dir, "--resolution", str(TARGET),
                 "--checkpoint", str(tmp_path / "none.tdnf"), "-q"]) == 1


def test_train_render_eval_export(scene_dir, tmp_path):
    out = str(tmp_path / "run")
    assert main(["train", "--scene", scene_dir, "--steps", "1", "--out", out] + TINY) == 0
    for name in ("config.txt", "train_log.csv", "final.tdnf", "eval.csv", "train_log.png"):
        assert os.path.exists(os.path.join(out, name)), name
    ckpt = os.path.join(out, "final.tdnf")
    assert main(["render", "--scene", scene_dir, "--checkpoint", ckpt, "--frame", "6", "--out", out] + TINY) == 0
    assert os.path.exists(os.path.join(out, "renders", "frame_006.png"))
    assert main(["eval", "--scene", scene_dir, "--checkpoint", ckpt, "--out", out] + TINY) == 0
    assert os.path.exists(os.path.join(out, "eval_test.csv"))
    assert main(["export", "--checkpoint", ckpt, "--out", out, "-q"]) == 0
    assert os.path.exists(os.path.join(out, "final.h5"))
    # config echo is reusable as --config
    assert main(["budget", "--config", os.path.join(out, "config.txt"), "--out", out, "-q"]) == 0


@pytest.mark.parametrize("frame", ["99", "-1"])
def test_render_bad_frame(scene_dir, tmp_path, frame):
    out = str(tmp_path)
    assert main(["train", "--scene", scene_dir, "--steps", "0", "--out", out] + TINY) == 0
    assert main(["render", "--scene", scene_dir, "--checkpoint", os.path.join(out, "final.tdnf"),
                 "--frame", frame, "--out", out] + TINY) == 1


def test_every_run_directory_gets_the_config_echo(scene_dir, tmp_path):
    base = str(tmp_path / "train")
    assert main(["train", "--scene", scene_dir, "--steps", "0", "--out", base] + TINY) == 0
    ckpt = os.path.join(base, "final.tdnf")
    runs = {
        "render": ["render", "--scene", scene_dir, "--checkpoint", ckpt, "--frame", "6"] + TINY,
        "eval": ["eval", "--scene", scene_dir, "--checkpoint", ckpt] + TINY,
        "partition": ["partition", "--scene", scene_dir, "--resolution", str(TARGET), "--n-clients", "2", "-q"],
        "budget": ["budget", "-q"],
        "export": ["export", "--checkpoint", ckpt, "-q"],
    }
    for name, argv in runs.items():
        out = str(tmp_path / name)
        assert main(argv + ["--out", out]) == 0, name
        assert os.path.exists(os.path.join(out, "config.txt")), name
