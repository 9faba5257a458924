"""Command-line surface: flag sets, config files, exit codes and a small end-to-end run."""

import argparse
import json
from pathlib import Path

import pytest

from phase5_interface.cli import build_parser, dispatch, geometry_list, parse_args, seed_list

GOLDEN = Path(__file__).parent / "golden"


def option_strings(parser):
    return sorted(s for a in parser._actions for s in a.option_strings if s not in ("-h", "--help"))


@pytest.mark.parametrize("name", ["gen-data", "train", "eval", "bench", "ablate", "gradcheck", "inspect"])
def test_flags_match_golden(name):
    _, commands = build_parser()
    expected = (GOLDEN / f"{name}.flags").read_text().split()
    assert option_strings(commands[name]) == expected
    assert all(a.help for a in commands[name]._actions if a.option_strings)


def test_seed_list():
    assert seed_list("1..5") == (1, 2, 3, 4, 5)
    assert seed_list("1,3,7") == (1, 3, 7)
    assert seed_list("4") == (4,)
    with pytest.raises(argparse.ArgumentTypeError):
        seed_list("5..1")
    with pytest.raises(argparse.ArgumentTypeError):
        seed_list("a,b")


def test_geometry_list():
    assert geometry_list("1:1,2:2") == [(1, 1), (2, 2)]
    assert geometry_list("default")
    with pytest.raises(argparse.ArgumentTypeError):
        geometry_list("1:2:3")
    with pytest.raises(argparse.ArgumentTypeError):
        geometry_list("x")


def test_config_file_values_yield_to_explicit_flags(tmp_path):
    config = tmp_path / "run.conf"
    config.write_text("max_epochs=5\nbatch-size=8\nquiet=yes\n")
    args = parse_args(["train", "--data", "d.eegd", "--config", str(config), "--max-epochs", "1"])
    assert args.max_epochs == 1
    assert args.batch_size == 8
    assert args.quiet is True
    assert args.lr == 1e-4


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["train"],
    ["train", "--data", "d.eegd", "--seed", "x"],
    ["ablate", "--data", "d.eegd", "--variants", "no_attention"],
])
def test_usage_errors_exit_1(argv):
    assert dispatch(argv) == 1


def test_help_exits_0():
    assert dispatch(["train", "--help"]) == 0


def test_unknown_config_key_exits_1(tmp_path):
    config = tmp_path / "bad.conf"
    config.write_text("learning_rate=0.1\n")
    assert dispatch(["train", "--data", "d.eegd", "--config", str(config)]) == 1


def test_missing_dataset_exits_2(tmp_path):
    assert dispatch(["train", "--data", str(tmp_path / "absent.eegd"), "--quiet"]) == 2


@pytest.fixture
def desk_file(tmp_path):
    path = tmp_path / "desk.eegd"
    code = dispatch(["gen-data", "--subjects", "4", "--trials", "8", "--seed", "3",
                     "--out", str(path), "--quiet"])
    assert code == 0
    return path


def test_eval_without_model_or_baselines_exits_1(desk_file):
    assert dispatch(["eval", "--data", str(desk_file), "--quiet"]) == 1


def test_geometry_mismatch_exits_2(desk_file):
    assert dispatch(["train", "--data", str(desk_file), "--scale", "full", "--quiet"]) == 2


def test_gen_data_train_eval_inspect(desk_file, tmp_path):
    report_path = tmp_path / "report.json"
    weights = tmp_path / "model.ntar"
    code = dispatch(["train", "--data", str(desk_file), "--seed", "1", "--max-epochs", "1",
                     "--batch-size", "8", "--save-model", str(weights), "--out", str(report_path),
                     "--quiet"])
    assert code == 0
    report = json.loads(report_path.read_text())
    assert set(report["per_seed_rmse"]) == {"1"}
    assert report["mean"] == pytest.approx(report["per_seed_rmse"]["1"])
    assert weights.exists()

    eval_path = tmp_path / "eval.json"
    code = dispatch(["eval", "--data", str(desk_file), "--model", str(weights), "--baselines",
                     "--out", str(eval_path), "--quiet"])
    assert code == 0
    evaluation = json.loads(eval_path.read_text())
    assert evaluation["val_rmse"] == pytest.approx(report["mean"], rel=1e-5)
    assert "Naive Guessing" in evaluation["baselines"]

    assert dispatch(["inspect", "--model", str(weights), "--data", str(desk_file)]) == 0
    assert dispatch(["inspect"]) == 1


def test_ingest_pair_must_be_complete(tmp_path):
    assert dispatch(["gen-data", "--ingest-signals", str(tmp_path / "s.txt"),
                     "--out", str(tmp_path / "x.eegd"), "--quiet"]) == 1


def test_gradcheck_ops_only():
    assert dispatch(["gradcheck", "--skip-model", "--cases", "1"]) == 0
    assert dispatch(["gradcheck", "--cases", "0"]) == 1


def test_unexpected_exception_exits_4(monkeypatch):
    from phase5_interface import cli

    def boom(args):
        raise RuntimeError("unexpected")

    monkeypatch.setitem(cli.COMMANDS, "inspect", boom)
    assert dispatch(["inspect", "--model", "m.ntar"]) == 4


def test_corrupt_checkpoint_exits_2(tmp_path):
    import struct

    from phase2_dataset_store.binary import crc32

    body = struct.pack("<IIH", 1, 1, 1) + b"w" + struct.pack("<BB2Q", 0, 2, 2 ** 32, 2 ** 32)
    path = tmp_path / "bad.ntar"
    path.write_bytes(b"NTAR" + body + struct.pack("<I", crc32(body)))
    assert dispatch(["inspect", "--model", str(path)]) == 2
