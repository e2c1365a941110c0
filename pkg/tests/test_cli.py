"""Integration tests for the command-line interface."""

import json

import pandas as pd
import pytest
from click.testing import CliRunner

from cli import create_cli
from data_service import load_checkpoint


@pytest.fixture
def cli():
    return create_cli()


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def trained(cli, runner, tmp_path):
    """A two-step CE run on the testing preset."""
    out = tmp_path / "ce"
    result = runner.invoke(cli, ["train", "--preset", "testing", "--seed", "7", "--steps", "2", "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


class TestUsage:
    """Help and usage errors."""

    def test_help(self, cli, runner):
        result = runner.invoke(cli, ["--help"])
        assert result.exit_code == 0
        for name in ("gen-data", "train", "eval", "infer", "dump-attention", "ablate"):
            assert name in result.output

    def test_unknown_flag(self, cli, runner):
        assert runner.invoke(cli, ["train", "--bogus"]).exit_code == 2

    def test_out_of_range_flag(self, cli, runner):
        assert runner.invoke(cli, ["train", "--preset", "testing", "--encoder-blocks", "5"]).exit_code == 2

    def test_invalid_config_file(self, cli, runner, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("encoder_blocks=9\n")
        result = runner.invoke(cli, ["train", "--preset", "testing", "--config", str(path), "--out", str(tmp_path)])
        assert result.exit_code == 2
        assert "encoder_blocks" in result.output

    def test_unknown_config_key(self, cli, runner, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("depth=3\n")
        result = runner.invoke(cli, ["gen-data", "--config", str(path), "--out", str(tmp_path / "d")])
        assert result.exit_code == 2

    def test_scst_needs_initial_weights(self, cli, runner, tmp_path):
        result = runner.invoke(cli, ["train", "--preset", "testing", "--phase", "scst", "--out", str(tmp_path)])
        assert result.exit_code == 2
        assert "--init" in result.output

    def test_resume_needs_checkpoint(self, cli, runner, tmp_path):
        result = runner.invoke(cli, ["train", "--preset", "testing", "--resume", "--out", str(tmp_path)])
        assert result.exit_code == 2


class TestTrain:
    """The train command and its artifacts."""

    def test_writes_log_and_checkpoint(self, trained):
        log = pd.read_csv(trained / "train_log.csv")
        assert list(log.columns) == ["step", "phase", "loss", "lr", "metric"]
        assert log["step"].tolist() == [1, 2]
        assert set(log["phase"]) == {"ce"}
        ckpt = load_checkpoint(trained / "checkpoint.xlck")
        assert (ckpt.step, ckpt.phase, ckpt.seed) == (2, "ce", 7)

    def test_same_seed_same_bytes(self, cli, runner, tmp_path, trained):
        again = tmp_path / "again"
        result = runner.invoke(cli, ["train", "--preset", "testing", "--seed", "7", "--steps", "2", "--out", str(again)])
        assert result.exit_code == 0, result.output
        assert (again / "train_log.csv").read_bytes() == (trained / "train_log.csv").read_bytes()
        assert (again / "checkpoint.xlck").read_bytes() == (trained / "checkpoint.xlck").read_bytes()

    def test_resume_appends(self, cli, runner, trained):
        result = runner.invoke(cli, ["train", "--preset", "testing", "--resume", "--steps", "1", "--out", str(trained)])
        assert result.exit_code == 0, result.output
        assert "Resuming ce at step 2" in result.output
        log = pd.read_csv(trained / "train_log.csv")
        assert log["step"].tolist() == [1, 2, 3]

    def test_scst_from_ce_weights(self, cli, runner, tmp_path, trained):
        out = tmp_path / "scst"
        result = runner.invoke(cli, [
            "train", "--preset", "testing", "--phase", "scst", "--steps", "1",
            "--init", str(trained / "checkpoint.xlck"), "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        ckpt = load_checkpoint(out / "checkpoint.xlck")
        assert (ckpt.phase, ckpt.step) == ("scst", 1)

    def test_ablation_switches(self, cli, runner, tmp_path):
        out = tmp_path / "conv"
        result = runner.invoke(cli, [
            "train", "--preset", "testing", "--steps", "1", "--attention", "conventional",
            "--encoder-blocks", "0", "--elu", "off", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        config = load_checkpoint(out / "checkpoint.xlck").model_config
        assert (config["decoder_attention"], config["encoder_blocks"], config["elu"]) == ("conventional", 0, False)

    def test_report_printed(self, cli, runner, tmp_path):
        result = runner.invoke(cli, ["train", "--preset", "testing", "--steps", "1", "--out", str(tmp_path / "r")])
        assert "TRAINING RUN REPORT" in result.output


class TestDataAndInference:
    """gen-data, eval, infer and dump-attention."""

    def test_gen_data_then_train(self, cli, runner, tmp_path):
        data = tmp_path / "toy"
        result = runner.invoke(cli, ["gen-data", "--preset", "testing", "--out", str(data)])
        assert result.exit_code == 0, result.output
        assert "24/8/8" in result.output
        assert (data / "train_manifest.txt").exists()
        result = runner.invoke(cli, [
            "train", "--preset", "testing", "--data", str(data), "--steps", "1", "--out", str(tmp_path / "run"),
        ])
        assert result.exit_code == 0, result.output

    def test_missing_data_directory(self, cli, runner, tmp_path):
        result = runner.invoke(cli, [
            "train", "--preset", "testing", "--data", str(tmp_path / "absent"), "--out", str(tmp_path / "run"),
        ])
        assert result.exit_code == 1

    def test_eval(self, cli, runner, trained):
        result = runner.invoke(cli, ["eval", "--preset", "testing", "--checkpoint", str(trained / "checkpoint.xlck")])
        assert result.exit_code == 0, result.output
        assert "BLEU-4" in result.output
        assert "(8 examples)" in result.output

    def test_eval_with_beam(self, cli, runner, trained):
        result = runner.invoke(cli, [
            "eval", "--preset", "testing", "--checkpoint", str(trained / "checkpoint.xlck"), "--beam", "2",
            "--split", "val",
        ])
        assert result.exit_code == 0, result.output

    def test_eval_corrupt_checkpoint(self, cli, runner, tmp_path):
        path = tmp_path / "broken.xlck"
        path.write_bytes(b"XLCK\x01")
        result = runner.invoke(cli, ["eval", "--preset", "testing", "--checkpoint", str(path)])
        assert result.exit_code == 1
        assert "truncated" in result.output

    def test_infer(self, cli, runner, trained):
        result = runner.invoke(cli, [
            "infer", "--preset", "testing", "--checkpoint", str(trained / "checkpoint.xlck"), "--limit", "2",
        ])
        assert result.exit_code == 0, result.output
        lines = [line for line in result.output.splitlines() if line.startswith("test-")]
        assert len(lines) == 2
        assert all(len(line.split("\t")) == 3 for line in lines)

    def test_dump_attention(self, cli, runner, trained, tmp_path):
        out = tmp_path / "trace.json"
        result = runner.invoke(cli, [
            "dump-attention", "--preset", "testing", "--checkpoint", str(trained / "checkpoint.xlck"),
            "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        doc = json.loads(out.read_text())
        assert doc["example_id"] == "test-000032"
        assert all(sum(step["spatial"]) == pytest.approx(1.0) for step in doc["steps"])

    def test_dump_attention_unknown_example(self, cli, runner, trained, tmp_path):
        result = runner.invoke(cli, [
            "dump-attention", "--preset", "testing", "--checkpoint", str(trained / "checkpoint.xlck"),
            "--example-id", "nope", "--out", str(tmp_path / "t.json"),
        ])
        assert result.exit_code == 1


@pytest.mark.slow
def test_ablate(cli, runner, tmp_path):
    out = tmp_path / "ablation.csv"
    result = runner.invoke(cli, ["ablate", "--preset", "testing", "--steps", "1", "--out", str(out)])
    assert result.exit_code == 0, result.output
    table = pd.read_csv(out, keep_default_na=False)
    assert len(table) == 15
    assert list(table.columns) == ["attention", "elu", "encoder_blocks", "final_ce", "val_ce", "toy_bleu"]
