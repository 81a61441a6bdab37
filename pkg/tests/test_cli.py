"""
Tests for the levy-extract command line
"""
import json

import pytest

from levy_extract.cli import build_parser, main


@pytest.fixture
def config_file(ou_raw, write_config):
    return write_config(ou_raw)


class TestParser:
    """Test cases for build_parser"""

    def test_defaults(self):
        args = build_parser().parse_args(["all", "--config", "c.json"])

        assert args.command == "all"
        assert args.workers == 1
        assert args.force_stage is None

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["plot"])

    def test_unknown_force_stage(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["all", "--config", "c.json", "--force-stage", "plots"])


class TestMain:
    """Test cases for exit codes"""

    def test_all_succeeds(self, config_file, ou_raw, capsys):
        assert main(["all", "--config", str(config_file)]) == 0

        assert "=== tiny_ou ===" in capsys.readouterr().out
        report = json.loads((config_file.parent / "runs" / "tiny_ou" / "report" / "report.json").read_text())
        assert report["n_points"] == 3

    def test_missing_config_argument(self, capsys):
        assert main(["simulate"]) == 2
        assert "needs --config" in capsys.readouterr().err

    def test_invalid_config_is_exit_code_2(self, ou_raw, write_config, capsys):
        ou_raw["grid"]["bogus"] = 1
        assert main(["simulate", "--config", str(write_config(ou_raw))]) == 2
        assert "grid.bogus" in capsys.readouterr().err

    def test_missing_config_file_is_exit_code_4(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == 4

    def test_missing_stage_input_is_exit_code_4(self, config_file, capsys):
        assert main(["extract", "--config", str(config_file)]) == 4
        assert "run `simulate` first" in capsys.readouterr().err

    def test_train_dataset_needs_arch(self, tmp_path):
        assert main(["train", "--dataset", str(tmp_path), "--out", str(tmp_path / "m")]) == 2

    def test_stage_commands_in_sequence(self, config_file, capsys):
        for command in ("simulate", "train", "extract", "report"):
            assert main([command, "--config", str(config_file)]) == 0
        out = capsys.readouterr().out

        assert "dataset: 3 bursts x 400 samples" in out
        assert "models: 3/3 trained" in out
        assert "jumps not fitted; 3 points" in out
