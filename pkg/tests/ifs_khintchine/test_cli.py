"""
Tests for command-line interface.
"""

import os
from unittest.mock import patch

import pytest

from ifs_khintchine.cli import build_overrides, main, setup_argparser
from ifs_khintchine.errors import BracketError, InvariantViolation, PrecisionError


def run_main(argv):
    with pytest.raises(SystemExit) as exc_info:
        main(argv)
    return exc_info.value.code


def test_argument_parser():
    """Test command-line argument parsing."""
    parser = setup_argparser()

    args = parser.parse_args(["dim", "--preset", "cantor3", "--n", "8"])
    assert args.experiment == "dim"
    assert args.preset == "cantor3"
    assert args.n == "8"
    assert not hasattr(args, "seed")

    args = parser.parse_args([
        "--seed", "3",
        "khintchine",
        "--preset", "cantor3",
        "--theta", "constant:1",
        "--ignore-diameter",
        "--k-min", "2",
        "--format", "jsonl",
        "-v",
    ])
    assert args.seed == 3
    assert args.theta == "constant:1"
    assert args.ignore_diameter is True
    assert args.k_min == "2"
    assert args.format == "jsonl"
    assert args.verbose


def test_argument_parser_rejects_unknown_format():
    """Test that --format is limited to registered formats."""
    with pytest.raises(SystemExit):
        setup_argparser().parse_args(["--format", "xml", "dim"])


def test_build_overrides():
    """Test that a subcommand replaces any batch from the config file."""
    args = setup_argparser().parse_args(["--budget-words", "100", "overlap", "--preset", "overlap_demo",
                                         "--k", "2"])
    overrides = build_overrides(args)

    assert overrides["experiment"] == "overlap"
    assert overrides["preset"] == "overlap_demo"
    assert overrides["experiments"] == []
    assert overrides["overlap"] == {"k": "2", "delete": None}
    assert overrides["budgets"] == {"words": 100, "samples": None, "pressure": None}
    assert overrides["seed"] is None


def test_main_dim(tmp_path, capsys):
    """Test a full dimension run."""
    out = tmp_path / "dim.csv"
    assert run_main(["dim", "--preset", "cantor3", "--out", str(out)]) == 0

    assert out.exists()
    assert os.path.exists(str(out) + ".summary.md")
    assert capsys.readouterr().out.startswith("runtime: ")


def test_main_validation_error():
    """Test exit code 2 for a missing preset."""
    assert run_main(["dim"]) == 2


def test_main_without_experiment():
    """Test exit code 2 when nothing is selected."""
    assert run_main([]) == 2


def test_main_invalid_parameter():
    """Test exit code 2 for a malformed parameter."""
    assert run_main(["khintchine", "--preset", "cantor3", "--theta", "wiggly:1"]) == 2


def test_main_budget_exceeded():
    """Test exit code 3 when the sample budget is too small."""
    assert run_main(["khintchine", "--preset", "cantor3", "--samples", "20",
                     "--budget-samples", "10"]) == 3


@pytest.mark.parametrize("error,code", [
    (PrecisionError("too shallow"), 3),
    (BracketError("no crossing"), 4),
    (InvariantViolation("bound broken"), 4),
    (OSError("read-only"), 2),
    (RuntimeError("unexpected"), 4),
])
@patch("ifs_khintchine.cli.run_config")
def test_main_exit_codes(mock_run_config, error, code):
    """Test the mapping from errors to exit codes."""
    mock_run_config.side_effect = error
    assert run_main(["dim", "--preset", "cantor3"]) == code
    mock_run_config.assert_called_once()


@patch("ifs_khintchine.cli.run_config")
@patch("ifs_khintchine.cli.create_config")
def test_main_passes_config_file(mock_create_config, mock_run_config, tmp_path):
    """Test that --config reaches create_config with environment variables enabled."""
    batch = tmp_path / "batch.yaml"
    batch.write_text("experiment: overlap\n")
    mock_run_config.return_value = {}
    mock_create_config.return_value.experiment = "overlap"
    mock_create_config.return_value.experiments = []

    assert run_main(["--config", str(batch)]) == 0

    kwargs = mock_create_config.call_args[1]
    assert kwargs["config_file"] == str(batch)
    assert kwargs["env_vars"] is True
    mock_create_config.return_value.validate.assert_called_once()


@patch("ifs_khintchine.cli.run_config")
def test_main_missing_config_file(mock_run_config, tmp_path):
    """Test exit code 2 when the file named by --config does not exist."""
    assert run_main(["--config", str(tmp_path / "absent.yaml")]) == 2
    mock_run_config.assert_not_called()


def test_main_budget_pressure_flag():
    """Test that --budget-pressure limits the Bowen level."""
    args = setup_argparser().parse_args(["--budget-pressure", "64", "dim", "--preset", "cf12"])
    assert build_overrides(args)["budgets"]["pressure"] == 64
    assert run_main(["--budget-pressure", "64", "dim", "--preset", "cf12", "--n", "7"]) == 3
