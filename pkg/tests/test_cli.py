# tests/test_cli.py

import json

import pytest

from app.cli import EXIT_INVALID, EXIT_OK, EXIT_STAGE_FAILED, build_parser, load_config, main


def test_flags_override_the_config_document(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"m": 0.1, "T": 9.0, "grid_neck": [49, 17]}), encoding="utf-8")
    args = build_parser().parse_args(["glue", "--config", str(path), "--mass", "0.2", "--grid-exterior", "64x128"])
    config = load_config(args)
    assert config.m == 0.2
    assert config.T == 9.0
    assert config.grid_neck == (49, 17)
    assert config.grid_exterior == (64, 128)


def test_sweep_lists_are_parsed():
    args = build_parser().parse_args(["sweep", "--masses", "0.05,0.02", "--Ts", "8,9,10"])
    config = load_config(args)
    assert config.sweep_masses == [0.05, 0.02]
    assert config.sweep_T == [8.0, 9.0, 10.0]


def test_match_refinement_reaches_the_grid():
    config = load_config(build_parser().parse_args(["glue", "--match-refinement", "80"]))
    assert config.grid.match_refinement == 80.0
    assert load_config(build_parser().parse_args(["glue"])).grid.exterior == (160, 512)


def test_malformed_grid_is_a_usage_error():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["glue", "--grid-neck", "97"])


def test_invalid_mass_exits_with_two():
    assert main(["glue", "--mass=-1"]) == EXIT_INVALID


def test_invalid_config_document_exits_with_two(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"T": 2.0}), encoding="utf-8")
    assert main(["glue", "--config", str(path)]) == EXIT_INVALID
    assert main(["glue", "--config", str(tmp_path / "missing.json")]) == EXIT_INVALID


def test_mp_info(tmp_path, capsys):
    assert main(["mp-info", "--mass", "1", "--out", str(tmp_path)]) == EXIT_OK
    assert '"deficit"' in capsys.readouterr().out
    with open(tmp_path / "analytic.json", encoding="utf-8") as f:
        assert json.load(f)["mu"] == 2.0


def test_empty_sweep_exits_with_two():
    assert main(["sweep", "--mass", "0.05"]) == EXIT_INVALID


def test_failed_stage_exits_with_one(tmp_path):
    argv = ["glue", "--mass", "0.05", "--T", "8", "--r-out", "10", "--out", str(tmp_path / "run")]
    assert main(argv) == EXIT_STAGE_FAILED
    assert (tmp_path / "run" / "report.json").is_file()
