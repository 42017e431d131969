import csv
import os

import yaml

from vhsip_landing.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main


def test_drop_success(tmp_path, capsys):
    code = main(["--out", str(tmp_path), "drop", "--height", "0.6"])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "outcome: success" in out
    assert (tmp_path / "config.yaml").exists()
    assert (tmp_path / "drop_log.csv").exists()
    with open(tmp_path / "drop_log.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and "com_z" in rows[0]


def test_drop_failure_exit_code(tmp_path, capsys):
    code = main(["--out", str(tmp_path), "drop", "--height", "0.8",
                 "--vx", "6.0", "--no-log"])
    assert code == EXIT_FAILED
    assert "failure" in capsys.readouterr().out


def test_invalid_scenario_is_config_error(tmp_path, capsys):
    code = main(["--out", str(tmp_path), "drop", "--height", "0.1"])
    assert code == EXIT_CONFIG
    assert "height" in capsys.readouterr().err


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("vhsip:\n  bogus_field: 3\n")
    code = main(["--config", str(cfg), "--out", str(tmp_path), "drop"])
    assert code == EXIT_CONFIG
    assert "bogus_field" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    code = main(["--config", str(tmp_path / "nope.yaml"), "drop"])
    assert code == EXIT_CONFIG


def test_naive_controller_flag(tmp_path, capsys):
    code = main(["--out", str(tmp_path), "drop", "--height", "0.8",
                 "--vx", "2.0", "--controller", "naive", "--no-log"])
    assert code == EXIT_FAILED     # naive cannot absorb 2 m/s


def test_seed_and_out_overrides(tmp_path):
    out = tmp_path / "subdir"
    code = main(["--seed", "5", "--out", str(out), "drop", "--height", "0.6",
                 "--no-log"])
    assert code == EXIT_OK
    with open(out / "config.yaml") as fh:
        saved = yaml.safe_load(fh)
    assert saved["seed"] == 5


def test_sweep_command(tmp_path, capsys):
    cfg = tmp_path / "tiny.yaml"
    cfg.write_text(
        "grids:\n"
        "  polar_heights: [0.8]\n"
        "  polar_nu_max: 0.1\n"
        "  polar_nu_step: 0.1\n"
        "  polar_psi_count: 1\n")
    code = main(["--config", str(cfg), "--out", str(tmp_path), "sweep", "polar"])
    assert code == EXIT_OK
    assert (tmp_path / "envelope.csv").exists()
    assert (tmp_path / "envelope.svg").exists()


def test_check_command(capsys):
    code = main(["check"])
    assert code == EXIT_OK
    assert "all checks passed" in capsys.readouterr().out
