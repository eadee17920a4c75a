"""End-to-end CLI behavior: subcommands, config files, exit codes."""

import numpy as np
import pytest

from swsdc import harness
from swsdc.cli import main


def read_lines(path):
    return path.read_text(encoding="utf-8").splitlines()


def test_run_writes_cost_report(tmp_path, capsys):
    rc = main(
        [
            "run",
            "--testcase", "gaussian_dome",
            "--scheme", "mlsdc",
            "--rf", "31",
            "--alpha", "0.5",
            "--nodes-fine", "3",
            "--nodes-coarse", "2",
            "--iters", "2",
            "--dt", "900",
            "--tend", "3600",
            "--out", str(tmp_path),
        ]
    )
    assert rc == 0
    report = harness.read_cost_csv(str(tmp_path / "cost.csv"))
    assert report.scheme == "MLSDC(3,2,2,16/31)"
    assert report.fine == report.fine_predicted
    assert "wallclock" in capsys.readouterr().out


def test_spectrum_of_initial_state(tmp_path):
    rc = main(
        [
            "spectrum",
            "--testcase", "rossby_haurwitz",
            "--rf", "31",
            "--tend", "0",
            "--out", str(tmp_path),
        ]
    )
    assert rc == 0
    lines = read_lines(tmp_path / "spectrum.csv")
    assert lines[0] == "n0,max_abs"
    assert len(lines) == 33
    values = np.array([float(line.split(",")[1]) for line in lines[1:]])
    assert values[5] > 0.0 and values[1] > 0.0
    assert np.all(values[[0, 2, 3, 4]] == 0.0)


def test_converge_emits_errors_and_slopes(tmp_path, capsys):
    rc = main(
        [
            "converge",
            "--testcase", "gaussian_dome",
            "--scheme", "sdc",
            "--rf", "31",
            "--nodes-fine", "2",
            "--iters", "2",
            "--tend", "3600",
            "--dts", "1200,600",
            "--ref-dt", "150",
            "--out", str(tmp_path),
        ]
    )
    assert rc == 0
    lines = read_lines(tmp_path / "errors.csv")
    assert lines[0] == "dt,scheme,var,linf,l2,wallclock_s"
    assert len(lines) == 1 + 2 * 3
    out = capsys.readouterr().out
    assert "fitted L_inf slope" in out


def test_speedup_prints_value(capsys):
    rc = main(
        [
            "speedup",
            "--nodes-fine", "3",
            "--nodes-coarse", "2",
            "--iters", "2",
            "--alpha", "0.5",
            "--rf", "256",
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "1.65" in out


def test_config_file_supplies_defaults_and_flags_win(tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text(
        "testcase = gaussian_dome\n"
        "scheme = sdc\n"
        "rf = 31\n"
        "dt = 900\n"
        "tend = 1800  # two steps\n"
        "iters = 2\n"
        "nodes-fine = 2\n"
    )
    rc = main(["run", "--config", str(config), "--iters", "3", "--out", str(tmp_path)])
    assert rc == 0
    report = harness.read_cost_csv(str(tmp_path / "cost.csv"))
    assert report.scheme == "SDC(2,3)"  # iters overridden by the flag


def test_bad_config_key_is_usage_error(tmp_path, capsys):
    config = tmp_path / "bad.cfg"
    config.write_text("warp_speed = 9\n")
    assert main(["run", "--config", str(config)]) == 2
    assert "unknown key" in capsys.readouterr().err


def test_usage_error_exit_code(capsys):
    rc = main(["run", "--dt", "700", "--tend", "1000", "--rf", "15"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_instability_exit_code(tmp_path, capsys):
    rc = main(
        [
            "run",
            "--testcase", "gaussian_dome",
            "--scheme", "irk2",
            "--rf", "31",
            "--nu", "0",
            "--iters", "1",
            "--dt", "30000",
            "--tend", "1200000",
            "--out", str(tmp_path),
        ]
    )
    assert rc == 3
    assert "instability" in capsys.readouterr().err
