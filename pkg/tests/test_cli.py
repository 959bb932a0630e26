import subprocess
import sys

import pytest

from krylovlr.cli import main


def run_cli(*argv):
    proc = subprocess.run(
        [sys.executable, "-m", "krylovlr.cli", *argv],
        capture_output=True, text=True)
    return proc


def test_spectrum_golden_values(capsys):
    code = main(["spectrum", "--kind", "exponential", "--alpha", "1.1", "--n", "3"])
    out = capsys.readouterr().out.splitlines()
    assert code == 0
    assert out == ["0.9091", "0.8264", "0.7513"]


def test_lowrank_golden_run(capsys):
    code = main(["lowrank", "--kind", "exponential", "--alpha", "1.1",
                 "--n", "200", "--k", "10", "--t", "60", "--seed", "7"])
    out = capsys.readouterr().out
    assert code == 0
    lines = dict(line.split(" ", 1) for line in out.splitlines() if " " in line)
    assert float(lines["eps_empirical"]) <= 1e-8
    assert int(lines["matvecs"]) == 61


def test_lowrank_with_perturbation(capsys):
    code = main(["lowrank", "--kind", "repeated_pairs", "--alpha", "1.01",
                 "--n", "100", "--k", "10", "--t", "40", "--seed", "3",
                 "--delta", "1e-8"])
    assert code == 0
    out = capsys.readouterr().out
    assert "eps_empirical" in out


def test_experiment_writes_csv(tmp_path, capsys):
    code = main(["experiment", "--preset", "gap_sweep", "--scale", "fast",
                 "--trials", "2", "--out", str(tmp_path), "--seed", "5"])
    assert code == 0
    csv_path = tmp_path / "gap_sweep.csv"
    assert csv_path.exists()
    header = csv_path.read_text().splitlines()[0]
    assert header.startswith("preset,spectrum_id,block_size")


def test_diagnose_prints_reports(capsys):
    code = main(["diagnose", "--kind", "paired_gap", "--alpha", "1.1",
                 "--gmin", "1e-3", "--n", "40", "--k", "6", "--seed", "2"])
    out = capsys.readouterr().out
    assert code == 0
    assert "g_min_over_next" in out
    assert "g_min_b[6] 1" in out
    assert "simulated_start_L_median" in out


def test_unknown_flag_exits_2():
    proc = run_cli("spectrum", "--kind", "exponential", "--bogus", "1")
    assert proc.returncode == 2


def test_config_error_exits_2(capsys):
    # subspace too small for the target rank
    code = main(["lowrank", "--kind", "exponential", "--n", "50",
                 "--k", "10", "--t", "3"])
    assert code == 2


def test_runtime_error_exits_1(capsys):
    code = main(["lowrank", "--kind", "exponential", "--matrix", "/no/such/file.mtx"])
    assert code == 1


def test_lowrank_matrix_market_file(tmp_path, capsys):
    path = tmp_path / "m.mtx"
    path.write_text(
        "%%MatrixMarket matrix coordinate real general\n"
        "4 4 4\n"
        "1 1 4.0\n2 2 3.0\n3 3 2.0\n4 4 1.0\n")
    code = main(["lowrank", "--kind", "exponential", "--matrix", str(path),
                 "--k", "2", "--t", "3", "--seed", "1"])
    out = capsys.readouterr().out
    assert code == 0
    eps = float(out.splitlines()[0].split()[1])
    assert eps <= 1e-8


def test_console_entry_point_runs():
    proc = run_cli("spectrum", "--kind", "wishart_lb", "--n", "4")
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[-1] == "0.0000"
