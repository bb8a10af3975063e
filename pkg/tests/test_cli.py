import json
import subprocess
import sys

import numpy as np
import pytest

from fracpso.cli import main, read_observations


def run_cli(*argv):
    return main([str(a) for a in argv])


def parse_eval(out):
    vals = {}
    for line in out.splitlines():
        if "=" in line:
            k, v = line.split("=")
            vals[k.strip()] = float(v)
    return vals


@pytest.fixture
def paper_config(tmp_path):
    path = tmp_path / "paper.json"
    path.write_text(json.dumps({
        "target": [[0.8, 2.2], [0.5, 0.9], [1.0, 0.0]],
        "dt": 0.05,
        "t_end": 10.0,
        "swarm": {"pop": 20, "iters": 200, "seed": 3},
        "output": {"dir": str(tmp_path / "out")},
    }))
    return path


# ------------------------------------------------------------- simulate


def test_simulate_paper_target_row_count(tmp_path):
    out = tmp_path / "y.csv"
    assert run_cli("simulate", "--target", "paper", "--input", "step", "--dt", 0.05, "--t-end", 10, "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,y"
    assert len(lines) == 201


def test_simulate_static_gain(tmp_path):
    out = tmp_path / "y.csv"
    assert run_cli("simulate", "--coeff", 2, "--order", 0, "--out", out) == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert np.all(data[:, 1] == 0.5)


def test_simulate_integer_tf_uses_rk4(tmp_path):
    out = tmp_path / "y.csv"
    assert run_cli("simulate", "--target", "1:1,1:0", "--out", out) == 0
    t, y = np.loadtxt(out, delimiter=",", skiprows=1).T
    assert np.abs(y - (1 - np.exp(-t))).max() <= 1e-6


def test_simulate_to_stdout(capsys):
    assert run_cli("simulate", "--target", "1:0", "--t-end", 1, "--dt", 0.1) == 0
    assert capsys.readouterr().out.startswith("t,y\n0,1\n")


def test_csv_parses_back_to_signal(tmp_path):
    out = tmp_path / "y.csv"
    run_cli("simulate", "--target", "paper", "--input", "ramp", "--dt", 0.1, "--t-end", 5, "--out", out)
    obs = read_observations(str(out), "ramp")
    assert obs.grid.dt == 0.1
    assert obs.grid.n_samples == 50


def test_rk4_scheme_rejects_fractional_target(tmp_path, capsys):
    assert run_cli("simulate", "--target", "paper", "--scheme", "rk4", "--out", tmp_path / "y.csv") == 2
    assert not (tmp_path / "y.csv").exists()


# ---------------------------------------------------------------- eval


def test_eval_paper_point(capsys):
    assert run_cli("eval", "--target", "paper", "--coeffs", "0.1772,0.7329,0.4463,1.0265") == 0
    vals = parse_eval(capsys.readouterr().out)
    assert 0 < vals["F"] <= 2.0
    assert vals["F"] == pytest.approx(vals["F1 (step)"] + vals["F2 (ramp)"], rel=1e-15)


def test_eval_all_zero_is_penalized(capsys):
    assert run_cli("eval", "--target", "paper", "--coeffs", "0,0,0,0") == 0
    assert parse_eval(capsys.readouterr().out)["F"] == 1e9


def test_eval_generator_against_own_observations(capsys):
    assert run_cli("eval", "--target", "1.2:0,0.7:1,1:2", "--coeffs", "1,0.7,1.2") == 0
    assert parse_eval(capsys.readouterr().out)["F"] == 0.0


def test_simulate_eval_round_trip(tmp_path, capsys):
    out = tmp_path / "y.csv"
    run_cli("simulate", "--target", "0.3:3,1.1:2,0.9:1,1:0", "--input", "ramp", "--out", out)
    assert run_cli("eval", "--target", "0.3:3,1.1:2,0.9:1,1:0", "--coeffs", "0.3,1.1,0.9,1",
                   "--observations", out, "--input", "ramp") == 0
    assert parse_eval(capsys.readouterr().out)["F"] <= 1e-12


def test_eval_prints_many_digits(capsys):
    run_cli("eval", "--target", "paper", "--coeffs", "0.2,0.7,0.4,1.0")
    line = capsys.readouterr().out.splitlines()[0]
    mantissa = line.split("=")[1].strip().split("e")[0].replace(".", "").lstrip("0")
    assert len(mantissa) >= 10


def test_eval_coefficient_count_mismatch():
    assert run_cli("eval", "--target", "paper", "--coeffs", "1,2") == 2


# ------------------------------------------------------------- identify


def test_identify_writes_report_and_overlays(paper_config, tmp_path, capsys):
    assert run_cli("identify", "--config", paper_config, "--iters", 40) == 0
    out = tmp_path / "out"
    report = json.loads((out / "report.json").read_text())
    for key in ("template_powers", "coefficients", "best_f", "f_step", "f_ramp", "history", "config", "seed", "curves"):
        assert key in report
    assert report["best_f"] == report["f_step"] + report["f_ramp"]
    for kind in ("step", "ramp"):
        lines = (out / f"overlay_{kind}.csv").read_text().splitlines()
        assert lines[0] == "t,observed,model"
        assert len(lines) == 201
    assert "F = " in capsys.readouterr().out


def test_identify_dominates_published_point(paper_config, tmp_path, capsys):
    assert run_cli("eval", "--config", paper_config, "--coeffs", "0.1772,0.7329,0.4463,1.0265") == 0
    published = parse_eval(capsys.readouterr().out)["F"]
    assert run_cli("identify", "--config", paper_config) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["best_f"] <= published


def test_identify_is_byte_deterministic(paper_config, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli("identify", "--config", paper_config, "--iters", 30, "--workers", 4, "--out", a) == 0
    assert run_cli("identify", "--config", paper_config, "--iters", 30, "--workers", 4, "--out", b) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_identify_from_observation_file(tmp_path, capsys):
    obs = tmp_path / "obs.csv"
    run_cli("simulate", "--target", "1:2,0.7:1,1.2:0", "--out", obs)
    assert run_cli("identify", "--observations", obs, "--powers", "2,1,0", "--seed", 1,
                   "--out", tmp_path / "fit") == 0
    report = json.loads((tmp_path / "fit" / "report.json").read_text())
    assert report["config"]["inputs"] == ["step"]
    assert report["f_ramp"] == 0.0
    assert report["best_f"] <= 1e-4


def test_missing_config_exits_2_without_output(tmp_path, capsys):
    assert run_cli("identify", "--config", tmp_path / "nope.json", "--out", tmp_path / "res") == 2
    assert not (tmp_path / "res").exists()
    assert "not found" in capsys.readouterr().err


def test_bad_config_is_field_addressed(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"target": [[1, 1]], "swarm": {"pop": 1}}')
    assert run_cli("identify", "--config", path) == 2
    assert "pop" in capsys.readouterr().err
    path.write_text('{"target": [[1, 1]],\n "swarm": {"colour": 1}}')
    assert run_cli("identify", "--config", path) == 2
    assert "swarm.colour" in capsys.readouterr().err
    path.write_text('{"target": [[1, 1]],\n "dt": }')
    assert run_cli("identify", "--config", path) == 2
    assert f"{path}:2:" in capsys.readouterr().err


def test_simulation_error_exits_3(tmp_path, capsys):
    # y' = y + u diverges: GL scheme output stops being finite
    out = tmp_path / "y.csv"
    assert run_cli("simulate", "--target", "1:1,-1:0", "--scheme", "gl", "--dt", 0.5, "--t-end", 1500, "--out", out) == 3
    assert not out.exists()


# -------------------------------------------------------------- weights


def test_weights(capsys):
    assert run_cli("weights", "--order", 2.2, "--count", 5) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "j,w"
    assert lines[1] == "0,1"
    assert len(lines) == 7


def test_weights_first_order(capsys):
    run_cli("weights", "--order", 1, "--count", 5)
    w = [float(l.split(",")[1]) for l in capsys.readouterr().out.splitlines()[1:]]
    assert w == [1, -1, 0, 0, 0, 0]


def test_weights_half_order(capsys):
    run_cli("weights", "--order", 0.5, "--count", 2)
    w = [float(l.split(",")[1]) for l in capsys.readouterr().out.splitlines()[1:]]
    assert w == [1, -0.5, -0.125]


def test_weights_bad_order():
    assert run_cli("weights", "--order", -1, "--count", 3) == 2


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "fracpso.cli", "weights", "--order", "1", "--count", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout == "j,w\n0,1\n1,-1\n"
