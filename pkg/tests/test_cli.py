import json
import textwrap
from pathlib import Path

import numpy as np
import pytest

from vnhc.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, EXIT_VERIFY, main
from vnhc.config import ConfigError, load_config, load_grid
from vnhc.constraint import ProjectionError
from vnhc.dynamics import energy
from vnhc.models import double_pendulum
from vnhc.runner import csv_header, read_csv

REFERENCE_TOML = """
[model]
name = "double_pendulum"
params = {{ m = 1.0, l = 1.0, g = 10.0 }}
derivatives = "{deriv}"

[initial]
q = [0.4, 0.0]
qdot = [0.0, 10.0]
solve_velocity = [0]

[integrator]
h = 0.1
N = {N}

[output]
dir = "{out}"
prefix = "dp"
"""


def write_config(tmp_path, N=100, deriv="analytic", text=None):
    path = tmp_path / "run.toml"
    path.write_text(text if text is not None
                    else REFERENCE_TOML.format(N=N, deriv=deriv, out=tmp_path / "out"))
    return path


def test_simulate_reference_config(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["simulate", "--config", str(cfg)]) == EXIT_OK
    cols = read_csv(tmp_path / "out" / "dp.csv")
    assert list(cols) == ["t", "q1", "q2", "dq1", "dq2", "u1", "E", "phi1", "inv_residual"]
    assert cols["t"].size == 101
    assert cols["t"][0] == 0 and cols["q1"][0] == 0.4 and cols["q2"][0] == 0
    assert cols["dq1"][0] == pytest.approx(-4, abs=1e-12) and cols["dq2"][0] == 10
    assert abs(cols["phi1"][0]) < 1e-12
    summary = json.loads((tmp_path / "out" / "dp_summary.json").read_text())
    assert summary["initial_energy"] == cols["E"][0]
    assert summary["final_energy"] == cols["E"][-1]
    assert summary["max_abs_phi"] == np.max(np.abs(cols["phi1"]))
    assert summary["max_inv_residual"] == np.max(cols["inv_residual"])
    assert summary["final_state"] == [cols[k][-1] for k in ("q1", "q2", "dq1", "dq2")]
    assert summary["wall_time_s"] >= 0


def test_csv_round_trip(tmp_path):
    cfg = write_config(tmp_path, N=40)
    assert main(["simulate", "--config", str(cfg)]) == EXIT_OK
    cols = read_csv(tmp_path / "out" / "dp.csv")
    system, cons, _ = double_pendulum()
    for k in range(cols["t"].size):
        x = np.array([cols[c][k] for c in ("q1", "q2", "dq1", "dq2")])
        assert abs(energy(system, x) - cols["E"][k]) < 1e-12
        assert abs(cons.evaluate(x)[0] - cols["phi1"][k]) < 1e-12


def test_simulate_zero_steps(tmp_path):
    cfg = write_config(tmp_path, N=0)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "z")]) == EXIT_OK
    assert read_csv(tmp_path / "z" / "dp.csv")["t"].size == 1


def test_simulate_fd_mode(tmp_path):
    cfg = write_config(tmp_path, N=20, deriv="fd")
    assert main(["simulate", "--config", str(cfg)]) == EXIT_OK
    cols = read_csv(tmp_path / "out" / "dp.csv")
    assert np.max(cols["inv_residual"]) < 1e-5


def test_simulate_with_plots(tmp_path):
    cfg = write_config(tmp_path, N=20)
    assert main(["simulate", "--config", str(cfg), "--plot"]) == EXIT_OK
    pngs = sorted(p.name for p in (tmp_path / "out").glob("*.png"))
    assert pngs == sorted(["dp_overview.png", "dp_angles.png", "dp_phase_q1.png", "dp_phase_q2.png",
                           "dp_energy.png", "dp_control.png", "dp_constraint.png"])


def test_plot_subcommand(tmp_path, capsys):
    cfg = write_config(tmp_path, N=10)
    main(["simulate", "--config", str(cfg)])
    assert main(["plot", "--csv", str(tmp_path / "out" / "dp.csv"), "--out", str(tmp_path / "fig"),
                 "--wrap"]) == EXIT_OK
    assert (tmp_path / "fig" / "dp_overview.png").stat().st_size > 0
    assert main(["plot", "--csv", str(tmp_path / "missing.csv")]) == EXIT_CONFIG


FREE_TOML = """
[model]
name = "free_particle"
[initial]
q = [0.0, 0.0]
qdot = [1.0, 2.0]
[integrator]
h = 0.5
N = 4
[output]
dir = "{out}"
prefix = "fp"
"""


def test_free_particle_needs_free_flag(tmp_path, capsys):
    cfg = write_config(tmp_path, text=FREE_TOML.format(out=tmp_path / "out"))
    assert main(["simulate", "--config", str(cfg)]) == EXIT_CONFIG
    assert "model has no constraint; use --free" in capsys.readouterr().err
    assert main(["simulate", "--config", str(cfg), "--free"]) == EXIT_OK
    cols = read_csv(tmp_path / "out" / "fp.csv")
    assert list(cols) == ["t", "q1", "q2", "dq1", "dq2", "E", "inv_residual"]
    assert cols["q1"][-1] == 2.0 and cols["q2"][-1] == 4.0


def test_unit_speed_chetaev_run(tmp_path):
    text = FREE_TOML.replace("free_particle", "unit_speed_particle").format(out=tmp_path / "out")
    text += '\n[run]\ndynamics = "chetaev"\n'
    text = text.replace("qdot = [1.0, 2.0]", "qdot = [0.6, 0.8]")
    cfg = write_config(tmp_path, text=text)
    assert main(["simulate", "--config", str(cfg)]) == EXIT_OK
    cols = read_csv(tmp_path / "out" / "fp.csv")
    assert np.max(np.abs(cols["phi1"])) < 1e-12


@pytest.mark.parametrize("bad, match", [
    ("h = 0.1", "h = -0.1"),
    ("N = 100", "N = -1"),
    ('name = "double_pendulum"', 'name = "acrobot"'),
    ("solve_velocity = [0]", "solve_velocity = [0, 1]"),
    ('derivatives = "analytic"', 'derivatives = "symbolic"'),
])
def test_config_errors(tmp_path, bad, match):
    text = REFERENCE_TOML.format(N=100, deriv="analytic", out=tmp_path / "out").replace(bad, match)
    cfg = write_config(tmp_path, text=text)
    assert main(["simulate", "--config", str(cfg)]) == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.toml")]) == EXIT_CONFIG
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")


def test_runtime_error_exit_code(tmp_path):
    # q2 = 2 > pi/2: phi = 0 has no solution for qdot1
    text = REFERENCE_TOML.format(N=5, deriv="analytic", out=tmp_path / "out").replace(
        "q = [0.4, 0.0]", "q = [0.4, 2.0]")
    cfg = write_config(tmp_path, text=text)
    assert main(["simulate", "--config", str(cfg)]) == EXIT_RUNTIME


def test_check_passes_and_reports(tmp_path):
    cfg = write_config(tmp_path)
    report = tmp_path / "report.json"
    assert main(["check", "--config", str(cfg), "--samples", "200", "--seed", "42",
                 "--out", str(report)]) == EXIT_OK
    data = json.loads(report.read_text())
    assert data["all_passed"]
    names = {c["name"] for c in data["checks"]}
    assert {"lift_pairing_vertical_complete", "symplectic_sharp_vertical", "closed_loop_symplectic",
            "projector_algebra", "projection_consistency", "chetaev_match",
            "control_uniqueness", "closed_loop_invariance"} <= names
    for c in data["checks"]:
        assert c["samples"] > 0 and c["passed"]


def test_check_verdicts_stable_across_seeds(tmp_path):
    cfg = write_config(tmp_path)
    codes = {main(["check", "--config", str(cfg), "--samples", "50", "--seed", str(s),
                   "--out", str(tmp_path / f"r{s}.json")]) for s in range(10)}
    assert codes == {EXIT_OK}


def test_check_flipped_sign_fails(tmp_path):
    cfg = write_config(tmp_path)
    report = tmp_path / "flip.json"
    assert main(["check", "--config", str(cfg), "--samples", "50", "--flip-control-sign",
                 "--out", str(report)]) == EXIT_VERIFY
    inv = next(c for c in json.loads(report.read_text())["checks"]
               if c["name"] == "closed_loop_invariance")
    assert not inv["passed"] and inv["max_residual"] >= 1e-4


def test_check_fd_mode(tmp_path):
    cfg = write_config(tmp_path, deriv="fd")
    report = tmp_path / "fd.json"
    assert main(["check", "--config", str(cfg), "--samples", "50", "--out", str(report)]) == EXIT_OK
    inv = next(c for c in json.loads(report.read_text())["checks"]
               if c["name"] == "closed_loop_invariance")
    assert inv["tolerance"] == 1e-5


def test_sweep(tmp_path):
    cfg = write_config(tmp_path, N=30)
    grid = tmp_path / "grid.toml"
    grid.write_text("[grid]\nq1 = [0.4, 0.8, 1.2]\n")
    out = tmp_path / "sweep"
    code = main(["sweep", "--config", str(cfg), "--grid", str(grid), "--out", str(out),
                 "--workers", "2"])
    index = json.loads((out / "dp_index.json").read_text())
    assert [e["point"]["q1"] for e in index["points"]] == [0.4, 0.8, 1.2]
    for e in index["points"][:2]:
        assert e["ok"]
        assert np.linalg.norm(e["summary"]["final_state"]) >= 0
    # q1 = 1.2 diverges at h = 0.1; it is recorded without affecting the others
    assert code == (EXIT_OK if all(e["ok"] for e in index["points"]) else EXIT_RUNTIME)


def test_sweep_single_point_matches_simulate(tmp_path):
    cfg = write_config(tmp_path, N=30)
    grid = tmp_path / "grid.toml"
    grid.write_text("[grid]\nq1 = [0.4]\n")
    assert main(["sweep", "--config", str(cfg), "--grid", str(grid),
                 "--out", str(tmp_path / "sw")]) == EXIT_OK
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "sim")]) == EXIT_OK
    a = (tmp_path / "sw" / "dp_0000.csv").read_text()
    b = (tmp_path / "sim" / "dp.csv").read_text()
    assert a == b


def test_empty_grid(tmp_path):
    cfg = write_config(tmp_path)
    grid = tmp_path / "grid.toml"
    grid.write_text("[grid]\nq1 = []\n")
    assert main(["sweep", "--config", str(cfg), "--grid", str(grid)]) == EXIT_CONFIG
    grid.write_text("[grid]\n")
    with pytest.raises(ConfigError):
        load_grid(grid)


def test_grid_product(tmp_path):
    grid = tmp_path / "g.toml"
    grid.write_text("[grid]\nq1 = [0.1, 0.2]\ndq2 = [1.0, 2.0, 3.0]\n")
    points = load_grid(grid)
    assert len(points) == 6 and points[0] == {"dq2": 1.0, "q1": 0.1}


def test_csv_header():
    assert csv_header(2, 1) == ["t", "q1", "q2", "dq1", "dq2", "u1", "E", "phi1", "inv_residual"]


def test_shipped_configs_load():
    root = Path(__file__).resolve().parents[1] / "configs"
    cfg = load_config(root / "reference_run.toml")
    assert (cfg.h, cfg.N, cfg.q, cfg.qdot[1]) == (0.1, 100, [0.4, 0.0], 10.0)
    assert len(load_grid(root / "q1_grid.toml")) == 3
