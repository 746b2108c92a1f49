import json
import subprocess
import sys

import numpy as np
import pytest

from rotators.cli import main, parse_values
from rotators.io import read_table
from rotators.scenario import ConfigError, parse_config_text, read_config, validate


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_no_arguments_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_nothing_to_run(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "--output-dir", str(tmp_path))
    assert code == 2 and "nothing to run" in err


def test_empty_config(capsys, tmp_path):
    cfg = tmp_path / "empty.cfg"
    cfg.write_text("# nothing here\n")
    code, _, err = run(capsys, "simulate", "--config", str(cfg))
    assert code == 2 and "empty" in err


@pytest.mark.parametrize("argv, field", [
    (["--family", "quadratic", "--Q", "0.5", "--m", "-1"], "m"),
    (["--family", "quadratic"], "Q"),
    (["--family", "quadratic", "--Q", "0.5", "--Omega", "0.3"], "Q"),
    (["--family", "quadratic", "--Q", "1.5"], "Q"),
    (["--family", "quadratic", "--Omega", "0.5"], "Omega"),
    (["--family", "fundamental+", "--Q", "0.5"], "Q"),
    (["--family", "fundamental+", "--profile", "const:2.5"], "profile"),
    (["--family", "fundamental-", "--profile", "const:1.0"], "profile"),
    (["--family", "quadratic", "--Q", "0.5", "--profile", "const:1"], "profile"),
    (["--family", "nonsense"], "family"),
])
def test_invalid_scenarios_name_the_field(capsys, tmp_path, argv, field):
    code, _, err = run(capsys, "simulate", *argv, "--output-dir", str(tmp_path))
    assert code == 2
    assert err.startswith(f"config error: {field}:")


def test_config_parsing(tmp_path):
    text = "family = quadratic  # comment\nq = 0.4\nT = 3\nstabilize = yes\n"
    vals = parse_config_text(text)
    assert vals == {"family": "quadratic", "Q": "0.4", "T": "3", "stabilize": "yes"}
    cfg = validate(vals)
    assert cfg.Q == 0.4 and cfg.stabilize is True
    with pytest.raises(ConfigError, match="bogus"):
        parse_config_text("bogus = 1\n")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("family quadratic\n")
    with pytest.raises(ConfigError, match="config"):
        read_config(tmp_path / "missing.cfg")


def test_time_grid_defaults():
    cfg = validate(dict(family="quadratic", Q=0.5))
    T, dt = cfg.time_grid()
    period = 2 * np.pi / 0.375
    assert T == pytest.approx(10 * period) and dt == pytest.approx(period / 1000)
    assert validate(dict(family="fundamental+")).time_grid() == (pytest.approx(20.0), 1e-3)
    assert validate(dict(family="quadratic", Omega=0.375)).q_value() == pytest.approx(0.5, abs=1e-12)


def test_simulate_writes_outputs(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--family", "quadratic", "--Q", "0.5", "--periods", "1",
                       "--output-dir", str(tmp_path), "--name", "circle")
    assert code == 0
    assert "orbit_radius=0.66666666" in out
    table = read_table(tmp_path / "circle.csv")
    assert len(table["t"]) == 1001
    assert np.allclose(table["tanh_psi"], 0.25, atol=1e-9)
    assert np.allclose(table["omega"], 0.375)
    man = json.loads((tmp_path / "circle.manifest.json").read_text())
    assert man["model"]["family"] == "quadratic" and man["integrator"]["dt"] > 0
    assert man["csv"] == "circle.csv" and "version" in man
    rep = json.loads((tmp_path / "circle.report.json").read_text())
    assert rep["orbit_radius"] == pytest.approx(2 / 3, abs=1e-6)


def test_config_file_with_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("family = quadratic\nQ = 0.3\nperiods = 1\nname = fromfile\n")
    code, _, _ = run(capsys, "simulate", "--config", str(cfg), "--Q", "0.5", "--output-dir", str(tmp_path))
    assert code == 0
    man = json.loads((tmp_path / "fromfile.manifest.json").read_text())
    assert man["config"]["Q"] == 0.5


def test_output_dir_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("ROTATORS_OUTPUT_DIR", str(tmp_path / "env"))
    code, _, _ = run(capsys, "hessian", "--family", "sphere")
    assert code == 0
    assert (tmp_path / "env" / "trajectory.hessian.json").exists()
    # the flag wins over the environment
    code, _, _ = run(capsys, "hessian", "--family", "sphere", "--output-dir", str(tmp_path / "flag"))
    assert (tmp_path / "flag" / "trajectory.hessian.json").exists()


def test_simulate_sphere(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--family", "sphere", "--T", "1", "--output-dir", str(tmp_path))
    assert code == 0 and out.startswith("sphere:")
    table = read_table(tmp_path / "trajectory.csv")
    assert np.abs(table["qq"]).max() < 1e-12


def test_simulate_abort_exit_code(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "--family", "quadratic", "--Q", "0.5", "--periods", "1",
                       "--dt", "3", "--abort-threshold", "1e-12", "--output-dir", str(tmp_path))
    assert code == 1 and "aborted" in err


@pytest.mark.parametrize("family", ["quadratic", "fundamental+", "fundamental-"])
def test_verify_passes(capsys, tmp_path, family):
    extra = ["--Q", "0.5"] if family == "quadratic" else []
    code, out, _ = run(capsys, "verify", "--family", family, *extra, "--samples", "5",
                       "--output-dir", str(tmp_path))
    assert code == 0, out
    assert "FAIL" not in out
    rep = json.loads((tmp_path / "trajectory.verify.json").read_text())
    assert rep["passed"] is True


def test_verify_detects_corruption(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--family", "quadratic", "--Q", "0.5", "--samples", "3",
                       "--inject-corruption", "--output-dir", str(tmp_path))
    assert code == 1
    assert "FAIL first-class" in out and "does not vanish" in out
    assert "3/3 states off the constraint surface" in out


def test_hessian_command(capsys, tmp_path):
    for family, extra, rank in (("quadratic", ["--Q", "0.5"], 5), ("fundamental+", [], 4),
                                ("fundamental-", [], 4), ("sphere", [], 2)):
        code, out, _ = run(capsys, "hessian", "--family", family, *extra, "--output-dir", str(tmp_path))
        assert code == 0 and out.startswith(f"rank {rank} ")
    code, out, _ = run(capsys, "hessian", "--family", "fundamental-", "--method", "fd",
                       "--output-dir", str(tmp_path))
    assert code == 0 and out.startswith("rank 4 ")


def test_parse_values():
    assert parse_values("0.1:0.5:5") == pytest.approx([0.1, 0.2, 0.3, 0.4, 0.5])
    assert parse_values("1,2.5") == [1.0, 2.5]


def test_sweep_Q(capsys, tmp_path):
    code, _, _ = run(capsys, "sweep", "--family", "quadratic", "--param", "Q", "--values", "0.1:0.9:9",
                     "--output-dir", str(tmp_path))
    assert code == 0
    table = read_table(tmp_path / "trajectory_sweep.csv")
    assert np.allclose(table["tanh_psi"], table["Q"] ** 2, atol=1e-12)
    assert np.allclose(table["omega"] * table["rho"], table["tanh_psi"], atol=1e-12)


def test_sweep_point_matches_simulate(capsys, tmp_path):
    args = ["--family", "quadratic", "--Q", "0.5", "--periods", "0.5"]
    assert run(capsys, "simulate", *args, "--output-dir", str(tmp_path / "a"), "--name", "one")[0] == 0
    assert run(capsys, "sweep", *args, "--param", "Q", "--values", "0.5", "--trajectories",
               "--output-dir", str(tmp_path / "b"), "--name", "one")[0] == 0
    assert (tmp_path / "a" / "one.csv").read_bytes() == (tmp_path / "b" / "one_000.csv").read_bytes()


def test_profile_sweep(capsys, tmp_path):
    code, _, _ = run(capsys, "sweep", "--family", "fundamental+", "--T", "2",
                     "--profiles", "const:1.0;sin:1:0.5:1", "--workers", "2", "--output-dir", str(tmp_path))
    assert code == 0
    with open(tmp_path / "trajectory_sweep.csv") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh]
    col = {name: i for i, name in enumerate(header)}
    assert [r[col["profile"]] for r in rows] == ["const:1.0", "sin:1:0.5:1"]
    for r in rows:
        assert abs(float(r[col["C_M"]]) - 1) < 1e-9 and abs(float(r[col["C_J"]]) - 1) < 1e-9
    assert rows[0][col["x1_final"]] != rows[1][col["x1_final"]]


def test_sweep_usage_errors(capsys, tmp_path):
    code, _, _ = run(capsys, "sweep", "--family", "quadratic", "--Q", "0.5", "--output-dir", str(tmp_path))
    assert code == 2
    code, _, _ = run(capsys, "sweep", "--family", "quadratic", "--profiles", "const:1", "--Q", "0.5",
                     "--output-dir", str(tmp_path))
    assert code == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "rotators", "hessian", "--family", "sphere",
                          "--output-dir", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("rank 2")
