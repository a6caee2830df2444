import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from etapt import cli, dynamics, verify
from etapt.config import parse_config

SMALL = {"dim": 32, "buffer": 4, "gamma": 0.3, "t_end": 1.0, "padding": 64, "spectrum_count": 8}
DRIVE = {"kind": "sinusoidal", "c0": 1.0, "c1": 0.3, "omega": 2.0, "phase": 0.0}


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(line for line in fh if not line.startswith("#")))


def without_wall_time(text):
    data = json.loads(text)
    del data["metadata"]["wall_time"]
    return data


# --- verify ------------------------------------------------------------------------------


def test_verify_passes_on_small_model(tmp_path):
    out = tmp_path / "report.json"
    code = cli.main(["verify", "--config", write_config(tmp_path, SMALL), "--out", str(out)])
    report = json.loads(out.read_text())
    assert code == 0 and report["passed"]
    assert all(c["passed"] for c in report["checks"])
    assert {c["name"] for c in report["checks"]} >= {"pseudo_hermiticity", "heisenberg", "evolution_fidelity"}
    meta = report["metadata"]
    assert meta["dim"] == 32 and meta["gamma"] == 0.3 and "tolerances" in meta and "wall_time" in meta


def test_verify_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["verify", "--config", cfg, "--out", str(a)]) == 0
    assert cli.main(["verify", "--config", cfg, "--out", str(b), "--threads", "4"]) == 0
    assert without_wall_time(a.read_text()) == without_wall_time(b.read_text())
    strip = lambda p: [line for line in p.read_text().splitlines() if "wall_time" not in line]
    assert strip(a) == strip(b)


def test_verify_fails_when_constraint_broken(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = cli.main(["verify", "--config", write_config(tmp_path, SMALL), "--gamma", repr(math.pi / 4),
                     "--omega0", "2", "--g0", "1.25", "--out", str(out)])
    assert code == 1
    report = json.loads(out.read_text())
    failed = {c["name"] for c in report["checks"] if not c["passed"]}
    assert {"pseudo_hermiticity", "heisenberg"} <= failed
    assert "failed: pseudo_hermiticity" in capsys.readouterr().out


def test_verify_rejects_tiny_space(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert cli.main(["verify", "--dim", "4", "--out", str(out)]) == 2
    assert not out.exists()
    assert "configuration error" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["verify", "--config", "/nonexistent/config.json"],
    ["evolve", "--g0", "1.0"],
    ["scan", "--dt", "0"],
])
def test_configuration_errors_exit_two(argv):
    assert cli.main(argv) == 2


def test_usage_errors_exit_two():
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == 2


def test_unwritable_output_exits_two(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    assert cli.main(["spectrum", "--config", cfg, "--out", str(tmp_path / "missing" / "s.csv")]) == 2


def test_report_encodes_non_finite_values():
    cfg = parse_config(SMALL)
    report = verify.VerificationReport(
        (verify.ResidualReport("x", math.inf, 1.0),), (), {"v": math.nan})
    data = json.loads(report.to_json())
    assert data["checks"][0]["value"] == "inf" and data["metadata"]["v"] == "nan"
    assert not data["passed"]
    assert cfg.dim == 32


def test_verify_skips_quadratic_forms_beyond_quarter_turn():
    cfg = parse_config({**SMALL, "gamma": math.pi / 4, "t_end": 0.5})
    report = verify.run_verify(cfg)
    skipped = {name for name, _ in report.skipped}
    assert {"eta_tilde_square", "eta_orthonormality"} <= skipped
    assert report.passed


# --- evolve ----------------------------------------------------------------------------------


def test_evolve_csv(tmp_path):
    data = {**SMALL, "gamma": math.pi / 6, "omega": DRIVE}
    out = tmp_path / "evolve.csv"
    assert cli.main(["evolve", "--config", write_config(tmp_path, data), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["t", "fidelity_vs_analytic", "eta_norm", "euclid_norm", "theta"]
    assert len(rows) == 1002
    body = np.array(rows[1:], dtype=float)
    assert body[:, 1].min() >= 1 - 1e-6
    assert np.max(np.abs(body[:, 2] - body[0, 2])) <= 1e-8
    # 17 significant digits make the text round-trip exactly
    assert float(rows[500][0]) == pytest.approx(0.499, abs=1e-15)
    assert all(len(v.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 17 for v in rows[2])


def test_evolve_zero_length(tmp_path):
    out = tmp_path / "e.csv"
    assert cli.main(["evolve", "--config", write_config(tmp_path, SMALL), "--t-end", "0", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 2
    assert float(rows[1][0]) == 0.0
    # the padded and nominal metric columns agree to rounding
    assert float(rows[1][1]) == pytest.approx(1.0, abs=1e-14)


def test_evolve_hermitian_limit_keeps_euclidean_norm(tmp_path):
    out = tmp_path / "e.csv"
    assert cli.main(["evolve", "--config", write_config(tmp_path, SMALL), "--gamma", "0", "--out", str(out)]) == 0
    body = np.array(read_csv(out)[1:], dtype=float)
    assert np.ptp(body[:, 3]) < 1e-10


def test_evolve_divergence_writes_trailing_comment(tmp_path, monkeypatch, capsys):
    real = dynamics.integrate

    def diverging(params, psi0, config):
        traj = real(params, psi0, config)
        partial = dynamics.Trajectory(traj.times[:4], traj.states[:4], traj.eta_norms[:4], traj.theta[:4])
        raise dynamics.DivergenceError("state became non-finite after step 3 (t = 0.003)", partial)

    monkeypatch.setattr(verify, "integrate", diverging)
    out = tmp_path / "e.csv"
    assert cli.main(["evolve", "--config", write_config(tmp_path, SMALL), "--out", str(out)]) == 1
    lines = out.read_text().splitlines()
    assert len(lines) == 6
    assert lines[-1].startswith("# diverged:")
    assert "DIVERGED" in capsys.readouterr().out


def test_evolve_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cli.main(["evolve", "--config", cfg, "--out", str(a)])
    cli.main(["evolve", "--config", cfg, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


# --- scan ---------------------------------------------------------------------------------------


def test_scan_default_grid(tmp_path):
    cfg = write_config(tmp_path, {"dim": 32, "buffer": 4})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["scan", "--config", cfg, "--out", str(a)]) == 0
    assert cli.main(["scan", "--config", cfg, "--out", str(b), "--threads", "4"]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = read_csv(a)
    assert rows[0] == ["omega0", "g0", "gamma", "ph_residual", "heis_residual", "max_im_eig", "error"]
    assert len(rows) == 10
    table = {(float(r[0]), float(r[1])): r for r in rows[1:]}
    row = table[(2.0, 1.0)]
    assert float(row[2]) == pytest.approx(0.7853982, abs=1e-7)
    assert float(row[3]) < 1e-9 and float(row[5]) < 1e-8


def test_scan_hermitian_point_and_row_count():
    cfg = parse_config({"dim": 32, "buffer": 4, "scan": {"omega0": [1.0, 2.0, 2], "g0": [0.0, 0.5, 2]}})
    rows = verify.run_scan(cfg)
    assert len(rows) == 4
    hermitian = rows[0]
    assert hermitian[:2] == [1.0, 0.0]
    assert hermitian[2] == 0.0 and max(hermitian[3:6]) < 1e-12 and hermitian[6] == ""
    doubled = verify.run_scan(cfg.with_overrides(scan={"omega0": [1.0, 2.0, 4], "g0": [0.0, 0.5, 2]}))
    assert len(doubled) == 2 * len(rows)


def test_scan_flags_degenerate_point():
    cfg = parse_config({"dim": 32, "buffer": 4, "scan": {"omega0": [0.0, 1.0, 2], "g0": [0.0, 1.0, 2]}})
    rows = verify.run_scan(cfg)
    assert len(rows) == 4
    assert rows[0][6] and math.isnan(rows[0][3])
    assert rows[1][6] and rows[1][2] == pytest.approx(math.pi / 2)
    assert rows[3][6] == ""
    text = verify.scan_csv(rows)
    assert text.splitlines()[1].startswith("0,0,nan,nan")


# --- spectrum ----------------------------------------------------------------------------------


def test_spectrum_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert cli.main(["spectrum", "--dim", "128", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["n", "re", "im"] and len(rows) == 17
    values = np.array(rows[1:], dtype=float)
    np.testing.assert_allclose(values[:, 1], 2 * math.sqrt(2) * (0.5 * np.arange(16) + 0.25), atol=1e-6)
    assert float(rows[1][1]) == pytest.approx(0.7071068, abs=1e-7)


# --- entry points ---------------------------------------------------------------------------------


def test_module_entry_point(tmp_path):
    out = tmp_path / "s.csv"
    proc = subprocess.run([sys.executable, "-m", "etapt", "spectrum", "--dim", "32", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    # the default count is min(16, dim / 4)
    assert "spectrum: 8 eigenvalues" in proc.stdout
    assert len(read_csv(out)) == 9


def test_default_output_names(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert cli.main(["spectrum", "--dim", "32"]) == 0
    assert (tmp_path / "spectrum.csv").exists()
    text = io.StringIO((tmp_path / "spectrum.csv").read_text()).readline()
    assert text.strip() == "n,re,im"
