import json
import math

import pytest

from pendamp.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_constants_reports_D(capsys):
    code, out = run_cli(capsys, "constants")
    assert code == 0
    payload = json.loads(out)
    assert abs(payload["D"] - 0.925968526) <= 1e-8
    assert payload["tau_minus_2"] == pytest.approx(3.3366986395, abs=1e-6)
    assert payload["Phi0"] == pytest.approx(0.2105, abs=5e-5)


def test_constants_deterministic(capsys):
    _, out1 = run_cli(capsys, "constants")
    _, out2 = run_cli(capsys, "constants")
    assert out1 == out2


def test_tau_branches_agree_at_separatrix(capsys):
    code, out = run_cli(capsys, "tau", "--E", "2.0")
    assert code == 0
    payload = json.loads(out)
    assert payload["tau_plus"] == 0.0
    assert payload["tau"] == pytest.approx(payload["tau_minus_2"], abs=1e-12)


def test_tau_rejects_nonpositive_energy(capsys):
    code, _ = run_cli(capsys, "tau", "--E", "-1.0")
    assert code == 1


def test_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["tau"])  # missing required --E
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_simulate_report(capsys, tmp_path):
    traj = tmp_path / "traj.csv"
    code, out = run_cli(capsys, "simulate", "--x0", "-2.0", "--y0", "0.0",
                        "--epsilon", "0.1", "--trajectory-out", str(traj))
    assert code == 0
    payload = json.loads(out)
    assert payload["damping_time"] > payload["lower_time_bound"] - 1.0
    assert payload["switch_count"] >= 1
    modes = {e["mode"] for e in payload["phase_log"]}
    assert "terminal capture" in modes
    assert traj.read_text().splitlines()[0] == "t,x,y,phi,psi,u,E"


def test_sweep_csv(capsys, tmp_path):
    out_path = tmp_path / "scaling.csv"
    code, _ = run_cli(capsys, "sweep", "--x0", "-2.0", "--y0", "0.0",
                      "--eps-list", "0.2,0.1", "--format", "csv", "--out", str(out_path))
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert lines[0] == "epsilon,T,N,epsT,epsN"
    assert len(lines) == 3


def test_sweep_json(capsys):
    code, out = run_cli(capsys, "sweep", "--x0", "-2.0", "--y0", "0.0",
                        "--eps-list", "0.2,0.1")
    assert code == 0
    payload = json.loads(out)
    assert len(payload["rows"]) == 2
    assert payload["extrapolated_epsT"] > 0


def test_extremals_report(capsys):
    code, out = run_cli(capsys, "extremals", "--epsilon", "0.5", "--grid", "24")
    assert code == 0
    payload = json.loads(out)
    assert payload["max_switchings"] >= 1
    assert len(payload["runs"]) >= 48
    assert payload["sturm"]["spacing_ok"] is True
    assert "argmax_phiT" in payload


def test_euler_table(capsys):
    code, out = run_cli(capsys, "euler", "--x0", "2.0", "--eps-list", "0.02,0.01")
    assert code == 0
    payload = json.loads(out)
    assert len(payload["rows"]) == 2
    assert payload["rows"][1]["sup_error"] < payload["rows"][0]["sup_error"]


def test_linear_subcommand(capsys):
    code, out = run_cli(capsys, "linear", "--x0", "2.0", "--y0", "0.0")
    assert code == 0
    payload = json.loads(out)
    assert payload["T"] == pytest.approx(math.pi, abs=1e-9)
    assert payload["switches"] == 0

    code, out = run_cli(capsys, "linear", "--support", "0", "1", str(math.pi))
    assert code == 0
    payload = json.loads(out)
    assert payload["support"] == pytest.approx(2.0, abs=1e-12)


def test_config_file_overrides_defaults(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("tol=1e-6\n")
    code, out = run_cli(capsys, "constants", "--config", str(cfg))
    assert code == 0
    assert json.loads(out)["config"]["tol"] == 1e-6


def test_config_rejects_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("frobnicate=1\n")
    with pytest.raises(SystemExit) as exc:
        main(["constants", "--config", str(cfg)])
    assert exc.value.code == 2


def test_out_writes_file(capsys, tmp_path):
    out_path = tmp_path / "constants.json"
    code, out = run_cli(capsys, "constants", "--out", str(out_path))
    assert code == 0
    assert out == ""
    assert abs(json.loads(out_path.read_text())["D"] - 0.925968526) <= 1e-8


def test_bifurcations_small(capsys):
    code, out = run_cli(capsys, "bifurcations", "--n-max", "1", "--tol", "0.5",
                        "--grid", "64")
    assert code == 0
    payload = json.loads(out)
    assert len(payload["rows"]) == 1
    assert payload["rows"][0]["epsilon_n"] == pytest.approx(9.2, abs=0.6)


def test_verify_fast_passes(capsys):
    code, out = run_cli(capsys, "verify", "--fast")
    assert code == 0
    assert "FAIL" not in out
    assert out.count("PASS") >= 10
    assert "SKIP" in out


def test_extremals_deterministic(capsys):
    _, out1 = run_cli(capsys, "extremals", "--epsilon", "0.6", "--grid", "16")
    _, out2 = run_cli(capsys, "extremals", "--epsilon", "0.6", "--grid", "16")
    assert out1 == out2
