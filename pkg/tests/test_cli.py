import csv
import json

import pytest
import yaml

from ibcontrol.cli import EXIT_INPUT, EXIT_SOLVER, OUT_ENV, main
from ibcontrol.scenario import builtin_scenario, dump_scenario, load_scenario
from ibcontrol.synthetic import constant_demand_scenario


def read_plan(path):
    with open(path, newline="") as fh:
        return {(int(r["section"]), int(r["k_c"])): float(r["eps"]) for r in csv.DictReader(fh)}


@pytest.fixture(scope="module")
def optimized(tmp_path_factory):
    out = tmp_path_factory.mktemp("opt")
    assert main(["optimize", "--scenario", "uncongested", "--out", str(out)]) == 0
    return out


def test_check_builtin(capsys):
    assert main(["check", "--scenario", "uncongested"]) == 0
    assert "valid" in capsys.readouterr().out


def test_check_bad_control_step(tmp_path, capsys):
    doc = yaml.safe_load(dump_scenario(builtin_scenario("uncongested")))
    doc["control"]["T_c"] = 65.0
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(doc))
    assert main(["check", "--scenario", str(path)]) == EXIT_INPUT
    assert "control.T_c" in capsys.readouterr().err


def test_check_missing_demands(tmp_path, capsys):
    doc = yaml.safe_load(dump_scenario(builtin_scenario("uncongested")))
    del doc["demands"]
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(doc))
    assert main(["check", "--scenario", str(path)]) == EXIT_INPUT
    assert "demands" in capsys.readouterr().err


def test_unknown_scenario(capsys):
    assert main(["check", "--scenario", "no-such-thing"]) == EXIT_INPUT


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["optimize", "--scenario", "uncongested", "--eps-abs", "-1"])
    assert exc.value.code == 2


def test_simulate_no_control(tmp_path, capsys):
    assert main(["simulate", "--scenario", "uncongested", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "no-control TTS" in out
    summary = json.loads((tmp_path / "trajectory.summary.json").read_text())
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert set(manifest["files"]) == {"trajectory.csv", "trajectory.summary.json", "density.csv"}
    assert f"{summary['tts']:.6f}" in out


def test_simulate_zero_demand_decay(tmp_path, capsys):
    rho0, L, T_s, K = 20.0, 0.5, 10.0, 12
    sc = constant_demand_scenario(n=1, K_c=2, demand_a=0.0, demand_b=0.0, length=L, rho0_a=rho0, rho0_b=rho0)
    path = tmp_path / "zero.yaml"
    path.write_text(dump_scenario(sc))
    assert main(["simulate", "--scenario", str(path), "--out", str(tmp_path / "run")]) == 0
    r = 1.0 - 100.0 * (T_s / 3600) / L
    expected = (T_s / 3600) * L * 2 * rho0 * sum(r**k for k in range(1, K + 1))
    summary = json.loads((tmp_path / "run" / "trajectory.summary.json").read_text())
    assert summary["tts"] == pytest.approx(expected, rel=1e-12)


def test_optimize_outputs(optimized):
    plan = read_plan(optimized / "plan.csv")
    assert len(plan) == 6 * 60
    assert all(0.16 - 1e-9 <= v <= 0.84 + 1e-9 for v in plan.values())
    assert (optimized / "holding_back.csv").read_text().strip() == "direction,section,k,slack"
    summary = json.loads((optimized / "summary.json").read_text())
    assert summary["status"] == "optimal" and summary["holding_back"] == "none"
    manifest = json.loads((optimized / "manifest.json").read_text())
    assert manifest["volatile"] == ["timing.json"]
    assert "plan.csv" in manifest["files"] and "solution.qp" in manifest["files"]
    assert "timing.json" not in manifest["files"]


def test_optimize_deterministic(optimized, tmp_path):
    assert main(["optimize", "--scenario", "uncongested", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "plan.csv").read_bytes() == (optimized / "plan.csv").read_bytes()
    assert (tmp_path / "manifest.json").read_bytes() == (optimized / "manifest.json").read_bytes()


def test_optimize_then_simulate_then_report(optimized, tmp_path):
    assert main(["simulate", "--scenario", "uncongested", "--plan", str(optimized / "plan.csv"),
                 "--out", str(tmp_path / "sim")]) == 0
    assert main(["report", "--scenario", "uncongested", "--capacity-drop", "on", "--strict",
                 "--out", str(tmp_path / "rep")]) == 0
    with open(tmp_path / "rep" / "report.csv", newline="") as fh:
        row = next(csv.DictReader(fh))
    sim = json.loads((tmp_path / "sim" / "trajectory.summary.json").read_text())
    opt = json.loads((optimized / "summary.json").read_text())
    assert float(row["sim_tts"]) == sim["tts"]
    assert float(row["qp_tts"]) == opt["qp_tts"]
    assert float(row["no_control_tts"]) == opt["no_control_tts"]
    assert (tmp_path / "rep" / "uncongested" / "cd-on" / "plan.csv").read_bytes() == \
        (optimized / "plan.csv").read_bytes()


def test_solver_failure_exit_code(tmp_path, capsys):
    code = main(["optimize", "--scenario", "uncongested", "--max-iter", "1", "--out", str(tmp_path)])
    assert code == EXIT_SOLVER
    assert "solver failure" in capsys.readouterr().err


def test_plan_dimension_mismatch(tmp_path, capsys):
    path = tmp_path / "plan.csv"
    path.write_text("section,k_c,eps\n7,0,0.5\n")
    assert main(["simulate", "--scenario", "uncongested", "--plan", str(path), "--out", str(tmp_path / "o")]) == 1


def test_plan_out_of_bounds(tmp_path, optimized):
    text = (optimized / "plan.csv").read_text().splitlines()
    text[1] = "1,0,0.95"
    path = tmp_path / "plan.csv"
    path.write_text("\n".join(text) + "\n")
    assert main(["simulate", "--scenario", "uncongested", "--plan", str(path), "--out", str(tmp_path / "o")]) == 1


def test_env_out_root(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path))
    assert main(["project", "--scenario", "congested"]) == 0
    run = tmp_path / "project-congested"
    assert (run / "projected.csv").exists() and (run / "manifest.json").exists()


def test_dump_round_trip(tmp_path):
    assert main(["dump", "--scenario", "congested", "--capacity-drop", "both", "--problem",
                 "--out", str(tmp_path)]) == 0
    on = load_scenario(tmp_path / "cd-on" / "scenario.yaml")
    off = load_scenario(tmp_path / "cd-off" / "scenario.yaml")
    assert on == builtin_scenario("congested")
    assert (off.control.lambda_d, off.control.lambda_r) == (0.0, 1.0)
    assert (tmp_path / "cd-off" / "problem.qp").read_text().startswith("# ibcontrol-qp 1")


def test_report_both_variants(tmp_path, capsys):
    assert main(["report", "--scenario", "uncongested", "--out", str(tmp_path), "--strict"]) == 0
    lines = (tmp_path / "report.csv").read_text().splitlines()
    assert [line.split(",")[1] for line in lines[1:]] == ["on", "off"]
    assert "impr QP %" in capsys.readouterr().out


def test_entry_overload_reported(tmp_path, capsys):
    sc = constant_demand_scenario(n=1, K_c=60, demand_a=11000.0, demand_b=500.0)
    path = tmp_path / "overload.yaml"
    path.write_text(dump_scenario(sc))
    assert main(["optimize", "--scenario", str(path), "--out", str(tmp_path / "o")]) == EXIT_SOLVER
    err = capsys.readouterr().err
    assert "primal_infeasible" in err and "first section" in err
