"""Command-line entry point: ``ibcontrol <check|simulate|project|optimize|report|dump>``.

Every command writes plain files into one run directory together with a
``manifest.json`` (command, arguments, file checksums).  Contents never hold
timestamps; wall-clock timings go to ``timing.json``, which the manifest marks
as volatile.

Exit codes: 0 success, 1 invalid input, 2 usage error, 3 solver failure,
4 report invariant violated under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path

from . import __version__
from .analysis import (
    AnalysisReport,
    compare,
    density_field,
    eps_surface,
    run_variant,
    write_density_csv,
    write_eps_csv,
    write_report_csv,
)
from .ctm import no_control_plan, read_plan_csv, simulate, write_plan_csv, write_trajectory_csv
from .projection import project_demands, supply_demand_margins, write_margins_csv
from .qp_build import build_problem, write_problem, write_vectors
from .qp_solve import SolverSettings, Status
from .scenario import (
    BUILTIN_NAMES,
    Scenario,
    ScenarioError,
    builtin_scenario,
    dump_scenario,
    load_scenario,
    with_capacity_drop,
)

OUT_ENV = "IBCONTROL_OUT"
DEFAULT_OUT_ROOT = "ibcontrol-runs"

EXIT_OK, EXIT_INPUT, EXIT_USAGE, EXIT_SOLVER, EXIT_STRICT = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def resolve_scenario(spec: str) -> Scenario:
    """Builtin name or path to a YAML file."""
    if spec in BUILTIN_NAMES:
        return builtin_scenario(spec)
    path = Path(spec)
    if not path.is_file():
        raise CliError(f"scenario {spec!r} is neither a builtin ({', '.join(BUILTIN_NAMES)}) nor a file")
    return load_scenario(path)


def _variants(choice: str | None) -> list[str | None]:
    if choice is None:
        return [None]
    return ["on", "off"] if choice == "both" else [choice]


def _apply_variant(scenario: Scenario, variant: str | None) -> Scenario:
    return scenario if variant is None else with_capacity_drop(scenario, variant == "on")


def _settings(args) -> SolverSettings:
    try:
        return SolverSettings(method=args.solver, eps_abs=args.eps_abs, eps_rel=args.eps_rel, max_iter=args.max_iter)
    except ValueError as exc:
        raise CliError(f"solver settings: {exc}") from None


def _slug(label: str) -> str:
    keep = "".join(ch if ch.isalnum() or ch in "-_" else "-" for ch in label)
    return keep.strip("-") or "scenario"


def _run_dir(args, default_name: str) -> Path:
    out = Path(args.out) if args.out else Path(os.environ.get(OUT_ENV, DEFAULT_OUT_ROOT)) / default_name
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise CliError(f"output directory {out} is not writable")
    return out


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def write_manifest(out: Path, command: str, args: dict, files: list[Path], volatile: list[Path] = ()) -> Path:
    """``manifest.json`` with a checksum for every reproducible output.

    Volatile files such as wall-clock timings are listed by name only, so two runs
    on the same inputs produce byte-identical manifests.
    """
    skip = set(volatile)
    entries = {str(p.relative_to(out)): _sha256(p) for p in sorted(files) if p not in skip}
    doc = {
        "tool": "ibcontrol",
        "version": __version__,
        "command": command,
        "arguments": args,
        "files": entries,
        "volatile": sorted(str(p.relative_to(out)) for p in volatile),
    }
    return _write_json(out / "manifest.json", doc)


def _arg_record(args, *names) -> dict:
    return {n: getattr(args, n) for n in names}


# --- commands -------------------------------------------------------------------

def cmd_check(args) -> int:
    try:
        sc = resolve_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"{sc.label or args.scenario}: valid (n={sc.n}, K={sc.K}, K_c={sc.K_c}, "
          f"capacity drop {'on' if sc.control.capacity_drop else 'off'})")
    return EXIT_OK


def _simulate_one(sc: Scenario, plan_path: str | None, out: Path) -> tuple[list[Path], float]:
    plan = read_plan_csv(plan_path, sc) if plan_path else no_control_plan(sc)
    try:
        plan.check_bounds(sc.control.eps_min, sc.control.eps_max)
    except ValueError as exc:
        raise CliError(f"plan {plan_path}: {exc}") from None
    traj = simulate(sc, plan)
    files = [write_trajectory_csv(traj, out / "trajectory.csv"), out / "trajectory.summary.json"]
    files.append(write_density_csv(density_field(traj), out / "density.csv"))
    return files, traj.tts


def cmd_simulate(args) -> int:
    base = resolve_scenario(args.scenario)
    out = _run_dir(args, f"simulate-{_slug(base.label)}")
    files = []
    for v in _variants(args.capacity_drop):
        sc = _apply_variant(base, v)
        sub = out if v is None or args.capacity_drop != "both" else out / f"cd-{v}"
        sub.mkdir(exist_ok=True)
        f, total = _simulate_one(sc, args.plan, sub)
        files += f
        kind = "controlled" if args.plan else "no-control"
        print(f"{sc.label}: {kind} TTS = {total:.6f} veh*h")
    write_manifest(out, "simulate", _arg_record(args, "scenario", "plan", "capacity_drop"), files)
    return EXIT_OK


def cmd_project(args) -> int:
    sc = resolve_scenario(args.scenario)
    out = _run_dir(args, f"project-{_slug(sc.label)}")
    proj = project_demands(sc)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "section", "d_a", "d_b", "total"])
    for k in range(sc.K):
        for i in range(sc.n):
            w.writerow([k, i + 1, repr(float(proj.d_a_k[i, k])), repr(float(proj.d_b_k[i, k])),
                        repr(float(proj.d_a_k[i, k] + proj.d_b_k[i, k]))])
    demand_csv = out / "projected.csv"
    demand_csv.write_text(buf.getvalue())
    margins = supply_demand_margins(sc, proj)
    files = [demand_csv] + write_margins_csv(margins, out)
    cells = margins.bottleneck_cells()
    if cells:
        secs = sorted({s for s, _ in cells})
        print(f"{sc.label}: bottleneck in sections {secs}, first at k={margins.first_bottleneck_step()}")
    else:
        print(f"{sc.label}: no bottleneck")
    write_manifest(out, "project", _arg_record(args, "scenario"), files)
    return EXIT_OK


def _write_holding_back(hb, path: Path) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["direction", "section", "k", "slack"])
    for d, s, k in hb.cells():
        slack = (hb.slack_a if d == "a" else hb.slack_b)[s - 1, k]
        w.writerow([d, s, k, repr(float(slack))])
    path.write_text(buf.getvalue())
    return path


def _optimize_one(sc: Scenario, variant: str, settings: SolverSettings, hb_tol: float, out: Path):
    run = run_variant(sc, variant, settings, hb_tol)
    sol, ex = run.solution, run.extract
    files = [
        write_plan_csv(ex.plan, out / "plan.csv"),
        write_trajectory_csv(ex.trajectory, out / "qp_trajectory.csv"),
        out / "qp_trajectory.summary.json",
        write_eps_csv(eps_surface(ex.plan), out / "eps_surface.csv", sc.control.steps_per_control),
        _write_holding_back(run.holding_back, out / "holding_back.csv"),
        write_vectors(out / "solution.qp", scalars={"objective": sol.objective, "primal_res": sol.primal_res,
                                                    "dual_res": sol.dual_res, "iterations": sol.iterations,
                                                    "status": sol.status},
                      vectors={"x": sol.x, "y": sol.y}),
    ]
    surf = eps_surface(ex.plan)
    summary = {
        "scenario": run.scenario.label,
        "status": sol.status,
        "method": sol.method,
        "objective": sol.objective,
        "primal_res": sol.primal_res,
        "dual_res": sol.dual_res,
        "iterations": sol.iterations,
        "qp_tts": ex.qp_tts,
        "sim_tts": run.controlled.tts,
        "no_control_tts": run.no_control.tts,
        "holding_back": run.holding_back.summary(),
        "max_temporal_eps_step": surf.max_temporal_step,
        "max_spatial_eps_step": surf.max_spatial_step,
        "temporal_eps_energy": surf.temporal_energy,
        "spatial_eps_energy": surf.spatial_energy,
        "n_vars": run.problem.n_vars,
    }
    files.append(_write_json(out / "summary.json", summary))
    timing = _write_json(out / "timing.json", {"solve_seconds": sol.solve_time})
    return run, files, timing


def _failure(run) -> str:
    msg = f"{run.scenario.label}: {run.solution.status}"
    if run.solution.status == Status.PRIMAL_INFEASIBLE and any(
        "jam the first section" in w for w in run.no_control.warnings
    ):
        msg += " (entry demand overloads the first section; entry flows are fixed inputs, so no plan can absorb it)"
    return msg


def cmd_optimize(args) -> int:
    base = resolve_scenario(args.scenario)
    settings = _settings(args)
    out = _run_dir(args, f"optimize-{_slug(base.label)}")
    files, volatile, failed = [], [], []
    choice = args.capacity_drop or ("on" if base.control.capacity_drop else "off")
    for v in _variants(choice):
        sub = out / f"cd-{v}" if choice == "both" else out
        sub.mkdir(exist_ok=True)
        run, f, timing = _optimize_one(base, v, settings, args.holding_back_tol, sub)
        files += f
        volatile.append(timing)
        sol = run.solution
        print(f"{run.scenario.label}: {sol.status} in {sol.iterations} iterations, "
              f"objective {sol.objective:.6f}, QP TTS {run.extract.qp_tts:.6f}, "
              f"simulated TTS {run.controlled.tts:.6f}, holding-back {run.holding_back.summary()}")
        if not sol.optimal:
            failed.append(_failure(run))
    write_manifest(out, "optimize",
                   _arg_record(args, "scenario", "capacity_drop", "solver", "eps_abs", "eps_rel", "max_iter",
                               "holding_back_tol"),
                   files + volatile, volatile)
    if failed:
        print("solver failure: " + "; ".join(failed), file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _print_report(report: AnalysisReport) -> None:
    head = f"{'scenario':<14}{'variant':<8}{'no-ctrl':>10}{'QP':>10}{'sim':>10}{'impr QP %':>11}{'impr sim %':>11}"
    print(head)
    for r in report.rows:
        print(f"{r.scenario:<14}{r.variant:<8}{r.no_control_tts:>10.2f}{r.qp_tts:>10.2f}{r.sim_tts:>10.2f}"
              f"{r.improvement_qp_pct:>11.2f}{r.improvement_sim_pct:>11.2f}")


def cmd_report(args) -> int:
    settings = _settings(args)
    scenarios = [resolve_scenario(s) for s in args.scenario]
    name = "-".join(_slug(s.label) for s in scenarios)
    out = _run_dir(args, f"report-{name}")
    variants = _variants(args.capacity_drop)
    rows, runs = [], []
    for sc in scenarios:
        rep = compare(sc, variants, settings, args.holding_back_tol)
        rows += rep.rows
        runs += rep.runs
    report = AnalysisReport(tuple(rows), tuple(runs))
    files = [write_report_csv(report, out / "report.csv")]
    for sc, run in zip([s for s in scenarios for _ in variants], runs):
        sub = out / _slug(sc.label) / f"cd-{run.variant}"
        sub.mkdir(parents=True, exist_ok=True)
        files.append(write_density_csv(density_field(run.no_control), sub / "density_no_control.csv"))
        files.append(write_density_csv(density_field(run.controlled), sub / "density_controlled.csv"))
        files.append(write_plan_csv(run.plan, sub / "plan.csv"))
    _print_report(report)
    failed = [_failure(run) for run in runs if not run.solution.optimal]
    write_manifest(out, "report",
                   _arg_record(args, "scenario", "capacity_drop", "solver", "eps_abs", "eps_rel", "max_iter",
                               "holding_back_tol", "strict"),
                   files)
    if args.strict:
        bad = report.violations()
        for v in bad:
            print(f"invariant violated: {v}", file=sys.stderr)
        if bad:
            return EXIT_STRICT
    if failed:
        print("solver failure: " + "; ".join(failed), file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_dump(args) -> int:
    base = resolve_scenario(args.scenario)
    out = _run_dir(args, f"dump-{_slug(base.label)}")
    files = []
    for v in _variants(args.capacity_drop):
        sc = _apply_variant(base, v)
        sub = out if v is None or args.capacity_drop != "both" else out / f"cd-{v}"
        sub.mkdir(exist_ok=True)
        yaml_path = sub / "scenario.yaml"
        yaml_path.write_text(dump_scenario(sc))
        files.append(yaml_path)
        if args.problem:
            files.append(write_problem(build_problem(sc), sub / "problem.qp"))
    write_manifest(out, "dump", _arg_record(args, "scenario", "capacity_drop", "problem"), files)
    print(f"wrote {len(files)} file(s) to {out}")
    return EXIT_OK


# --- argument parsing --------------------------------------------------------------

def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ibcontrol",
        description="Capacity-sharing control for bidirectional lane-free highways.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True,
                        help=f"builtin name ({', '.join(BUILTIN_NAMES)}) or path to a YAML scenario")
    common.add_argument("--out", help=f"run directory (default: ${OUT_ENV} or ./{DEFAULT_OUT_ROOT}, "
                                      "plus a per-command subdirectory)")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--solver", choices=("ipm", "admm"), default="ipm", help="QP algorithm (default: ipm)")
    solver.add_argument("--eps-abs", type=_positive_float, default=None, help="absolute residual tolerance")
    solver.add_argument("--eps-rel", type=_positive_float, default=None, help="relative residual tolerance")
    solver.add_argument("--max-iter", type=_positive_int, default=None, help="iteration cap")
    solver.add_argument("--holding-back-tol", type=_positive_float, default=1.0,
                        help="slack (veh/h) above which a flow counts as held back (default: 1)")

    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("check", help="validate a scenario")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", parents=[common], help="CTM rollout (no-control or a given plan)")
    p.add_argument("--plan", help="plan CSV (section,k_c,eps); default is eps = 0.5 everywhere")
    p.add_argument("--capacity-drop", choices=("on", "off", "both"), default=None,
                   help="override the scenario's capacity-drop setting")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("project", parents=[common], help="projected demands and bottleneck margins")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("optimize", parents=[common, solver], help="solve the sharing QP")
    p.add_argument("--capacity-drop", choices=("on", "off", "both"), default=None,
                   help="variant(s) to solve (default: the scenario's own setting)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("report", parents=[solver], help="no-control vs QP vs simulated-QP comparison table")
    p.add_argument("--scenario", required=True, action="append",
                   help="builtin name or YAML path; repeat for several scenarios")
    p.add_argument("--out", help="run directory")
    p.add_argument("--capacity-drop", choices=("on", "off", "both"), default="both")
    p.add_argument("--strict", action="store_true", help="exit nonzero if a report invariant fails")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("dump", parents=[common], help="write the normalised scenario (and optionally the QP)")
    p.add_argument("--capacity-drop", choices=("on", "off", "both"), default=None)
    p.add_argument("--problem", action="store_true", help="also write the assembled QP in interchange format")
    p.set_defaults(func=cmd_dump)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
