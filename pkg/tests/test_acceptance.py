"""Acceptance criteria, each asserted at its stated tolerance and runtime."""

import time

import numpy as np
import pytest

from ibcontrol.analysis import compare, congestion_window, density_field, section_series
from ibcontrol.cli import main
from ibcontrol.ctm import demand_fn, no_control_plan, simulate, supply_fn
from ibcontrol.qp_build import build_problem, extract_solution, pack_trajectory
from ibcontrol.qp_solve import SolverSettings, grid_oracle, solve, solve_dense_reference
from ibcontrol.scenario import FdParams, builtin_scenario, with_capacity_drop
from ibcontrol.synthetic import random_scenario

FD = FdParams(100.0, 12.0, 12000.0)


@pytest.fixture(scope="module")
def runs():
    """Both builtin scenarios in both capacity-drop variants, with wall-clock time."""
    out = {}
    for name in ("uncongested", "congested"):
        t0 = time.perf_counter()
        report = compare(builtin_scenario(name))
        out[name] = (report, time.perf_counter() - t0)
    return out


def by_variant(report):
    return {run.variant: run for run in report.runs}


def test_fd_scaling_identities(acceptance):
    t0 = time.perf_counter()
    eps = np.random.default_rng(1).uniform(0.0, 1.0, 100)
    eps = eps[eps > 0]
    worst = 0.0
    for e in eps:
        rho_cr, q_cap, rho_max = FD.scaled(e)
        for got, want in ((rho_cr, e * FD.rho_cr), (q_cap, e * FD.q_cap), (rho_max, e * FD.rho_max)):
            worst = max(worst, abs(got - want) / want)
        # demand: free branch up to rho_cr(eps), flat at q_cap(eps) beyond
        below, above = rho_cr * (1 - 1e-9), rho_cr * (1 + 1e-9)
        worst = max(
            worst,
            abs(demand_fn(rho_cr, e, FD) - q_cap) / q_cap,
            abs(demand_fn(below, e, FD) - FD.v_f * below) / q_cap,
            abs(demand_fn(above, e, FD) - q_cap) / q_cap,
            abs(supply_fn(rho_cr, e, FD) - q_cap) / q_cap,
            abs(supply_fn(below, e, FD) - q_cap) / q_cap,
            abs(supply_fn(above, e, FD) - FD.w_s * (rho_max - above)) / q_cap,
            abs(supply_fn(rho_max, e, FD)) / q_cap,
        )
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    acceptance("1", ok, f"worst relative error {worst:.1e} over {eps.size} shares, {elapsed:.2f} s")
    assert ok


def test_conservation(acceptance):
    t0 = time.perf_counter()
    scenarios = [builtin_scenario("uncongested"), builtin_scenario("congested")]
    scenarios += [random_scenario(seed) for seed in range(50)]
    worst = 0.0
    for sc in scenarios:
        traj = simulate(sc)
        for d, ramp in (("a", sc.demands.ramp_a), ("b", sc.demands.ramp_b)):
            ins, outs = traj.balance(d, ramp)
            worst = max(worst, abs(ins - outs) / max(abs(ins), 1.0))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 10.0
    acceptance("2", ok, f"worst balance error {worst:.1e} over {len(scenarios)} scenarios, {elapsed:.2f} s")
    assert ok


def test_qp_structure(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    psd_worst, feas_worst, gaps, checked = 0.0, 0.0, [], 0
    for name in ("uncongested", "congested"):
        for on in (True, False):
            sc = with_capacity_drop(builtin_scenario(name), on)
            p = build_problem(sc)
            Z = rng.standard_normal((p.n_vars, 1000))
            quad = np.einsum("ij,ij->j", Z, p.H @ Z) / np.einsum("ij,ij->j", Z, Z)
            psd_worst = min(psd_worst, float(quad.min()))
            plan = no_control_plan(sc)
            traj = simulate(sc, plan)
            x_nc = pack_trajectory(sc, traj, plan, p.index_map)
            if not traj.warnings:
                feas_worst = max(feas_worst, max(p.violations(x_nc).values()))
                checked += 1
            sol = solve(p)
            gaps.append(p.objective(x_nc) - sol.objective)
    for seed in range(20):
        sc = random_scenario(seed, congested_start=False)
        traj = simulate(sc)
        if traj.warnings:
            continue
        p = build_problem(sc)
        feas_worst = max(feas_worst, max(p.violations(pack_trajectory(sc, traj, no_control_plan(sc), p.index_map)).values()))
        checked += 1
    elapsed = time.perf_counter() - t0
    ok = psd_worst >= -1e-9 and feas_worst <= 1e-7 and min(gaps) >= 0 and elapsed < 30.0
    acceptance("3", ok, f"min z'Hz/|z|^2 {psd_worst:.1e}, no-control violation {feas_worst:.1e} "
               f"on {checked} scenarios, min J_nc - J* {min(gaps):.3f}, {elapsed:.1f} s")
    assert ok


def test_solver_cross_validation(acceptance):
    t0 = time.perf_counter()
    worst, compared = 0.0, 0
    for seed in range(30):
        sc = random_scenario(seed, n=1 + seed % 2, K_c=1 + seed % 3, steps_per_control=3)
        p = build_problem(sc)
        ref = solve_dense_reference(p)
        if not ref.optimal:
            continue
        sol = solve(p, SolverSettings(method="admm"))
        worst = max(worst, abs(sol.objective - ref.objective) / max(abs(ref.objective), 1.0)
                    if sol.optimal else np.inf)
        compared += 1
    first_order_ok = compared >= 20 and worst <= 1e-6
    acceptance("4a", first_order_ok, f"first-order vs dense reference on {compared} instances: "
               f"worst relative objective gap {worst:.1e}")

    grid_obj, grid_dist, graded = 0.0, 0.0, 0
    for seed in range(12):
        sc = with_capacity_drop(random_scenario(seed, n=1, K_c=2, steps_per_control=6, congested_start=False,
                                                max_demand=0.6), False)
        p = build_problem(sc)
        sol = solve(p)
        ex = extract_solution(sol.x, p.index_map, sc)
        traj = simulate(sc, ex.plan)
        if (traj.rel_a > 1 + 1e-6).any() or (traj.rel_b > 1 + 1e-6).any():
            continue  # optimum congested, oracle not applicable
        g = grid_oracle(sc, 0.01)
        J = p.objective(sol.x, tiebreak=False)
        grid_obj = max(grid_obj, abs(J - g.best_objective) / abs(g.best_objective))
        grid_dist = max(grid_dist, g.distance_to_minimizers(ex.plan.eps, rel_tol=1e-3))
        graded += 1
    elapsed = time.perf_counter() - t0
    grid_ok = graded >= 5 and grid_obj <= 1e-3 and grid_dist <= 0.02 and elapsed < 120.0
    acceptance("4b", grid_ok, f"grid oracle on {graded} uncongested instances: objective gap {grid_obj:.1e}, "
               f"eps distance {grid_dist:.3f}, {elapsed:.1f} s total")
    assert first_order_ok and grid_ok


def test_uncongested_reproduction(acceptance, runs):
    report, elapsed = runs["uncongested"]
    v = by_variant(report)
    nc = density_field(v["on"].no_control)
    onset_a = congestion_window(nc, "a", 5)
    onset_b = congestion_window(nc, "b", 3)
    ok_a = (onset_a is not None and 30 <= onset_a[0] <= 90 and onset_b is not None
            and 220 <= onset_b[0] <= 280)
    acceptance("5(a)", ok_a, f"no-control onset a/s5 at k={onset_a and onset_a[0]}, "
               f"b/s3 at k={onset_b and onset_b[0]}")

    max_rel = max(max(r.controlled.rel_a.max(), r.controlled.rel_b.max()) for r in v.values())
    ok_b = max_rel <= 1 + 1e-6
    acceptance("5(b)", ok_b, f"controlled max relative density {max_rel:.9f} (both variants)")

    impr = {k: report.row(report.rows[0].scenario, k).improvement_sim_pct for k in v}
    ok_c = all(15 <= x <= 35 for x in impr.values())
    acceptance("5(c)", ok_c, "improvement " + ", ".join(f"{k}: {x:.1f}%" for k, x in impr.items()))

    ok_d = all(r.holding_back.empty for r in v.values()) and elapsed < 120.0
    acceptance("5(d)", ok_d, f"holding-back flags: {sum(len(r.holding_back.cells()) for r in v.values())}, "
               f"{elapsed:.1f} s including solves")
    assert ok_a and ok_b and ok_c and ok_d


def test_congested_reproduction(acceptance, runs):
    report, elapsed = runs["congested"]
    v = by_variant(report)
    starts = {s: v["on"].margins.first_bottleneck_step(s) for s in (5, 6)}
    ok_a = all(k is not None and 170 <= k <= 230 for k in starts.values())
    acceptance("6(a)", ok_a, f"projected bottleneck start: s5 k={starts[5]}, s6 k={starts[6]}")

    q_cap = v["on"].scenario.fd.q_cap
    window = v["on"].margins.bottleneck[5].repeat(v["on"].margins.steps_per_control)
    peaks = {k: float(section_series(r.controlled, 6, q_cap)["q_total"][window].max()) for k, r in v.items()}
    ok_b = all(p >= 0.95 * q_cap for p in peaks.values())
    acceptance("6(b)", ok_b, "peak total flow at s6 during bottleneck " +
               ", ".join(f"{k}: {p:.0f}" for k, p in peaks.items()) + f" veh/h (need {0.95 * q_cap:.0f})")

    gaps = {r.variant: abs(r.sim_tts - r.qp_tts) / r.sim_tts for r in report.rows}
    ok_c = all(g < 0.01 for g in gaps.values())
    acceptance("6(c)", ok_c, "sim vs QP TTS " + ", ".join(f"{k}: {100 * g:.2f}%" for k, g in gaps.items()))

    impr = {r.variant: r.improvement_sim_pct for r in report.rows}
    ok_d = all(15 <= x <= 35 for x in impr.values()) and elapsed < 120.0
    acceptance("6(d)", ok_d, "improvement " + ", ".join(f"{k}: {x:.1f}%" for k, x in impr.items())
               + f", {elapsed:.1f} s")
    assert ok_a and ok_b and ok_c and ok_d


def test_capacity_drop_ordering(acceptance, runs):
    diffs = {}
    for name, (report, _) in runs.items():
        rows = {r.variant: r for r in report.rows}
        diffs[name] = rows["on"].no_control_tts - rows["off"].no_control_tts
    ok = all(d >= 1.0 for d in diffs.values())
    acceptance("7", ok, "no-control TTS with minus without drop: " +
               ", ".join(f"{k} {d:.1f} veh*h" for k, d in diffs.items()))
    assert ok


def test_performance(acceptance):
    sc = builtin_scenario("congested")
    t0 = time.perf_counter()
    p = build_problem(sc)
    t_build = time.perf_counter() - t0
    sol = solve(p)
    rows = p.A_e.shape[0] + p.A_i.shape[0]
    ok = p.n_vars == 9720 and sol.optimal and t_build < 5.0 and sol.solve_time < 60.0
    acceptance("8", ok, f"{p.n_vars} variables, {rows} constraint rows: assembly {t_build:.2f} s, "
               f"solve {sol.solve_time:.2f} s")
    assert ok


def test_determinism(acceptance, tmp_path):
    plans = []
    for run in ("first", "second"):
        out = tmp_path / run
        assert main(["optimize", "--scenario", "congested", "--out", str(out)]) == 0
        plans.append((out / "plan.csv").read_bytes())
    ok = plans[0] == plans[1]
    acceptance("9", ok, "two optimize runs give " + ("identical" if ok else "different") + " plan files")
    assert ok
