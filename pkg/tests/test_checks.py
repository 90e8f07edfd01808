import numpy as np
import pytest
from numpy.testing import assert_allclose

from ibcontrol.ctm import no_control_plan, simulate
from ibcontrol.qp_build import build_problem, extract_solution, pack_trajectory
from ibcontrol.qp_solve import detect_holding_back, flow_upper_bounds, grid_oracle, solve
from ibcontrol.scenario import with_capacity_drop
from ibcontrol.synthetic import constant_demand_scenario, random_scenario


def solved(sc):
    p = build_problem(sc)
    sol = solve(p)
    assert sol.optimal
    return p, sol, extract_solution(sol.x, p.index_map, sc)


def test_grid_symmetric_demand():
    sc = constant_demand_scenario(n=1, K_c=1, demand_a=3000.0, demand_b=3000.0)
    g = grid_oracle(sc, 0.01)
    assert abs(g.best_eps[0, 0] - 0.5) <= 0.01 + 1e-12


def test_grid_asymmetric_demand_qp_not_worse():
    sc = constant_demand_scenario(n=1, K_c=1, demand_a=0.8 * 12000, demand_b=0.1 * 12000, w1=0.0, w2=0.0,
                                  w3=0.0, w4=0.0, lambda_d=0.0, lambda_r=1.0)
    g = grid_oracle(sc, 0.01)
    eps = g.plans[:, 0, 0]
    serving = (eps * 12000 >= 0.8 * 12000 - 1e-9) & ((1 - eps) * 12000 >= 0.1 * 12000 - 1e-9)
    assert serving.any()
    # plans that serve both demands in full attain the minimal cost
    assert_allclose(g.objectives[serving], g.best_objective, rtol=1e-12)
    p, sol, _ = solved(sc)
    assert p.objective(sol.x, tiebreak=False) <= g.best_objective + 1e-6


@pytest.mark.parametrize("seed", [1, 2])  # optimum uncongested for these seeds
def test_grid_matches_qp_two_control_steps(seed):
    sc = with_capacity_drop(random_scenario(seed, n=1, K_c=2, steps_per_control=6, congested_start=False,
                                            max_demand=0.6), False)
    p, sol, ex = solved(sc)
    traj = simulate(sc, ex.plan)
    assert not (traj.rel_a > 1 + 1e-6).any() and not (traj.rel_b > 1 + 1e-6).any()
    g = grid_oracle(sc, 0.01)
    J = p.objective(sol.x, tiebreak=False)
    assert abs(J - g.best_objective) <= 1e-3 * abs(g.best_objective)
    assert g.distance_to_minimizers(ex.plan.eps, rel_tol=1e-3) <= 0.02


def test_grid_limits():
    with pytest.raises(ValueError):
        grid_oracle(constant_demand_scenario(n=3, K_c=1))
    with pytest.raises(ValueError):
        grid_oracle(constant_demand_scenario(n=2, K_c=3), grid_step=0.01)
    with pytest.raises(ValueError):
        grid_oracle(constant_demand_scenario(n=1, K_c=1), grid_step=0.0)


def test_flow_on_demand_bound_not_flagged():
    sc = random_scenario(3, n=3, K_c=2, steps_per_control=3, congested_start=False)
    p = build_problem(sc)
    plan = no_control_plan(sc)
    traj = simulate(sc, plan)
    ex = extract_solution(pack_trajectory(sc, traj, plan, p.index_map), p.index_map, sc)
    hb = detect_holding_back(sc, ex, tol=1e-6)
    assert hb.empty
    assert hb.summary() == "none"


def test_reduced_flow_is_flagged():
    sc = constant_demand_scenario(n=2, K_c=1, demand_a=3000.0, demand_b=3000.0, rho0_a=30.0, rho0_b=30.0)
    p = build_problem(sc)
    plan = no_control_plan(sc)
    traj = simulate(sc, plan)
    x = pack_trajectory(sc, traj, plan, p.index_map)
    x[p.index_map.index("q_a", 0, 2)] -= 500.0
    ex = extract_solution(x, p.index_map, sc)
    hb = detect_holding_back(sc, ex, tol=1.0)
    assert hb.cells() == [("a", 1, 2)]
    assert hb.slack_a[0, 2] == pytest.approx(500.0)
    assert hb.sections() == {1}


def test_upper_bound_shapes():
    sc = constant_demand_scenario(n=3, K_c=2)
    p, _, ex = solved(sc)
    b = flow_upper_bounds(sc, ex)
    assert b["a"].shape == (4, 3, sc.K)
    assert np.isinf(b["a"][2:, 2]).all() and np.isinf(b["b"][2:, 0]).all()


def test_uncongested_no_holding_back(uncongested_report):
    for run in uncongested_report.runs:
        assert run.holding_back.empty, run.holding_back.summary()


def test_congested_holding_back_location(congested_report):
    run = congested_report.runs[0]
    assert run.variant == "on"
    assert not run.holding_back.empty
    assert run.holding_back.sections() & {3, 4, 5}


def test_qp_flows_match_ctm_without_holding_back():
    sc = with_capacity_drop(random_scenario(2, n=1, K_c=2, steps_per_control=6, congested_start=False,
                                            max_demand=0.6), False)
    _, _, ex = solved(sc)
    assert detect_holding_back(sc, ex).empty
    assert_allclose(simulate(sc, ex.plan).tts, ex.qp_tts, rtol=1e-6)
