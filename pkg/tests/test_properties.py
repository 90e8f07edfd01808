import numpy as np
import pytest
import scipy.linalg
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from ibcontrol.ctm import SharingPlan, applied_sharing, demand_fn, read_plan_csv, simulate, supply_fn, write_plan_csv
from ibcontrol.projection import project_demands, reserve_balanced_eps
from ibcontrol.qp_build import build_index_map, build_problem, pack_trajectory
from ibcontrol.scenario import FdParams, dump_scenario, load_scenario
from ibcontrol.synthetic import random_scenario

FD = FdParams(100.0, 12.0, 12000.0)
seeds = st.integers(0, 2**32 - 1)
fraction = st.floats(0.0, 1.0, allow_nan=False)
slow = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])


def random_plan(sc, rng):
    lo = np.broadcast_to(sc.control.eps_min, (sc.n,))[:, None]
    hi = np.broadcast_to(sc.control.eps_max, (sc.n,))[:, None]
    eps = rng.uniform(lo, hi, (sc.n, sc.K_c))
    return SharingPlan.from_eps(eps, sc.control.eps_init)


@given(eps=fraction, lambda_d=st.floats(0.0, 0.9))
def test_demand_continuous_at_critical_density(eps, lambda_d):
    rho = eps * FD.rho_cr
    left = demand_fn(rho * (1 - 1e-12), eps, FD, lambda_d)
    right = demand_fn(rho * (1 + 1e-12), eps, FD, lambda_d)
    assert_allclose(left, eps * FD.q_cap, rtol=1e-9, atol=1e-9)
    assert_allclose(right, eps * FD.q_cap, rtol=1e-9, atol=1e-9)


@given(eps=fraction, rho=st.floats(0.0, 1120.0))
def test_supply_bounded_by_capacity(eps, rho):
    s = supply_fn(rho, eps, FD)
    assert 0.0 <= s <= eps * FD.q_cap + 1e-9


@given(now=fraction, prev=fraction)
def test_applied_sharing_never_exceeds_whole_road(now, prev):
    ea, eb = applied_sharing(now, prev)
    assert ea + eb <= 1.0 + 1e-15
    if now == prev:
        assert ea == now and eb == pytest.approx(1.0 - now)


@given(seed=seeds)
@slow
def test_simulation_nonnegative_and_conservative(seed):
    sc = random_scenario(seed)
    rng = np.random.default_rng(seed)
    traj = simulate(sc, random_plan(sc, rng))
    assert traj.rho_a.min() >= -1e-9 and traj.rho_b.min() >= -1e-9
    assert np.nanmin(traj.q_a) >= 0 and np.nanmin(traj.q_b) >= 0
    for d, ramp in (("a", sc.demands.ramp_a), ("b", sc.demands.ramp_b)):
        ins, outs = traj.balance(d, ramp)
        assert ins == pytest.approx(outs, rel=1e-9, abs=1e-9)


@given(seed=seeds)
@slow
def test_plain_model_flows_within_directional_capacity(seed):
    sc = random_scenario(seed, capacity_drop=False)
    traj = simulate(sc, random_plan(sc, np.random.default_rng(seed)))
    n = sc.n
    assert np.all(traj.q_a[1:] <= traj.eps_a * FD.q_cap + 1e-6)
    assert np.all(traj.q_b[1 : n + 1] <= traj.eps_b * FD.q_cap + 1e-6)


@given(seed=seeds, scale=st.floats(0.1, 10.0))
@slow
def test_reserve_balance_scale_invariant(seed, scale):
    sc = random_scenario(seed, congested_start=False)
    pr = project_demands(sc)
    d_a, d_b = pr.d_a_floored, pr.d_b_floored
    assert_allclose(reserve_balanced_eps(scale * d_a, scale * d_b), reserve_balanced_eps(d_a, d_b), rtol=1e-12)


@given(n=st.integers(1, 5), K_c=st.integers(1, 4), m=st.integers(1, 4), data=st.data())
def test_index_map_bijection(n, K_c, m, data):
    sc = random_scenario(0, n=n, K_c=K_c, steps_per_control=m)
    im = build_index_map(sc)
    idx = data.draw(st.integers(0, im.total_vars - 1))
    fam, i, t = im.locate(idx)
    assert im.index(fam, i, t) == idx


@given(seed=seeds)
@settings(max_examples=10, deadline=None)
def test_hessian_psd(seed):
    sc = random_scenario(seed, n=3, K_c=3, steps_per_control=2)
    H = build_problem(sc).H.toarray()
    assert_allclose(H, H.T)
    assert scipy.linalg.eigvalsh(H).min() >= -1e-9 * max(1.0, np.abs(H).max())


@given(seed=seeds)
@settings(max_examples=15, deadline=None)
def test_simulated_trajectory_is_qp_feasible(seed):
    sc = random_scenario(seed, n=2, K_c=2, steps_per_control=3, congested_start=False, max_demand=0.5)
    plan = random_plan(sc, np.random.default_rng(seed))
    traj = simulate(sc, plan)
    prob = build_problem(sc)
    x = pack_trajectory(sc, traj, plan, prob.index_map)
    assert prob.is_feasible(x, 1e-6), prob.violations(x)


@given(seed=seeds)
@settings(max_examples=15, deadline=None)
def test_plan_csv_round_trip(tmp_path_factory, seed):
    sc = random_scenario(seed)
    plan = random_plan(sc, np.random.default_rng(seed))
    path = write_plan_csv(plan, tmp_path_factory.mktemp("plan") / "plan.csv")
    back = read_plan_csv(path, sc)
    assert np.array_equal(back.eps, plan.eps)


@given(seed=seeds)
@settings(max_examples=15, deadline=None)
def test_scenario_yaml_round_trip(seed):
    sc = random_scenario(seed)
    assert load_scenario(dump_scenario(sc)) == sc
