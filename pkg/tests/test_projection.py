import dataclasses

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from ibcontrol.projection import (
    project_demands,
    reserve_balanced_eps,
    supply_demand_margins,
    write_margins_csv,
)
from ibcontrol.scenario import Highway
from ibcontrol.synthetic import constant_demand_scenario


def test_single_section_steady_state():
    sc = constant_demand_scenario(n=1, K_c=4, demand_a=4200.0, demand_b=1300.0, length=0.5)
    p = project_demands(sc)
    warm = int(np.ceil(0.5 / (100.0 * sc.control.T)))
    assert_allclose(p.d_a_k[0, warm:], 4200.0, rtol=1e-12)
    assert_allclose(p.d_b_k[0, warm:], 1300.0, rtol=1e-12)


def test_offramp_scales_downstream():
    sc = constant_demand_scenario(n=2, K_c=20, demand_a=5000.0, demand_b=0.0)
    hw = sc.highway
    hw = Highway(hw.lengths, np.array([0.0, 0.1]), hw.exit_rate_b, hw.has_onramp_a, hw.has_onramp_b)
    p = project_demands(dataclasses.replace(sc, highway=hw))
    assert_allclose(p.d_a_k[1, -6:], 0.9 * p.d_a_k[0, -6:], rtol=1e-12)


def test_volume_conserved_without_ramps():
    sc = constant_demand_scenario(n=1, K_c=10, demand_a=3000.0, length=0.3)
    entry = np.zeros(sc.K)
    entry[:30] = 3000.0
    dem = dataclasses.replace(sc.demands, entry_a=entry)
    p = project_demands(dataclasses.replace(sc, demands=dem))
    assert p.d_a_k.sum() == pytest.approx(entry.sum(), rel=1e-9)


def test_floor():
    sc = constant_demand_scenario(n=2, K_c=2, demand_a=0.0, demand_b=0.0)
    p = project_demands(sc)
    assert_array_equal(p.d_a_floored, sc.control.d_floor)


def test_projection_ignores_eps_bounds():
    sc = constant_demand_scenario(n=2, K_c=3, demand_a=2000.0, demand_b=4000.0)
    narrow = dataclasses.replace(sc, control=dataclasses.replace(sc.control, eps_min=np.full(2, 0.4),
                                                                  eps_max=np.full(2, 0.6)))
    assert_array_equal(project_demands(sc).d_a, project_demands(narrow).d_a)


@pytest.mark.parametrize("d_a, d_b, expected", [(4000, 2000, 2 / 3), (3000, 3000, 0.5), (10000, 100, 0.84)])
def test_reserve_balanced_eps(d_a, d_b, expected):
    assert reserve_balanced_eps(d_a, d_b, 0.16, 0.84) == pytest.approx(expected)


def test_reserve_balanced_eps_scale_invariant(rng):
    d_a, d_b = rng.uniform(10, 8000, 50), rng.uniform(10, 8000, 50)
    assert_allclose(reserve_balanced_eps(3.7 * d_a, 3.7 * d_b), reserve_balanced_eps(d_a, d_b), rtol=1e-12)


def test_uncongested_projection_crossings(uncongested):
    p = project_demands(uncongested)
    first_a5 = np.flatnonzero(p.d_a_k[4] > 6000.0)[0]
    first_b3 = np.flatnonzero(p.d_b_k[2] > 6000.0)[0]
    assert 30 <= first_a5 <= 90
    assert 170 <= first_b3 <= 230


def test_uncongested_has_no_bottleneck(uncongested):
    assert supply_demand_margins(uncongested, project_demands(uncongested)).bottleneck_cells() == []


def test_congested_bottleneck_sections(congested):
    m = supply_demand_margins(congested, project_demands(congested))
    assert {s for s, _ in m.bottleneck_cells()} == {5, 6}
    assert 170 <= m.first_bottleneck_step() <= 230


def test_bottleneck_set_definition(congested):
    p = project_demands(congested)
    m = supply_demand_margins(congested, p)
    assert_array_equal(m.bottleneck, p.d_a + p.d_b > congested.fd.q_cap)


def test_zero_demand_margins():
    sc = constant_demand_scenario(n=3, K_c=2, demand_a=0.0, demand_b=0.0)
    m = supply_demand_margins(sc, project_demands(sc))
    assert_array_equal(m.margin, sc.fd.q_cap)


def test_margins_csv(tmp_path, congested):
    m = supply_demand_margins(congested, project_demands(congested))
    paths = write_margins_csv(m, tmp_path)
    assert [p.name for p in paths] == [f"margins_section{i}.csv" for i in range(1, 7)]
    assert paths[0].read_text().splitlines()[0] == "k_c,k,d_a,d_b,total,q_cap,cap_a,cap_b,bottleneck"
