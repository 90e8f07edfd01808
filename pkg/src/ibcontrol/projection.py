"""Projected (free-flow) demands and demand/capacity margins.

The projected demand of a section is the flow that would try to traverse it if
capacity were unlimited: external demands pushed through the conservation
equation with ``q = v_f * rho`` from an empty road.  For direction a this is
``(1 - beta_i) * q_{i-1} + r_i``; direction b is mirrored.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ctm import SharingPlan
from .scenario import Scenario

__all__ = [
    "ProjectedDemands",
    "project_demands",
    "reserve_balanced_eps",
    "MarginSeries",
    "supply_demand_margins",
    "write_margins_csv",
]


@dataclass(frozen=True, eq=False)
class ProjectedDemands:
    """Projected demands per section; ``*_k`` per model step, plain per control step."""

    d_a_k: np.ndarray
    d_b_k: np.ndarray
    d_a: np.ndarray
    d_b: np.ndarray
    d_floor: float

    @property
    def d_a_floored(self) -> np.ndarray:
        return np.maximum(self.d_a, self.d_floor)

    @property
    def d_b_floored(self) -> np.ndarray:
        return np.maximum(self.d_b, self.d_floor)


def _free_flow(entry, ramp, beta, v_f, T, L, rho0):
    n, K = ramp.shape
    rho = rho0.astype(float).copy()
    d = np.empty((n, K))
    for k in range(K):
        q_out = v_f * rho
        upstream = np.concatenate([[entry[k]], q_out[:-1]])
        d[:, k] = (1.0 - beta) * upstream + ramp[:, k]
        rho = rho + T / L * (d[:, k] - q_out)
    return d


def project_demands(scenario: Scenario, include_initial: bool = False) -> ProjectedDemands:
    """Free-flow propagation of the external demands (never reads a sharing plan).

    ``include_initial`` starts the propagation from the scenario's initial
    densities instead of an empty road.
    """
    hw, ctrl, dem, fd = scenario.highway, scenario.control, scenario.demands, scenario.fd
    L = hw.lengths
    zeros = np.zeros(scenario.n)
    rho0_a = scenario.rho0_a if include_initial else zeros
    rho0_b = scenario.rho0_b if include_initial else zeros
    d_a = _free_flow(dem.entry_a, dem.ramp_a, hw.exit_rate_a, fd.v_f, ctrl.T, L, rho0_a)
    d_b = _free_flow(
        dem.entry_b, dem.ramp_b[::-1], hw.exit_rate_b[::-1], fd.v_f, ctrl.T, L[::-1], rho0_b[::-1]
    )[::-1]
    m = ctrl.steps_per_control
    agg_a = d_a.reshape(scenario.n, scenario.K_c, m).mean(axis=2)
    agg_b = d_b.reshape(scenario.n, scenario.K_c, m).mean(axis=2)
    for arr in (d_a, d_b, agg_a, agg_b):
        arr.flags.writeable = False
    return ProjectedDemands(d_a, d_b, agg_a, agg_b, ctrl.d_floor)


def reserve_balanced_eps(d_a, d_b, eps_min=0.0, eps_max=1.0):
    """Share that leaves equal relative capacity reserves in both directions.

    Solves ``eps / d_a = (1 - eps) / d_b`` and clips to the bounds.
    """
    d_a = np.asarray(d_a, dtype=float)
    d_b = np.asarray(d_b, dtype=float)
    return np.clip(d_a / (d_a + d_b), eps_min, eps_max)


@dataclass(frozen=True, eq=False)
class MarginSeries:
    """Per (section, control step) demand/capacity picture.

    ``cap_a``/``cap_b`` are the assigned capacities when a plan was given
    (applied factors), else the fixed half capacity.  ``bottleneck`` marks
    cells where the total projected demand exceeds the carriageway capacity.
    """

    d_a: np.ndarray
    d_b: np.ndarray
    total: np.ndarray
    q_cap: float
    cap_a: np.ndarray
    cap_b: np.ndarray
    bottleneck: np.ndarray
    steps_per_control: int

    @property
    def margin(self) -> np.ndarray:
        """Unused carriageway capacity, ``q_cap - (d_a + d_b)``."""
        return self.q_cap - self.total

    def bottleneck_cells(self) -> list[tuple[int, int]]:
        """Flagged ``(section, k_c)`` pairs, sections 1-based."""
        return [(int(i) + 1, int(kc)) for i, kc in zip(*np.nonzero(self.bottleneck))]

    def first_bottleneck_step(self, section: int | None = None) -> int | None:
        """Model step at which the first flagged control interval starts."""
        flags = self.bottleneck if section is None else self.bottleneck[section - 1 : section]
        cols = np.flatnonzero(flags.any(axis=0))
        return None if cols.size == 0 else int(cols[0]) * self.steps_per_control

    def over_half_capacity(self, direction: str) -> np.ndarray:
        """Cells where one direction alone exceeds the no-control capacity."""
        d = self.d_a if direction == "a" else self.d_b
        return d > 0.5 * self.q_cap


def supply_demand_margins(
    scenario: Scenario, projected: ProjectedDemands, plan: SharingPlan | None = None
) -> MarginSeries:
    q_cap = scenario.fd.q_cap
    total = projected.d_a + projected.d_b
    if plan is None:
        cap_a = np.full_like(total, 0.5 * q_cap)
        cap_b = cap_a.copy()
    else:
        cap_a = plan.eps_a * q_cap
        cap_b = plan.eps_b * q_cap
    return MarginSeries(
        d_a=projected.d_a,
        d_b=projected.d_b,
        total=total,
        q_cap=q_cap,
        cap_a=cap_a,
        cap_b=cap_b,
        bottleneck=total > q_cap,
        steps_per_control=scenario.control.steps_per_control,
    )


def write_margins_csv(margins: MarginSeries, out_dir: str | Path, stem: str = "margins") -> list[Path]:
    """One CSV per section: ``k_c,k,d_a,d_b,total,q_cap,cap_a,cap_b,bottleneck``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    n, K_c = margins.d_a.shape
    for i in range(n):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k_c", "k", "d_a", "d_b", "total", "q_cap", "cap_a", "cap_b", "bottleneck"])
        for kc in range(K_c):
            w.writerow([
                kc, kc * margins.steps_per_control,
                repr(float(margins.d_a[i, kc])), repr(float(margins.d_b[i, kc])),
                repr(float(margins.total[i, kc])), repr(float(margins.q_cap)),
                repr(float(margins.cap_a[i, kc])), repr(float(margins.cap_b[i, kc])),
                int(margins.bottleneck[i, kc]),
            ])
        path = out_dir / f"{stem}_section{i + 1}.csv"
        path.write_text(buf.getvalue())
        paths.append(path)
    return paths
