"""Brute-force grid oracle and holding-back detection."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..ctm import SharingPlan, simulate
from ..projection import project_demands
from ..qp_build import QpExtract, objective_terms
from ..scenario import Scenario

__all__ = ["GridOracleResult", "grid_oracle", "HoldingBack", "detect_holding_back", "flow_upper_bounds"]

GRID_MAX_SECTIONS = 2
GRID_MAX_CONTROL_STEPS = 3


@dataclass(frozen=True, eq=False)
class GridOracleResult:
    """Exhaustive search result.

    ``plans`` has shape ``(N, n, K_c)``; ``objectives[j]`` is the exact cost of
    simulating ``plans[j]``.
    """

    best_eps: np.ndarray
    best_objective: float
    plans: np.ndarray
    objectives: np.ndarray
    grid: np.ndarray

    def minimizers(self, rel_tol: float = 0.0) -> np.ndarray:
        """All plans whose objective is within ``rel_tol`` of the best."""
        bound = self.best_objective + rel_tol * abs(self.best_objective)
        return self.plans[self.objectives <= bound]

    def distance_to_minimizers(self, eps: np.ndarray, rel_tol: float = 0.0) -> float:
        """Smallest max-abs distance from ``eps`` to a (near-)minimizer."""
        cand = self.minimizers(rel_tol)
        return float(np.abs(cand - np.asarray(eps)[None]).reshape(cand.shape[0], -1).max(axis=1).min())


def grid_oracle(scenario: Scenario, grid_step: float = 0.01, max_combinations: int = 50_000) -> GridOracleResult:
    """Enumerate every ``eps`` plan on a grid and return the cheapest.

    Each plan is simulated with the CTM (so flows always sit on their min
    operator) and scored with :func:`objective_terms`.  The grid runs from
    ``eps_min`` to ``eps_max`` of each section in steps of ``grid_step``.
    """
    n, K_c = scenario.n, scenario.K_c
    if n > GRID_MAX_SECTIONS or K_c > GRID_MAX_CONTROL_STEPS:
        raise ValueError(f"grid oracle needs n <= {GRID_MAX_SECTIONS} and K_c <= {GRID_MAX_CONTROL_STEPS}; "
                         f"got n={n}, K_c={K_c}")
    if not grid_step > 0:
        raise ValueError("grid_step must be > 0")
    ctrl = scenario.control
    axes = []
    for i in range(n):
        lo, hi = ctrl.eps_min[i], ctrl.eps_max[i]
        pts = lo + grid_step * np.arange(int(np.floor((hi - lo) / grid_step + 1e-9)) + 1)
        axes.append(np.round(pts, 12))
    total = int(np.prod([axes[i].size for i in range(n)], dtype=float) ** K_c)
    if total > max_combinations:
        raise ValueError(f"grid has {total} plans, above max_combinations={max_combinations}")

    projected = project_demands(scenario)
    # plan entry order: control step major, section minor
    per_entry = [axes[i] for _ in range(K_c) for i in range(n)]
    plans = np.empty((total, n, K_c))
    objectives = np.empty(total)
    for j, combo in enumerate(itertools.product(*per_entry)):
        eps = np.asarray(combo, dtype=float).reshape(K_c, n).T
        plan = SharingPlan.from_eps(eps, ctrl.eps_init)
        traj = simulate(scenario, plan)
        plans[j] = eps
        objectives[j] = objective_terms(scenario, plan.eps, plan.eps_a, plan.eps_b, traj.tts, projected)["total"]
    best = int(np.argmin(objectives))
    return GridOracleResult(plans[best].copy(), float(objectives[best]), plans, objectives,
                            np.array(axes, dtype=object) if n > 1 else axes[0])


def flow_upper_bounds(scenario: Scenario, extract: QpExtract) -> dict[str, np.ndarray]:
    """Right-hand sides of each flow's min operator, evaluated at a QP solution.

    Returns arrays of shape ``(4, n, K)`` per direction (demand free-flow
    branch, demand capacity branch, supply jam branch, supply capacity branch);
    the supply branches are ``inf`` where a section has no downstream section.
    """
    fd, ctrl, hw, dem = scenario.fd, scenario.control, scenario.highway, scenario.demands
    traj = extract.trajectory
    n, K = scenario.n, scenario.K
    kc = ctrl.control_index(np.arange(K))
    slope = ctrl.lambda_d * fd.q_cap / (fd.rho_cr - fd.rho_max)
    out = {}
    for d in "ab":
        rho = getattr(traj, f"rho_{d}")[:, :K]
        e = (extract.eps_a_qp if d == "a" else extract.eps_b_qp)[:, kc]
        beta = getattr(hw, f"exit_rate_{d}")
        ramp = getattr(dem, f"ramp_{d}")
        bounds = np.full((4, n, K), np.inf)
        bounds[0] = fd.v_f * rho
        bounds[1] = e * fd.q_cap + slope * (rho - e * fd.rho_cr)
        for i in range(n):
            dn = i + 1 if d == "a" else i - 1
            if not 0 <= dn < n:
                continue
            scale = 1.0 / (1.0 - beta[dn])
            bounds[2, i] = fd.w_s * (e[dn] * fd.rho_max - rho[dn]) * scale - ctrl.lambda_r * ramp[dn]
            bounds[3, i] = e[dn] * fd.q_cap * scale - ctrl.lambda_r * ramp[dn]
        out[d] = bounds
    return out


@dataclass(frozen=True, eq=False)
class HoldingBack:
    """Flags of shape ``(n, K)`` per direction plus the largest slack found."""

    flags_a: np.ndarray
    flags_b: np.ndarray
    slack_a: np.ndarray
    slack_b: np.ndarray
    tol: float

    @property
    def max_slack(self) -> float:
        return float(max(self.slack_a.max(initial=0.0), self.slack_b.max(initial=0.0)))

    @property
    def empty(self) -> bool:
        return not (self.flags_a.any() or self.flags_b.any())

    def cells(self) -> list[tuple[str, int, int]]:
        """Flagged ``(direction, section, k)`` with 1-based sections."""
        out = []
        for d, flags in (("a", self.flags_a), ("b", self.flags_b)):
            out.extend((d, int(i) + 1, int(k)) for i, k in zip(*np.nonzero(flags)))
        return sorted(out, key=lambda c: (c[2], c[0], c[1]))

    def sections(self) -> set[int]:
        return {s for _, s, _ in self.cells()}

    def summary(self) -> str:
        if self.empty:
            return "none"
        per = {}
        for d, s, _ in self.cells():
            per[(d, s)] = per.get((d, s), 0) + 1
        parts = [f"{d}{s}:{c}" for (d, s), c in sorted(per.items())]
        return " ".join(parts) + f" (max {self.max_slack:.1f} veh/h)"


def detect_holding_back(scenario: Scenario, extract: QpExtract, tol: float = 1.0) -> HoldingBack:
    """Flag flows lying more than ``tol`` veh/h below every branch of their min operator."""
    bounds = flow_upper_bounds(scenario, extract)
    traj = extract.trajectory
    n = scenario.n
    res = {}
    for d in "ab":
        q = traj.q_a[1 : n + 1] if d == "a" else traj.q_b[1 : n + 1]
        slack = bounds[d].min(axis=0) - q
        slack = np.maximum(slack, 0.0)
        res[d] = (slack > tol, slack)
    return HoldingBack(res["a"][0], res["b"][0], res["a"][1], res["b"][1], float(tol))
