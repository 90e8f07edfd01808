"""Bidirectional cell transmission model with a time-varying internal boundary.

Direction a runs from section 1 to n, direction b from n to 1.  Both directions
share each section's total carriageway; a sharing factor ``eps`` hands the
fraction ``eps`` of critical density, capacity and jam density to direction a
and ``1 - eps`` to direction b.  The widening direction gets its extra width
one control step late (min-rule), the narrowing direction loses it at once.

The optional capacity drop uses a drooping demand branch (``lambda_d``) and an
attenuated ramp term in the supply branch (``lambda_r``); ``lambda_d=0,
lambda_r=1`` is the plain CTM.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .scenario import FdParams, Scenario, ScenarioError

__all__ = [
    "SharingPlan",
    "TrafficTrajectory",
    "StepFlows",
    "applied_sharing",
    "demand_fn",
    "supply_fn",
    "step",
    "simulate",
    "tts",
    "no_control_plan",
    "write_trajectory_csv",
    "write_plan_csv",
    "read_plan_csv",
]

JAM_TOL = 1e-9


def applied_sharing(eps_now, eps_prev):
    """Sharing factors in force given the decided and the previous ones."""
    eps_now = np.asarray(eps_now, dtype=float)
    eps_prev = np.asarray(eps_prev, dtype=float)
    return np.minimum(eps_now, eps_prev), np.minimum(1.0 - eps_now, 1.0 - eps_prev)


def demand_fn(rho, eps_dir, fd: FdParams, lambda_d: float = 0.0):
    """Sending flow of a direction holding share ``eps_dir`` (veh/h, >= 0)."""
    rho = np.asarray(rho, dtype=float)
    cap_branch = eps_dir * fd.q_cap + lambda_d * fd.q_cap * (rho - eps_dir * fd.rho_cr) / (fd.rho_cr - fd.rho_max)
    return np.maximum(0.0, np.minimum(cap_branch, fd.v_f * rho))


def supply_fn(rho, eps_dir, fd: FdParams):
    """Receiving flow of a direction holding share ``eps_dir`` (veh/h, >= 0)."""
    rho = np.asarray(rho, dtype=float)
    return np.maximum(0.0, np.minimum(eps_dir * fd.q_cap, fd.w_s * (eps_dir * fd.rho_max - rho)))


@dataclass(frozen=True, eq=False)
class SharingPlan:
    """Decided sharing factors (n x K_c) and the factors actually applied."""

    eps: np.ndarray
    eps_a: np.ndarray
    eps_b: np.ndarray

    @classmethod
    def from_eps(cls, eps, eps_init) -> "SharingPlan":
        eps = np.array(eps, dtype=float, ndmin=2)
        init = np.broadcast_to(np.asarray(eps_init, dtype=float), (eps.shape[0],))
        prev = np.column_stack([init, eps[:, :-1]])
        eps_a, eps_b = applied_sharing(eps, prev)
        for arr in (eps, eps_a, eps_b):
            arr.flags.writeable = False
        return cls(eps, eps_a, eps_b)

    @property
    def n(self) -> int:
        return self.eps.shape[0]

    @property
    def K_c(self) -> int:
        return self.eps.shape[1]

    def check_bounds(self, eps_min, eps_max, tol: float = 1e-9) -> None:
        lo = np.asarray(eps_min)[:, None]
        hi = np.asarray(eps_max)[:, None]
        if np.any(self.eps < lo - tol) or np.any(self.eps > hi + tol):
            raise ValueError("sharing factors outside [eps_min, eps_max]")


def no_control_plan(scenario: Scenario, eps: float = 0.5) -> SharingPlan:
    """Constant internal boundary (0.5 splits the carriageway in half)."""
    return SharingPlan.from_eps(np.full((scenario.n, scenario.K_c), eps), scenario.control.eps_init)


@dataclass
class StepFlows:
    """Mainstream flows of one model step.

    ``q_a[i]`` is the flow from section i into i+1 (index 0 is the entry flow,
    index n the exit); ``q_b[i]`` is the flow leaving section i towards i-1
    (index n+1 is the entry flow, index 0 unused).
    """

    q_a: np.ndarray
    q_b: np.ndarray
    offramp_a: np.ndarray
    offramp_b: np.ndarray
    origin_excess_a: float = 0.0
    origin_excess_b: float = 0.0
    warnings: list[str] = field(default_factory=list)


def _exit_flows(rho, eps_dir, beta_next, ramp_next, fd, lambda_d, lambda_r):
    """Exit flows of a direction laid out downstream-ordered (last cell demand only)."""
    q = demand_fn(rho, eps_dir, fd, lambda_d)
    supply = supply_fn(rho[1:], eps_dir[1:], fd) / (1.0 - beta_next) - lambda_r * ramp_next
    q[:-1] = np.minimum(q[:-1], supply)
    return np.maximum(q, 0.0)


def _advance(rho, inflow_main, q_out, beta, ramp, T, L):
    """Conservation update; returns next density and the off-ramp flows."""
    offramp = beta * inflow_main
    nxt = rho + T / L * ((1.0 - beta) * inflow_main - q_out + ramp)
    return nxt, offramp


def step(rho_a, rho_b, eps_a, eps_b, entry_a: float, entry_b: float, ramp_a, ramp_b, scenario: Scenario):
    """Advance both directions by one model step.

    Returns ``(rho_a_next, rho_b_next, StepFlows)``.  Flows follow the min of
    demand and supply (demand only out of the last section of each direction);
    the entry flow equals the demanded inflow unless that would push the first
    section past jam density, in which case it is cut to the first section's
    supply and the shortfall is reported in ``origin_excess_*`` (veh).
    """
    fd, ctrl, hw = scenario.fd, scenario.control, scenario.highway
    T, L = ctrl.T, hw.lengths
    rho_a = np.asarray(rho_a, dtype=float)
    rho_b = np.asarray(rho_b, dtype=float)
    eps_a = np.broadcast_to(np.asarray(eps_a, dtype=float), rho_a.shape)
    eps_b = np.broadcast_to(np.asarray(eps_b, dtype=float), rho_b.shape)
    ramp_a = np.asarray(ramp_a, dtype=float)
    ramp_b = np.asarray(ramp_b, dtype=float)
    n = rho_a.size
    warnings: list[str] = []

    # direction a in natural order; direction b reversed so that both run "downstream"
    out_a = _exit_flows(rho_a, eps_a, hw.exit_rate_a[1:], ramp_a[1:], fd, ctrl.lambda_d, ctrl.lambda_r)
    rb, eb = rho_b[::-1], eps_b[::-1]
    out_b = _exit_flows(rb, eb, hw.exit_rate_b[::-1][1:], ramp_b[::-1][1:], fd, ctrl.lambda_d, ctrl.lambda_r)

    excess = {}
    entries = {}
    for d, rho_up, eps_up, entry, beta0, r0, L0 in (
        ("a", rho_a, eps_a, entry_a, hw.exit_rate_a[0], ramp_a[0], L[0]),
        ("b", rb, eb, entry_b, hw.exit_rate_b[-1], ramp_b[-1], L[-1]),
    ):
        out_first = out_a[0] if d == "a" else out_b[0]
        jam = eps_up[0] * fd.rho_max
        nxt = rho_up[0] + T / L0 * ((1 - beta0) * entry - out_first + r0)
        admitted = float(entry)
        if nxt > jam * (1 + JAM_TOL) + JAM_TOL:
            admitted = min(admitted, max(0.0, float(supply_fn(rho_up[0], eps_up[0], fd)) / (1 - beta0) - ctrl.lambda_r * r0))
            warnings.append(
                f"direction {d}: entry flow {entry:.1f} veh/h would jam the first section; admitted {admitted:.1f}"
            )
        excess[d] = (float(entry) - admitted) * T
        entries[d] = admitted

    inflow_a = np.concatenate([[entries["a"]], out_a[:-1]])
    next_a, off_a = _advance(rho_a, inflow_a, out_a, hw.exit_rate_a, ramp_a, T, L)
    inflow_b_rev = np.concatenate([[entries["b"]], out_b[:-1]])
    next_b_rev, off_b_rev = _advance(rb, inflow_b_rev, out_b, hw.exit_rate_b[::-1], ramp_b[::-1], T, L[::-1])
    next_b = next_b_rev[::-1]
    off_b = off_b_rev[::-1]

    # densities can only dip below zero through rounding
    next_a = np.maximum(next_a, 0.0)
    next_b = np.maximum(next_b, 0.0)

    for d, nxt, eps_dir in (("a", next_a, eps_a), ("b", next_b, eps_b)):
        jam = eps_dir * fd.rho_max
        over = np.flatnonzero(nxt > jam * (1 + JAM_TOL) + JAM_TOL)
        for i in over:
            warnings.append(
                f"direction {d}, section {i + 1}: density {nxt[i]:.3f} exceeds jam density {jam[i]:.3f}"
            )

    q_a = np.concatenate([[entries["a"]], out_a])
    q_b = np.empty(n + 2)
    q_b[0] = np.nan
    q_b[1 : n + 1] = out_b[::-1]
    q_b[n + 1] = entries["b"]
    flows = StepFlows(q_a, q_b, off_a, off_b, excess["a"], excess["b"], warnings)
    return next_a, next_b, flows


@dataclass(frozen=True, eq=False)
class TrafficTrajectory:
    """Result of a CTM rollout (or the state part of a QP solution).

    ``rho_a``/``rho_b`` are ``(n, K+1)`` with the initial state in column 0.
    ``q_a`` is ``(n+1, K)`` indexed by boundary 0..n (row 0 = entry flow);
    ``q_b`` is ``(n+2, K)`` indexed 0..n+1 with row n+1 the entry flow and row 0
    unused (NaN).  ``rel_a``/``rel_b`` are ``(n, K)`` relative densities at steps
    0..K-1 against the applied critical density.
    """

    rho_a: np.ndarray
    rho_b: np.ndarray
    q_a: np.ndarray
    q_b: np.ndarray
    offramp_a: np.ndarray
    offramp_b: np.ndarray
    rel_a: np.ndarray
    rel_b: np.ndarray
    eps_a: np.ndarray
    eps_b: np.ndarray
    tts: float
    T: float
    lengths: np.ndarray
    origin_queue_a: np.ndarray
    origin_queue_b: np.ndarray
    warnings: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.rho_a.shape[0]

    @property
    def K(self) -> int:
        return self.rho_a.shape[1] - 1

    def vehicles(self, direction: str) -> np.ndarray:
        """Vehicles on the stretch per step (0..K) for one direction."""
        rho = self.rho_a if direction == "a" else self.rho_b
        return self.lengths @ rho

    def balance(self, direction: str, ramp: np.ndarray) -> tuple[float, float]:
        """``(initial + entered, final + exited)`` vehicle counts for one direction."""
        if direction == "a":
            rho, entry, exit_, off = self.rho_a, self.q_a[0], self.q_a[-1], self.offramp_a
        else:
            rho, entry, exit_, off = self.rho_b, self.q_b[-1], self.q_b[1], self.offramp_b
        ins = self.lengths @ rho[:, 0] + self.T * (entry.sum() + ramp.sum())
        outs = self.lengths @ rho[:, -1] + self.T * (exit_.sum() + off.sum())
        return float(ins), float(outs)


def tts(trajectory: TrafficTrajectory) -> float:
    """Total time spent (veh*h) over steps 1..K, both directions."""
    rho = trajectory.rho_a[:, 1:] + trajectory.rho_b[:, 1:]
    return float(trajectory.T * (trajectory.lengths @ rho).sum())


def _check_plan(scenario: Scenario, plan: SharingPlan) -> None:
    if plan.eps.shape != (scenario.n, scenario.K_c):
        raise ScenarioError(
            f"plan has shape {plan.eps.shape}, scenario needs ({scenario.n}, {scenario.K_c})"
        )


def simulate(scenario: Scenario, plan: SharingPlan | None = None) -> TrafficTrajectory:
    """Roll the CTM over the scenario horizon under ``plan`` (default: eps = 0.5)."""
    if plan is None:
        plan = no_control_plan(scenario)
    _check_plan(scenario, plan)
    n, K = scenario.n, scenario.K
    ctrl, dem, fd = scenario.control, scenario.demands, scenario.fd

    rho_a = np.empty((n, K + 1))
    rho_b = np.empty((n, K + 1))
    q_a = np.empty((n + 1, K))
    q_b = np.empty((n + 2, K))
    off_a = np.empty((n, K))
    off_b = np.empty((n, K))
    eps_a_k = np.empty((n, K))
    eps_b_k = np.empty((n, K))
    queue_a = np.zeros(K + 1)
    queue_b = np.zeros(K + 1)
    rho_a[:, 0] = scenario.rho0_a
    rho_b[:, 0] = scenario.rho0_b
    warnings: list[str] = []

    kc_of_k = ctrl.control_index(np.arange(K))
    for k in range(K):
        kc = kc_of_k[k]
        ea, eb = plan.eps_a[:, kc], plan.eps_b[:, kc]
        eps_a_k[:, k] = ea
        eps_b_k[:, k] = eb
        rho_a[:, k + 1], rho_b[:, k + 1], fl = step(
            rho_a[:, k], rho_b[:, k], ea, eb,
            dem.entry_a[k], dem.entry_b[k], dem.ramp_a[:, k], dem.ramp_b[:, k],
            scenario,
        )
        q_a[:, k] = fl.q_a
        q_b[:, k] = fl.q_b
        off_a[:, k] = fl.offramp_a
        off_b[:, k] = fl.offramp_b
        queue_a[k + 1] = queue_a[k] + fl.origin_excess_a
        queue_b[k + 1] = queue_b[k] + fl.origin_excess_b
        warnings.extend(f"k={k}: {w}" for w in fl.warnings)

    rel_a = rho_a[:, :-1] / (eps_a_k * fd.rho_cr)
    rel_b = rho_b[:, :-1] / (eps_b_k * fd.rho_cr)
    L = scenario.highway.lengths
    total = float(ctrl.T * (L @ (rho_a[:, 1:] + rho_b[:, 1:])).sum())
    arrays = [rho_a, rho_b, q_a, q_b, off_a, off_b, rel_a, rel_b, eps_a_k, eps_b_k, queue_a, queue_b]
    for arr in arrays:
        arr.flags.writeable = False
    return TrafficTrajectory(
        rho_a=rho_a, rho_b=rho_b, q_a=q_a, q_b=q_b, offramp_a=off_a, offramp_b=off_b,
        rel_a=rel_a, rel_b=rel_b, eps_a=eps_a_k, eps_b=eps_b_k, tts=total, T=ctrl.T,
        lengths=L, origin_queue_a=queue_a, origin_queue_b=queue_b, warnings=tuple(warnings),
    )


# --- file formats ---------------------------------------------------------

TRAJECTORY_COLUMNS = ("k", "section", "direction", "rho", "rel_rho", "q", "eps_applied")


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trajectory_csv(trajectory: TrafficTrajectory, path: str | Path) -> Path:
    """Write one row per (k, section, direction) plus a JSON summary next to it.

    ``rho`` is the density at the start of step k, ``q`` the flow leaving the
    section during step k, ``eps_applied`` the applied share in force.  The
    summary ``<stem>.summary.json`` holds ``tts``, the origin-queue totals and
    the warning list.
    """
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    n, K = trajectory.n, trajectory.K
    for k in range(K):
        for i in range(n):
            w.writerow([k, i + 1, "a", _fmt(trajectory.rho_a[i, k]), _fmt(trajectory.rel_a[i, k]),
                        _fmt(trajectory.q_a[i + 1, k]), _fmt(trajectory.eps_a[i, k])])
        for i in range(n):
            w.writerow([k, i + 1, "b", _fmt(trajectory.rho_b[i, k]), _fmt(trajectory.rel_b[i, k]),
                        _fmt(trajectory.q_b[i + 1, k]), _fmt(trajectory.eps_b[i, k])])
    path.write_text(buf.getvalue())
    summary = {
        "tts": trajectory.tts,
        "origin_queue_a": float(trajectory.origin_queue_a[-1]),
        "origin_queue_b": float(trajectory.origin_queue_b[-1]),
        "warnings": list(trajectory.warnings),
    }
    path.with_suffix(".summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return path


def write_plan_csv(plan: SharingPlan, path: str | Path) -> Path:
    """Plan file: ``section,k_c,eps`` with 1-based sections."""
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["section", "k_c", "eps"])
    for i in range(plan.n):
        for kc in range(plan.K_c):
            w.writerow([i + 1, kc, _fmt(plan.eps[i, kc])])
    path.write_text(buf.getvalue())
    return path


def read_plan_csv(path: str | Path, scenario: Scenario) -> SharingPlan:
    eps = np.full((scenario.n, scenario.K_c), np.nan)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            i, kc = int(row["section"]) - 1, int(row["k_c"])
            if not (0 <= i < scenario.n and 0 <= kc < scenario.K_c):
                raise ScenarioError(f"plan entry (section={i + 1}, k_c={kc}) outside scenario dimensions")
            eps[i, kc] = float(row["eps"])
    if np.isnan(eps).any():
        raise ScenarioError(f"plan {path} does not cover all ({scenario.n} x {scenario.K_c}) entries")
    return SharingPlan.from_eps(eps, scenario.control.eps_init)
