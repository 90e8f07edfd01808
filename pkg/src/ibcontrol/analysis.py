"""Comparison reports, relative-density fields, per-section series and eps surfaces.

Everything is exported as CSV with a fixed column order; plotting is left to
external tools (the layouts are gnuplot-friendly: one row per grid point).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ctm import SharingPlan, TrafficTrajectory, no_control_plan, simulate
from .projection import MarginSeries, ProjectedDemands, project_demands, supply_demand_margins
from .qp_build import QpExtract, QpProblem, build_problem, extract_solution
from .qp_solve import HoldingBack, QpSolution, SolverSettings, detect_holding_back, solve
from .scenario import Scenario, with_capacity_drop

__all__ = [
    "REPORT_COLUMNS",
    "VARIANTS",
    "ReportRow",
    "VariantRun",
    "AnalysisReport",
    "run_variant",
    "compare",
    "report_row",
    "write_report_csv",
    "read_report_csv",
    "DensityField",
    "density_field",
    "congestion_window",
    "write_density_csv",
    "EpsSurface",
    "eps_surface",
    "write_eps_csv",
    "section_series",
    "write_series_csv",
    "bottleneck_summary",
]

VARIANTS = ("on", "off")

REPORT_COLUMNS = (
    "scenario",
    "variant",
    "no_control_tts",
    "qp_tts",
    "sim_tts",
    "improvement_qp_pct",
    "improvement_sim_pct",
    "holding_back",
    "bottleneck",
    "solver_status",
)

# Absolute slack (veh*h) for the report invariants.
TTS_TOL = 1e-6


def _fmt(x: float) -> str:
    return repr(float(x))


def _improvement(base: float, controlled: float) -> float:
    return 0.0 if base == 0 else 100.0 * (base - controlled) / base


@dataclass(frozen=True)
class ReportRow:
    """One scenario/variant line; improvements are derived from the TTS values."""

    scenario: str
    variant: str
    no_control_tts: float
    qp_tts: float
    sim_tts: float
    holding_back: str
    bottleneck: str
    solver_status: str

    @property
    def improvement_qp_pct(self) -> float:
        return _improvement(self.no_control_tts, self.qp_tts)

    @property
    def improvement_sim_pct(self) -> float:
        return _improvement(self.no_control_tts, self.sim_tts)

    def violations(self, tol: float = TTS_TOL) -> list[str]:
        """Report invariants that do not hold for this row."""
        out = []
        tag = f"{self.scenario}/{self.variant}"
        if self.solver_status != "optimal":
            out.append(f"{tag}: solver status {self.solver_status}")
        if self.sim_tts < self.qp_tts - tol:
            out.append(f"{tag}: sim_tts {self.sim_tts:.6f} below qp_tts {self.qp_tts:.6f}")
        if self.qp_tts > self.no_control_tts + tol:
            out.append(f"{tag}: qp_tts {self.qp_tts:.6f} above no-control {self.no_control_tts:.6f}")
        if self.improvement_qp_pct < self.improvement_sim_pct - 1e-9:
            out.append(f"{tag}: QP improvement below simulated improvement")
        return out

    def as_record(self) -> list[str]:
        return [
            self.scenario, self.variant, _fmt(self.no_control_tts), _fmt(self.qp_tts), _fmt(self.sim_tts),
            _fmt(self.improvement_qp_pct), _fmt(self.improvement_sim_pct),
            self.holding_back, self.bottleneck, self.solver_status,
        ]


@dataclass(frozen=True, eq=False)
class VariantRun:
    """Everything computed for one capacity-drop variant of a scenario."""

    variant: str
    scenario: Scenario
    problem: QpProblem
    solution: QpSolution
    extract: QpExtract
    no_control: TrafficTrajectory
    controlled: TrafficTrajectory
    holding_back: HoldingBack
    margins: MarginSeries
    projected: ProjectedDemands

    @property
    def plan(self) -> SharingPlan:
        return self.extract.plan


@dataclass(frozen=True, eq=False)
class AnalysisReport:
    rows: tuple[ReportRow, ...]
    runs: tuple[VariantRun, ...] = field(default=())

    def violations(self, tol: float = TTS_TOL) -> list[str]:
        return [v for r in self.rows for v in r.violations(tol)]

    def row(self, scenario: str, variant: str) -> ReportRow:
        for r in self.rows:
            if r.scenario == scenario and r.variant == variant:
                return r
        raise KeyError((scenario, variant))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in self.rows:
            w.writerow(r.as_record())
        return buf.getvalue()


def bottleneck_summary(margins: MarginSeries) -> str:
    """``s<i>:k<first>-<last>`` per section with a projected bottleneck, else ``none``."""
    parts = []
    m = margins.steps_per_control
    for i in range(margins.bottleneck.shape[0]):
        cols = np.flatnonzero(margins.bottleneck[i])
        if cols.size:
            parts.append(f"s{i + 1}:k{cols[0] * m}-{(cols[-1] + 1) * m - 1}")
    return " ".join(parts) if parts else "none"


def report_row(label: str, variant: str, no_control: TrafficTrajectory, qp_tts: float,
               controlled: TrafficTrajectory, holding_back: HoldingBack, margins: MarginSeries,
               status: str) -> ReportRow:
    return ReportRow(label, variant, no_control.tts, float(qp_tts), controlled.tts,
                     holding_back.summary(), bottleneck_summary(margins), str(status))


def _variant_scenario(scenario: Scenario, variant: str) -> Scenario:
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    return with_capacity_drop(scenario, variant == "on")


def run_variant(scenario: Scenario, variant: str, settings: SolverSettings | None = None,
                holding_back_tol: float = 1.0) -> VariantRun:
    """No-control rollout, QP solve and re-simulation under the QP plan."""
    sc = _variant_scenario(scenario, variant)
    projected = project_demands(sc)
    problem = build_problem(sc, projected)
    sol = solve(problem, settings)
    ex = extract_solution(sol.x, problem.index_map, sc)
    return VariantRun(
        variant=variant, scenario=sc, problem=problem, solution=sol, extract=ex,
        no_control=simulate(sc, no_control_plan(sc)), controlled=simulate(sc, ex.plan),
        holding_back=detect_holding_back(sc, ex, holding_back_tol),
        margins=supply_demand_margins(sc, projected), projected=projected,
    )


def compare(scenario: Scenario, variants=VARIANTS, settings: SolverSettings | None = None,
            holding_back_tol: float = 1.0) -> AnalysisReport:
    """Run every requested capacity-drop variant and collect one row each.

    Rows carry the base scenario label so both variants line up in a table.
    """
    runs = tuple(run_variant(scenario, v, settings, holding_back_tol) for v in variants)
    rows = tuple(
        report_row(scenario.label, r.variant, r.no_control, r.extract.qp_tts, r.controlled,
                   r.holding_back, r.margins, r.solution.status)
        for r in runs
    )
    return AnalysisReport(rows, runs)


def write_report_csv(report: AnalysisReport, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(report.to_csv())
    return path


def read_report_csv(path: str | Path) -> AnalysisReport:
    """Read rows back; the stored improvement columns are checked against the TTS values."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        for rec in reader:
            row = ReportRow(rec["scenario"], rec["variant"], float(rec["no_control_tts"]),
                            float(rec["qp_tts"]), float(rec["sim_tts"]), rec["holding_back"],
                            rec["bottleneck"], rec["solver_status"])
            for name in ("improvement_qp_pct", "improvement_sim_pct"):
                if not np.isclose(float(rec[name]), getattr(row, name), rtol=1e-12, atol=1e-12):
                    raise ValueError(f"{path}: {name} inconsistent with the TTS columns")
            rows.append(row)
    return AnalysisReport(tuple(rows))


# --- relative-density fields ----------------------------------------------

@dataclass(frozen=True, eq=False)
class DensityField:
    """``rel_a``/``rel_b`` of shape ``(n, K)``; a cell is congested when ``rel > 1 + tol``."""

    rel_a: np.ndarray
    rel_b: np.ndarray
    tol: float = 0.0

    @property
    def mask_a(self) -> np.ndarray:
        return self.rel_a > 1.0 + self.tol

    @property
    def mask_b(self) -> np.ndarray:
        return self.rel_b > 1.0 + self.tol

    def mask(self, direction: str) -> np.ndarray:
        return self.mask_a if direction == "a" else self.mask_b

    @property
    def empty(self) -> bool:
        return not (self.mask_a.any() or self.mask_b.any())

    @property
    def max_rel(self) -> float:
        return float(max(self.rel_a.max(initial=0.0), self.rel_b.max(initial=0.0)))

    def congested_sections(self, direction: str) -> list[int]:
        """1-based sections that are congested at some step."""
        return [int(i) + 1 for i in np.flatnonzero(self.mask(direction).any(axis=1))]


def density_field(trajectory: TrafficTrajectory, tol: float = 0.0) -> DensityField:
    """Relative densities of a rollout (density over the applied critical density)."""
    return DensityField(np.asarray(trajectory.rel_a), np.asarray(trajectory.rel_b), float(tol))


def congestion_window(field_: DensityField, direction: str, section: int) -> tuple[int, int] | None:
    """First and last step at which ``section`` (1-based) is congested, or ``None``."""
    ks = np.flatnonzero(field_.mask(direction)[section - 1])
    return None if ks.size == 0 else (int(ks[0]), int(ks[-1]))


def write_density_csv(field_: DensityField, path: str | Path) -> Path:
    """Columns ``k,section,direction,rel_rho,congested``."""
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "section", "direction", "rel_rho", "congested"])
    n, K = field_.rel_a.shape
    for k in range(K):
        for d, rel, mask in (("a", field_.rel_a, field_.mask_a), ("b", field_.rel_b, field_.mask_b)):
            for i in range(n):
                w.writerow([k, i + 1, d, _fmt(rel[i, k]), int(mask[i, k])])
    path.write_text(buf.getvalue())
    return path


# --- eps surfaces -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EpsSurface:
    """Plan grid ``(n, K_c)`` with its smoothness diagnostics.

    ``max_*_step`` are the largest absolute changes between neighbouring
    control steps / sections; ``*_energy`` are the sums of squared changes,
    i.e. the quantities the temporal and spatial smoothness weights multiply.
    """

    eps: np.ndarray
    max_temporal_step: float
    max_spatial_step: float
    temporal_energy: float
    spatial_energy: float

    def half_means(self) -> tuple[float, float]:
        """Mean eps over the first and second half of the control horizon."""
        h = self.eps.shape[1] // 2
        return float(self.eps[:, :h].mean()), float(self.eps[:, h:].mean())


def eps_surface(plan: SharingPlan) -> EpsSurface:
    eps = np.asarray(plan.eps)
    dt = np.diff(eps, axis=1)
    ds = np.diff(eps, axis=0)
    return EpsSurface(eps, float(np.abs(dt).max(initial=0.0)), float(np.abs(ds).max(initial=0.0)),
                      float((dt**2).sum()), float((ds**2).sum()))


def write_eps_csv(surface: EpsSurface, path: str | Path, steps_per_control: int = 1) -> Path:
    """Columns ``k_c,k,section,eps``."""
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k_c", "k", "section", "eps"])
    n, K_c = surface.eps.shape
    for kc in range(K_c):
        for i in range(n):
            w.writerow([kc, kc * steps_per_control, i + 1, _fmt(surface.eps[i, kc])])
    path.write_text(buf.getvalue())
    return path


# --- per-section series -------------------------------------------------------

SERIES_COLUMNS = ("k", "rho_a", "rho_b", "q_a", "q_b", "q_total", "eps_a", "eps_b",
                  "cap_a", "cap_b", "rel_a", "rel_b")


def section_series(trajectory: TrafficTrajectory, section: int, q_cap: float) -> dict[str, np.ndarray]:
    """Time series of one section (1-based): densities, exit flows and assigned capacities.

    ``q_a``/``q_b`` are the flows leaving the section in each direction; their
    sum is compared against the carriageway capacity in the congested case.
    """
    i = section - 1
    n, K = trajectory.n, trajectory.K
    if not 0 <= i < n:
        raise ValueError(f"section {section} outside 1..{n}")
    q_a = trajectory.q_a[i + 1]
    q_b = trajectory.q_b[i + 1]
    ea, eb = trajectory.eps_a[i], trajectory.eps_b[i]
    return {
        "k": np.arange(K),
        "rho_a": trajectory.rho_a[i, :K],
        "rho_b": trajectory.rho_b[i, :K],
        "q_a": q_a,
        "q_b": q_b,
        "q_total": q_a + q_b,
        "eps_a": ea,
        "eps_b": eb,
        "cap_a": ea * q_cap,
        "cap_b": eb * q_cap,
        "rel_a": trajectory.rel_a[i],
        "rel_b": trajectory.rel_b[i],
    }


def write_series_csv(series: dict[str, np.ndarray], path: str | Path) -> Path:
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SERIES_COLUMNS)
    for j in range(series["k"].size):
        w.writerow([int(series["k"][j])] + [_fmt(series[c][j]) for c in SERIES_COLUMNS[1:]])
    path.write_text(buf.getvalue())
    return path
