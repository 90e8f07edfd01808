"""Assembly of the internal-boundary QP over the CTM.

Decision vector, family-major and time-major inside each family::

    rho_a(i, k), rho_b(i, k)     k = 1..K        densities
    q_a(i, k),   q_b(i, k)       k = 0..K-1      exit flows of section i
    eps(i, kc), eps_a(i, kc), eps_b(i, kc)       kc = 0..K_c-1

Entry flows are known constants (the scenario demand).  The min-operators of
the CTM become linear upper bounds on each flow, the applied-share min-rule
becomes ``eps_a <= eps(kc)``, ``eps_a <= eps(kc-1)`` (mirrored for b), and
conservation gives the equality rows.  Rows are emitted family-major, then by
k (or kc), then by section.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .ctm import SharingPlan, TrafficTrajectory
from .projection import ProjectedDemands, project_demands
from .scenario import Scenario

__all__ = [
    "FAMILIES",
    "VarIndexMap",
    "QpProblem",
    "build_index_map",
    "build_objective",
    "build_constraints",
    "build_problem",
    "flow_tiebreak_vector",
    "FLOW_TIEBREAK",
    "extract_solution",
    "QpExtract",
    "objective_terms",
    "pack_trajectory",
    "write_problem",
    "read_problem",
    "write_vectors",
    "read_vectors",
]

FAMILIES = ("rho_a", "rho_b", "q_a", "q_b", "eps", "eps_a", "eps_b")

# Reward per veh/h of flow, in units of T^2 (veh*h per (veh/h) moved one step).
# Far below any genuine TTS trade-off; it only selects, among cost-equivalent
# solutions, the one whose flows sit on their bounds (finite-horizon ties and
# queues that could be stored in any upstream section).
FLOW_TIEBREAK = 1e-3


@dataclass(frozen=True)
class VarIndexMap:
    """Offsets of each variable family; every family is stored time-major."""

    n: int
    K: int
    K_c: int

    def size(self, family: str) -> int:
        return self.n * (self.K_c if family.startswith("eps") else self.K)

    @property
    def offsets(self) -> dict[str, int]:
        out, pos = {}, 0
        for fam in FAMILIES:
            out[fam] = pos
            pos += self.size(fam)
        return out

    @property
    def total_vars(self) -> int:
        return sum(self.size(f) for f in FAMILIES)

    def _time0(self, family: str) -> int:
        return 1 if family.startswith("rho") else 0

    def index(self, family: str, i, t):
        """Index of ``family`` at 0-based section ``i`` and time ``t``.

        ``t`` is k (1..K) for densities, k (0..K-1) for flows and kc for the
        sharing factors.  Accepts arrays.
        """
        t = np.asarray(t) - self._time0(family)
        i = np.asarray(i)
        span = self.K_c if family.startswith("eps") else self.K
        if np.any(t < 0) or np.any(t >= span) or np.any(i < 0) or np.any(i >= self.n):
            raise IndexError(f"{family}: index out of range")
        return self.offsets[family] + t * self.n + i

    def locate(self, idx: int) -> tuple[str, int, int]:
        """Inverse of :meth:`index`."""
        if not 0 <= idx < self.total_vars:
            raise IndexError(idx)
        for fam, off in reversed(list(self.offsets.items())):
            if idx >= off:
                t, i = divmod(idx - off, self.n)
                return fam, int(i), int(t + self._time0(fam))
        raise AssertionError("unreachable")

    def block(self, x: np.ndarray, family: str) -> np.ndarray:
        """View of one family in ``x`` shaped (n, time)."""
        off = self.offsets[family]
        span = self.K_c if family.startswith("eps") else self.K
        return x[off : off + self.n * span].reshape(span, self.n).T


def build_index_map(scenario: Scenario) -> VarIndexMap:
    return VarIndexMap(scenario.n, scenario.K, scenario.K_c)


@dataclass(frozen=True, eq=False)
class QpProblem:
    """``min 0.5 x'Hx + c'x + objective_constant`` s.t. ``A_i x <= b_i``, ``A_e x = b_e``, ``lb <= x <= ub``.

    ``c_tiebreak`` is the part of ``c`` that comes from the flow tie-break
    (zero if none); ``objective(x, tiebreak=False)`` leaves it out.
    """

    H: sp.csc_matrix
    c: np.ndarray
    A_i: sp.csr_matrix
    b_i: np.ndarray
    A_e: sp.csr_matrix
    b_e: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    index_map: VarIndexMap | None = None
    objective_constant: float = 0.0
    ineq_labels: tuple[tuple[str, int], ...] = ()
    c_tiebreak: np.ndarray | None = None

    @property
    def n_vars(self) -> int:
        return self.c.size

    def objective(self, x: np.ndarray, tiebreak: bool = True) -> float:
        val = 0.5 * x @ (self.H @ x) + self.c @ x + self.objective_constant
        if not tiebreak and self.c_tiebreak is not None:
            val -= self.c_tiebreak @ x
        return float(val)

    def violations(self, x: np.ndarray) -> dict[str, float]:
        """Largest violation per constraint group (0 when satisfied)."""
        eq = np.abs(self.A_e @ x - self.b_e).max(initial=0.0)
        ineq = np.maximum(self.A_i @ x - self.b_i, 0).max(initial=0.0)
        bnd = max(np.maximum(self.lb - x, 0).max(initial=0.0), np.maximum(x - self.ub, 0).max(initial=0.0))
        return {"eq": float(eq), "ineq": float(ineq), "bounds": float(bnd)}

    def is_feasible(self, x: np.ndarray, tol: float) -> bool:
        return max(self.violations(x).values()) <= tol


class _Triplets:
    """Row-major sparse assembly with labelled row groups."""

    def __init__(self, n_cols: int):
        self.n_cols = n_cols
        self.rows: list[np.ndarray] = []
        self.cols: list[np.ndarray] = []
        self.vals: list[np.ndarray] = []
        self.rhs: list[np.ndarray] = []
        self.labels: list[tuple[str, int]] = []
        self.n_rows = 0

    def add(self, label: str, terms, rhs):
        """Add a group of rows; ``terms`` are ``(col_idx, coef)`` arrays of equal row count."""
        rhs = np.asarray(rhs, dtype=float).ravel()
        m = rhs.size
        row_ids = self.n_rows + np.arange(m)
        for cols, coef in terms:
            cols = np.asarray(cols).ravel()
            coef = np.broadcast_to(np.asarray(coef, dtype=float), cols.shape).ravel()
            keep = coef != 0
            self.rows.append(row_ids[keep])
            self.cols.append(cols[keep])
            self.vals.append(coef[keep])
        self.rhs.append(rhs)
        self.labels.append((label, m))
        self.n_rows += m

    def matrix(self) -> tuple[sp.csr_matrix, np.ndarray]:
        if self.rows:
            r, c, v = (np.concatenate(a) for a in (self.rows, self.cols, self.vals))
        else:
            r = c = np.zeros(0, dtype=int)
            v = np.zeros(0)
        A = sp.csr_matrix((v, (r, c)), shape=(self.n_rows, self.n_cols))
        A.sum_duplicates()
        A.sort_indices()
        b = np.concatenate(self.rhs) if self.rhs else np.zeros(0)
        return A, b


def _grids(n: int, K: int):
    """(k, i) index grids in row order: k-major then section."""
    k, i = np.meshgrid(np.arange(K), np.arange(n), indexing="ij")
    return k.ravel(), i.ravel()


def build_constraints(scenario: Scenario, index_map: VarIndexMap | None = None):
    """Return ``(A_e, b_e, A_i, b_i, lb, ub, ineq_labels)``."""
    im = index_map or build_index_map(scenario)
    n, K, K_c = im.n, im.K, im.K_c
    fd, ctrl, hw, dem = scenario.fd, scenario.control, scenario.highway, scenario.demands
    T, L = ctrl.T, hw.lengths
    k, i = _grids(n, K)
    kc = ctrl.control_index(k)
    first = k == 0
    ks = np.maximum(k, 1)  # density index; masked by coefficient where k == 0

    # ---- equalities: conservation
    eq = _Triplets(im.total_vars)
    for d in "ab":
        beta = getattr(hw, f"exit_rate_{d}")
        ramp = getattr(dem, f"ramp_{d}")
        rho0 = getattr(scenario, f"rho0_{d}")
        entry = dem.entry_a if d == "a" else dem.entry_b
        up = i - 1 if d == "a" else i + 1  # upstream section feeding i
        has_up = (up >= 0) & (up < n)
        g = T / L[i]
        rhs = np.where(first, rho0[i], 0.0) + g * (ramp[i, k] + np.where(has_up, 0.0, (1 - beta[i]) * entry[k]))
        eq.add(
            f"conservation_{d}",
            [
                (im.index(f"rho_{d}", i, k + 1), 1.0),
                (im.index(f"rho_{d}", i, ks), np.where(first, 0.0, -1.0)),
                (im.index(f"q_{d}", np.clip(up, 0, n - 1), k), np.where(has_up, -g * (1 - beta[i]), 0.0)),
                (im.index(f"q_{d}", i, k), g),
            ],
            rhs,
        )

    # ---- inequalities
    iq = _Triplets(im.total_vars)
    c_drop = ctrl.lambda_d * fd.q_cap / (fd.rho_cr - fd.rho_max)  # <= 0
    for d in "ab":
        beta = getattr(hw, f"exit_rate_{d}")
        ramp = getattr(dem, f"ramp_{d}")
        rho0 = getattr(scenario, f"rho0_{d}")
        rho, q, e = f"rho_{d}", f"q_{d}", f"eps_{d}"
        own_rho = im.index(rho, i, ks)
        iq.add(
            f"demand_free_{d}",
            [(im.index(q, i, k), 1.0), (own_rho, np.where(first, 0.0, -fd.v_f))],
            np.where(first, fd.v_f * rho0[i], 0.0),
        )
        iq.add(
            f"demand_cap_{d}",
            [
                (im.index(q, i, k), 1.0),
                (own_rho, np.where(first, 0.0, -c_drop)),
                (im.index(e, i, kc), -(fd.q_cap - c_drop * fd.rho_cr)),
            ],
            np.where(first, c_drop * rho0[i], 0.0),
        )
        down = i + 1 if d == "a" else i - 1
        sel = (down >= 0) & (down < n)
        kk, ii, dd, ff, kcc = k[sel], i[sel], down[sel], first[sel], kc[sel]
        scale = 1.0 / (1.0 - beta[dd])
        iq.add(
            f"supply_jam_{d}",
            [
                (im.index(q, ii, kk), 1.0),
                (im.index(rho, dd, np.maximum(kk, 1)), np.where(ff, 0.0, fd.w_s * scale)),
                (im.index(e, dd, kcc), -fd.w_s * fd.rho_max * scale),
            ],
            -ctrl.lambda_r * ramp[dd, kk] - np.where(ff, fd.w_s * scale * rho0[dd], 0.0),
        )
        iq.add(
            f"supply_cap_{d}",
            [(im.index(q, ii, kk), 1.0), (im.index(e, dd, kcc), -fd.q_cap * scale)],
            -ctrl.lambda_r * ramp[dd, kk],
        )

    kc_g, i_c = _grids(n, K_c)
    prev0 = kc_g == 0
    kcp = np.maximum(kc_g - 1, 0)
    eps_init = ctrl.eps_init[i_c]
    iq.add("min_rule_a_now", [(im.index("eps_a", i_c, kc_g), 1.0), (im.index("eps", i_c, kc_g), -1.0)],
           np.zeros(kc_g.size))
    iq.add("min_rule_a_prev", [(im.index("eps_a", i_c, kc_g), 1.0),
                               (im.index("eps", i_c, kcp), np.where(prev0, 0.0, -1.0))],
           np.where(prev0, eps_init, 0.0))
    iq.add("min_rule_b_now", [(im.index("eps_b", i_c, kc_g), 1.0), (im.index("eps", i_c, kc_g), 1.0)],
           np.ones(kc_g.size))
    iq.add("min_rule_b_prev", [(im.index("eps_b", i_c, kc_g), 1.0),
                               (im.index("eps", i_c, kcp), np.where(prev0, 0.0, 1.0))],
           np.where(prev0, 1.0 - eps_init, 1.0))
    for d in "ab":
        iq.add(f"jam_{d}", [(im.index(f"rho_{d}", i, k + 1), 1.0), (im.index(f"eps_{d}", i, kc), -fd.rho_max)],
               np.zeros(k.size))

    A_e, b_e = eq.matrix()
    A_i, b_i = iq.matrix()

    lb = np.zeros(im.total_vars)
    ub = np.empty(im.total_vars)
    off = im.offsets
    for fam in ("rho_a", "rho_b"):
        ub[off[fam] : off[fam] + im.size(fam)] = fd.rho_max
    for fam in ("q_a", "q_b"):
        ub[off[fam] : off[fam] + im.size(fam)] = fd.q_cap
    for fam in ("eps_a", "eps_b"):
        ub[off[fam] : off[fam] + im.size(fam)] = 1.0
    sl = slice(off["eps"], off["eps"] + im.size("eps"))
    lb[sl] = np.tile(ctrl.eps_min, K_c)
    ub[sl] = np.tile(ctrl.eps_max, K_c)
    return A_e, b_e, A_i, b_i, lb, ub, tuple(iq.labels)


def build_objective(scenario: Scenario, projected: ProjectedDemands | None = None,
                    index_map: VarIndexMap | None = None):
    """Return ``(H, c, objective_constant)`` for the cost function.

    Terms: total time spent, a reward on applied shares (keeps the min-rule
    tight), temporal and spatial smoothness of ``eps``, and the capacity-reserve
    balancing term ``eps^2/d_a + (1-eps)^2/d_b`` on floored projected demands.
    """
    im = index_map or build_index_map(scenario)
    if projected is None:
        projected = project_demands(scenario)
    n, K, K_c = im.n, im.K, im.K_c
    ctrl, L = scenario.control, scenario.highway.lengths
    N = im.total_vars
    c = np.zeros(N)
    off = im.offsets
    for fam in ("rho_a", "rho_b"):
        c[off[fam] : off[fam] + n * K] = np.tile(ctrl.T * L, K)
    for fam in ("eps_a", "eps_b"):
        c[off[fam] : off[fam] + n * K_c] = -ctrl.w1

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []

    def add_difference(a_idx, b_idx, weight):
        # weight * (x_a - x_b)^2 == 0.5 x' H x with H += 2w [[1,-1],[-1,1]]
        if weight == 0 or a_idx.size == 0:
            return
        w2 = 2.0 * weight
        rows.extend([a_idx, b_idx, a_idx, b_idx])
        cols.extend([a_idx, b_idx, b_idx, a_idx])
        vals.extend([np.full(a_idx.size, w2), np.full(a_idx.size, w2),
                     np.full(a_idx.size, -w2), np.full(a_idx.size, -w2)])

    kc_g, i_c = _grids(n, K_c)
    t = kc_g >= 1
    add_difference(im.index("eps", i_c[t], kc_g[t]), im.index("eps", i_c[t], kc_g[t] - 1), ctrl.w2)
    s = i_c >= 1
    add_difference(im.index("eps", i_c[s], kc_g[s]), im.index("eps", i_c[s] - 1, kc_g[s]), ctrl.w3)

    constant = 0.0
    if ctrl.w4:
        inv_a = 1.0 / projected.d_a_floored[i_c, kc_g]
        inv_b = 1.0 / projected.d_b_floored[i_c, kc_g]
        idx = im.index("eps", i_c, kc_g)
        rows.append(idx)
        cols.append(idx)
        vals.append(2.0 * ctrl.w4 * (inv_a + inv_b))
        c[idx] += -2.0 * ctrl.w4 * inv_b
        constant = float(ctrl.w4 * inv_b.sum())

    if rows:
        H = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    else:
        H = sp.csc_matrix((N, N))
    H.sum_duplicates()
    H.sort_indices()
    return H, c, constant


def flow_tiebreak_vector(scenario: Scenario, index_map: VarIndexMap, weight: float = FLOW_TIEBREAK) -> np.ndarray:
    """Linear cost ``-weight * T^2`` on every flow variable."""
    c = np.zeros(index_map.total_vars)
    for fam in ("q_a", "q_b"):
        off = index_map.offsets[fam]
        c[off : off + index_map.size(fam)] = -weight * scenario.control.T ** 2
    return c


def build_problem(scenario: Scenario, projected: ProjectedDemands | None = None,
                  flow_tiebreak: float = FLOW_TIEBREAK) -> QpProblem:
    """Assemble the full QP; ``flow_tiebreak=0`` gives the bare cost function."""
    im = build_index_map(scenario)
    H, c, const = build_objective(scenario, projected, im)
    A_e, b_e, A_i, b_i, lb, ub, labels = build_constraints(scenario, im)
    c_tb = flow_tiebreak_vector(scenario, im, flow_tiebreak) if flow_tiebreak else None
    if c_tb is not None:
        c = c + c_tb
    return QpProblem(H=H, c=c, A_i=A_i, b_i=b_i, A_e=A_e, b_e=b_e, lb=lb, ub=ub,
                     index_map=im, objective_constant=const, ineq_labels=labels, c_tiebreak=c_tb)


def objective_terms(scenario: Scenario, eps: np.ndarray, eps_a: np.ndarray, eps_b: np.ndarray,
                    trajectory_tts: float, projected: ProjectedDemands | None = None) -> dict[str, float]:
    """Evaluate each cost term directly (not through H and c)."""
    if projected is None:
        projected = project_demands(scenario)
    ctrl = scenario.control
    d_a, d_b = projected.d_a_floored, projected.d_b_floored
    terms = {
        "tts": float(trajectory_tts),
        "share_reward": float(-ctrl.w1 * (eps_a.sum() + eps_b.sum())),
        "temporal": float(ctrl.w2 * (np.diff(eps, axis=1) ** 2).sum()),
        "spatial": float(ctrl.w3 * (np.diff(eps, axis=0) ** 2).sum()),
        "balance": float(ctrl.w4 * (eps**2 / d_a + (1 - eps) ** 2 / d_b).sum()),
    }
    terms["total"] = sum(terms.values())
    return terms


def pack_trajectory(scenario: Scenario, trajectory: TrafficTrajectory, plan: SharingPlan,
                    index_map: VarIndexMap | None = None) -> np.ndarray:
    """Decision vector holding a simulated trajectory and its plan."""
    im = index_map or build_index_map(scenario)
    x = np.zeros(im.total_vars)
    n = im.n

    def put(fam, arr):
        off = im.offsets[fam]
        x[off : off + arr.size] = arr.T.ravel()

    put("rho_a", trajectory.rho_a[:, 1:])
    put("rho_b", trajectory.rho_b[:, 1:])
    put("q_a", trajectory.q_a[1 : n + 1])
    put("q_b", trajectory.q_b[1 : n + 1])
    put("eps", plan.eps)
    put("eps_a", plan.eps_a)
    put("eps_b", plan.eps_b)
    return x


@dataclass(frozen=True, eq=False)
class QpExtract:
    plan: SharingPlan
    trajectory: TrafficTrajectory
    qp_tts: float
    eps_a_qp: np.ndarray
    eps_b_qp: np.ndarray


def extract_solution(x: np.ndarray, index_map: VarIndexMap, scenario: Scenario) -> QpExtract:
    """Read the plan and the QP-implied traffic states out of ``x``.

    The plan's applied factors are recomputed from ``eps`` with the min-rule;
    the factors the QP itself carried are kept in ``eps_a_qp``/``eps_b_qp``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (index_map.total_vars,):
        raise ValueError(f"x has {x.size} entries, problem has {index_map.total_vars}")
    K = index_map.K
    ctrl, hw, dem, fd = scenario.control, scenario.highway, scenario.demands, scenario.fd
    eps = np.clip(index_map.block(x, "eps"), ctrl.eps_min[:, None], ctrl.eps_max[:, None])
    plan = SharingPlan.from_eps(eps, ctrl.eps_init)
    eps_a = index_map.block(x, "eps_a").copy()
    eps_b = index_map.block(x, "eps_b").copy()

    rho_a = np.column_stack([scenario.rho0_a, index_map.block(x, "rho_a")])
    rho_b = np.column_stack([scenario.rho0_b, index_map.block(x, "rho_b")])
    q_a = np.vstack([dem.entry_a[None, :], index_map.block(x, "q_a")])
    q_b = np.vstack([np.full((1, K), np.nan), index_map.block(x, "q_b"), dem.entry_b[None, :]])
    off_a = hw.exit_rate_a[:, None] * q_a[:-1]
    off_b = hw.exit_rate_b[:, None] * q_b[2:]
    kc = ctrl.control_index(np.arange(K))
    ea_k, eb_k = eps_a[:, kc], eps_b[:, kc]
    with np.errstate(divide="ignore", invalid="ignore"):
        rel_a = rho_a[:, :-1] / (ea_k * fd.rho_cr)
        rel_b = rho_b[:, :-1] / (eb_k * fd.rho_cr)
    qp_tts = float(ctrl.T * (hw.lengths @ (rho_a[:, 1:] + rho_b[:, 1:])).sum())
    traj = TrafficTrajectory(
        rho_a=rho_a, rho_b=rho_b, q_a=q_a, q_b=q_b, offramp_a=off_a, offramp_b=off_b,
        rel_a=rel_a, rel_b=rel_b, eps_a=ea_k, eps_b=eb_k, tts=qp_tts, T=ctrl.T,
        lengths=hw.lengths, origin_queue_a=np.zeros(K + 1), origin_queue_b=np.zeros(K + 1),
    )
    return QpExtract(plan, traj, qp_tts, eps_a, eps_b)


# --- interchange format ---------------------------------------------------
#
# Plain text, one item per line:
#   # ibcontrol-qp 1
#   scalar <name> <value>
#   matrix <name> <rows> <cols> <nnz>    followed by nnz lines "<row> <col> <value>" (0-based)
#   vector <name> <length>               followed by <length> lines "<value>"
# Infinite entries are written as "inf" / "-inf".  Values use repr() so files
# re-read bit-exactly.

_HEADER = "# ibcontrol-qp 1"


def _write_matrix(out, name, M):
    M = sp.coo_matrix(M)
    order = np.lexsort((M.col, M.row))
    out.append(f"matrix {name} {M.shape[0]} {M.shape[1]} {M.nnz}")
    out.extend(f"{r} {c} {v!r}" for r, c, v in zip(M.row[order], M.col[order], M.data[order].tolist()))


def _write_vector(out, name, v):
    v = np.asarray(v, dtype=float)
    out.append(f"vector {name} {v.size}")
    out.extend(repr(x) for x in v.tolist())


def write_vectors(path: str | Path, scalars: dict | None = None, vectors: dict | None = None,
                  matrices: dict | None = None) -> Path:
    out = [_HEADER]
    for k, v in (scalars or {}).items():
        out.append(f"scalar {k} {v!r}")
    for k, M in (matrices or {}).items():
        _write_matrix(out, k, M)
    for k, v in (vectors or {}).items():
        _write_vector(out, k, v)
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path


def read_vectors(path: str | Path) -> dict:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != _HEADER:
        raise ValueError(f"{path}: not an ibcontrol-qp file")
    items: dict = {}
    pos = 1
    while pos < len(lines):
        head = lines[pos].split()
        pos += 1
        if not head:
            continue
        kind, name = head[0], head[1]
        if kind == "scalar":
            raw = head[2]
            try:
                items[name] = int(raw)
            except ValueError:
                try:
                    items[name] = float(raw)
                except ValueError:
                    items[name] = raw.strip("'\"")
        elif kind == "vector":
            m = int(head[2])
            items[name] = np.array([float(s) for s in lines[pos : pos + m]])
            pos += m
        elif kind == "matrix":
            r, c, nnz = int(head[2]), int(head[3]), int(head[4])
            trip = [s.split() for s in lines[pos : pos + nnz]]
            pos += nnz
            rows = np.array([int(t[0]) for t in trip], dtype=int)
            cols = np.array([int(t[1]) for t in trip], dtype=int)
            vals = np.array([float(t[2]) for t in trip])
            items[name] = sp.csr_matrix((vals, (rows, cols)), shape=(r, c))
        else:
            raise ValueError(f"{path}: unknown record {kind!r}")
    return items


def write_problem(problem: QpProblem, path: str | Path) -> Path:
    im = problem.index_map
    scalars = {"objective_constant": problem.objective_constant}
    if im is not None:
        scalars.update(n_sections=im.n, K=im.K, K_c=im.K_c)
    return write_vectors(
        path,
        scalars=scalars,
        matrices={"H": problem.H, "A_e": problem.A_e, "A_i": problem.A_i},
        vectors={"c": problem.c, "b_e": problem.b_e, "b_i": problem.b_i, "lb": problem.lb, "ub": problem.ub,
                 **({"c_tiebreak": problem.c_tiebreak} if problem.c_tiebreak is not None else {})},
    )


def read_problem(path: str | Path) -> QpProblem:
    d = read_vectors(path)
    im = VarIndexMap(d["n_sections"], d["K"], d["K_c"]) if "n_sections" in d else None
    return QpProblem(
        H=sp.csc_matrix(d["H"]), c=d["c"], A_i=d["A_i"], b_i=d["b_i"], A_e=d["A_e"], b_e=d["b_e"],
        lb=d["lb"], ub=d["ub"], index_map=im, objective_constant=float(d["objective_constant"]),
        c_tiebreak=d.get("c_tiebreak"),
    )
