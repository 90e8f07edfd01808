"""QP solver front-end.

Two algorithm families are wired in behind one result type:

* ``"ipm"``: primal-dual interior point (Clarabel).  The default; it reaches
  tight tolerances on the full-size control problem in about a second.
* ``"admm"``: operator splitting (OSQP) on a diagonally equilibrated copy
  of the problem, followed by a primal-dual active-set polish at fixed
  iteration checkpoints.  The min-rule couples consecutive sharing factors
  into a degenerate, nearly piecewise linear problem on which plain ADMM
  stalls around 1e-3 relative accuracy; the polish recovers the exact
  active set from such an iterate on small instances.  On the full-size
  problem the polish rarely locks on, so this method is the cross-check and
  ``"ipm"`` the default.

Both are run with deterministic settings (single thread, iteration-scheduled
penalty updates), so identical inputs produce identical outputs.

Residuals are always recomputed here in the original units with the
box-constrained form ``l <= A x <= u``, ``A = [A_e; A_i; I]``::

    primal = || A x - proj_[l,u](A x) ||_inf
    dual   = || H x + c + A' y ||_inf

and a solution counts as optimal only when ``primal <= eps_abs + eps_rel *
max(|A x|, |proj(A x)|)`` and ``dual <= eps_abs + eps_rel * max(|H x|, |A'y|,
|c|)`` (all infinity norms).  ``y`` is positive on active upper bounds and
negative on active lower bounds.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..qp_build import QpProblem

__all__ = [
    "Status",
    "SolverSettings",
    "QpSolution",
    "stack_constraints",
    "kkt_residuals",
    "solve",
    "solve_dense_reference",
    "DENSE_REFERENCE_MAX_VARS",
]

DENSE_REFERENCE_MAX_VARS = 2000
_DEFAULT_MAX_ITER = {"ipm": 200, "admm": 200_000}
_DEFAULT_TOL = {"ipm": 1e-8, "admm": 1e-6}


class Status:
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    PRIMAL_INFEASIBLE = "primal_infeasible"
    DUAL_INFEASIBLE = "dual_infeasible"


@dataclass(frozen=True)
class SolverSettings:
    """Solver options.

    ``penalty``, ``adaptive_penalty`` and ``polish`` only affect the ``admm``
    method.  ``None`` for ``eps_abs``, ``eps_rel`` or ``max_iter`` picks a
    method-specific default (see :attr:`abs_tol`, :attr:`rel_tol`, :attr:`iteration_cap`).
    """

    method: str = "ipm"
    eps_abs: float | None = None
    eps_rel: float | None = None
    max_iter: int | None = None
    penalty: float = 0.1
    adaptive_penalty: bool = False
    adaptive_interval: int = 25
    polish: bool = True
    verbose: bool = False

    def __post_init__(self):
        if self.method not in _DEFAULT_MAX_ITER:
            raise ValueError(f"unknown method {self.method!r}; expected one of {sorted(_DEFAULT_MAX_ITER)}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("eps_abs and eps_rel must be > 0")
        if self.max_iter is not None and self.max_iter <= 0:
            raise ValueError("max_iter must be > 0")
        if self.penalty <= 0:
            raise ValueError("penalty must be > 0")
        if self.adaptive_interval <= 0:
            raise ValueError("adaptive_interval must be > 0")

    @property
    def abs_tol(self) -> float:
        return self.eps_abs if self.eps_abs is not None else _DEFAULT_TOL[self.method]

    @property
    def rel_tol(self) -> float:
        return self.eps_rel if self.eps_rel is not None else _DEFAULT_TOL[self.method]

    @property
    def iteration_cap(self) -> int:
        return self.max_iter if self.max_iter is not None else _DEFAULT_MAX_ITER[self.method]


@dataclass
class QpSolution:
    """Solver result in original units; ``y`` follows ``[A_e; A_i; I]`` row order."""

    x: np.ndarray
    y: np.ndarray
    objective: float
    status: str
    primal_res: float
    dual_res: float
    iterations: int
    solve_time: float
    method: str = "ipm"
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL


def stack_constraints(problem: QpProblem):
    """``(A, l, u)`` with ``A = [A_e; A_i; I]``."""
    n = problem.n_vars
    A = sp.vstack([problem.A_e, problem.A_i, sp.identity(n, format="csr")], format="csc")
    l = np.concatenate([problem.b_e, np.full(problem.b_i.size, -np.inf), problem.lb])
    u = np.concatenate([problem.b_e, problem.b_i, problem.ub])
    return A, l, u


def kkt_residuals(problem: QpProblem, x: np.ndarray, y: np.ndarray):
    """``(primal, dual, primal_scale, dual_scale)`` as described in the module docstring."""
    A, l, u = stack_constraints(problem)
    Ax = A @ x
    proj = np.clip(Ax, l, u)
    Hx = problem.H @ x
    Aty = A.T @ y
    inf = lambda v: float(np.abs(v).max(initial=0.0))  # noqa: E731
    primal = inf(Ax - proj)
    dual = inf(Hx + problem.c + Aty)
    return primal, dual, max(inf(Ax), inf(proj)), max(inf(Hx), inf(Aty), inf(problem.c))


def _finish(problem, x, y, status, iterations, t0, settings, info):
    primal, dual, p_scale, d_scale = kkt_residuals(problem, x, y)
    if status == Status.OPTIMAL:
        ok = (primal <= settings.abs_tol + settings.rel_tol * p_scale
              and dual <= settings.abs_tol + settings.rel_tol * d_scale)
        if not ok:
            info["downgraded"] = "residuals above tolerance"
            status = Status.MAX_ITER
    if status == Status.PRIMAL_INFEASIBLE:
        objective = np.inf
    elif status == Status.DUAL_INFEASIBLE:
        objective = -np.inf
    else:
        objective = problem.objective(x)
    return QpSolution(
        x=x, y=y, objective=objective, status=status, primal_res=primal, dual_res=dual,
        iterations=int(iterations), solve_time=time.perf_counter() - t0,
        method=info.pop("method", settings.method), info=info,
    )


def _solve_ipm(problem: QpProblem, settings: SolverSettings) -> QpSolution:
    import clarabel

    t0 = time.perf_counter()
    n = problem.n_vars
    fin_u = np.flatnonzero(np.isfinite(problem.ub))
    fin_l = np.flatnonzero(np.isfinite(problem.lb))
    eye = sp.identity(n, format="csr")
    A = sp.vstack([problem.A_e, problem.A_i, eye[fin_u], -eye[fin_l]], format="csc")
    b = np.concatenate([problem.b_e, problem.b_i, problem.ub[fin_u], -problem.lb[fin_l]])
    n_eq = problem.b_e.size
    cones = [clarabel.ZeroConeT(n_eq), clarabel.NonnegativeConeT(b.size - n_eq)]

    opts = clarabel.DefaultSettings()
    opts.verbose = settings.verbose
    opts.max_iter = settings.iteration_cap
    opts.max_threads = 1
    # internal targets two orders tighter than the acceptance test in _finish
    opts.tol_feas = 1e-2 * min(settings.abs_tol, settings.rel_tol)
    opts.tol_gap_abs = 1e-2 * settings.abs_tol
    opts.tol_gap_rel = 1e-2 * settings.rel_tol
    solver = clarabel.DefaultSolver(sp.triu(problem.H, format="csc"), problem.c, A, b, cones, opts)
    res = solver.solve()

    x = np.asarray(res.x, dtype=float)
    z = np.asarray(res.z, dtype=float)
    m_i = problem.b_i.size
    y_bounds = np.zeros(n)
    off = n_eq + m_i
    y_bounds[fin_u] += z[off : off + fin_u.size]
    y_bounds[fin_l] -= z[off + fin_u.size :]
    y = np.concatenate([z[:n_eq], z[n_eq:off], y_bounds])

    S = clarabel.SolverStatus
    name = str(res.status)
    status = {
        str(S.Solved): Status.OPTIMAL,
        str(S.AlmostSolved): Status.OPTIMAL,
        str(S.PrimalInfeasible): Status.PRIMAL_INFEASIBLE,
        str(S.AlmostPrimalInfeasible): Status.PRIMAL_INFEASIBLE,
        str(S.DualInfeasible): Status.DUAL_INFEASIBLE,
        str(S.AlmostDualInfeasible): Status.DUAL_INFEASIBLE,
    }.get(name, Status.MAX_ITER)
    return _finish(problem, x, y, status, res.iterations, t0, settings, {"backend_status": name})


_ADMM_CHECKPOINTS = (5_000, 10_000, 20_000, 50_000, 100_000, 200_000, 500_000, 1_000_000)


@dataclass(frozen=True)
class _Scaled:
    """Equilibrated copy of a problem: ``x = d * x_s``, ``y = r * y_s / cost``."""

    H: sp.csc_matrix
    c: np.ndarray
    A: sp.csc_matrix
    l: np.ndarray
    u: np.ndarray
    d: np.ndarray
    r: np.ndarray
    cost: float

    @classmethod
    def of(cls, problem: QpProblem) -> "_Scaled":
        A, l, u = stack_constraints(problem)
        # columns by the magnitude of the variable's box, rows by their largest entry
        span = np.fmax(np.abs(np.where(np.isfinite(problem.lb), problem.lb, np.nan)),
                       np.abs(np.where(np.isfinite(problem.ub), problem.ub, np.nan)))
        d = np.where(np.isfinite(span) & (span > 0), span, 1.0)
        A = (A @ sp.diags(d)).tocsr()
        row_max = abs(A).max(axis=1).toarray().ravel()
        r = 1.0 / np.where(row_max > 0, row_max, 1.0)
        A = (sp.diags(r) @ A).tocsc()
        H = (sp.diags(d) @ problem.H @ sp.diags(d)).tocsc()
        c = d * problem.c
        cost = 1.0 / max(float(np.abs(c).max(initial=0.0)), float(abs(H).max()) if H.nnz else 0.0, 1e-12)
        return cls(cost * H, cost * c, A, l * r, u * r, d, r, cost)

    def unscale(self, xs, ys):
        return self.d * xs, self.r * ys / self.cost

    def scale(self, x, y):
        xs = None if x is None else x / self.d
        ys = None if y is None else y * self.cost / self.r
        return xs, ys


def _active_set_polish(sc: _Scaled, x: np.ndarray, y: np.ndarray, rounds: int = 30,
                       reg: float = 1e-7, tol: float = 1e-9):
    """Primal-dual active-set refinement of an approximate solution.

    Each round guesses the active rows from ``y + (Ax - bound)``, solves the
    equality-constrained KKT system on those rows (regularised, then refined
    against the exact system) and stops once the guess repeats with a feasible,
    sign-consistent result.  Returns ``(x, y, rounds_used)`` or ``None``.
    """
    import scipy.sparse.linalg as spla

    n = x.size
    eq = sc.l == sc.u
    previous = None
    for it in range(1, rounds + 1):
        Ax = sc.A @ x
        up = eq | (y + (Ax - sc.u) > 0)
        lo = ~up & (y + (Ax - sc.l) < 0)
        act = np.flatnonzero(up | lo)
        Aa = sc.A[act]
        K0 = sp.bmat([[sc.H, Aa.T], [Aa, None]], format="csc")
        K = (K0 + sp.block_diag([reg * sp.identity(n), -reg * sp.identity(act.size)])).tocsc()
        try:
            lu = spla.splu(K)
        except RuntimeError:
            return None
        rhs = np.concatenate([-sc.c, np.where(up, sc.u, sc.l)[act]])
        z = np.concatenate([x, y[act]])
        for _ in range(25):
            res = rhs - K0 @ z
            if np.abs(res).max() < 1e-13:
                break
            z = z + lu.solve(res)
        if not np.all(np.isfinite(z)):
            return None
        x = z[:n]
        y = np.zeros_like(y)
        y[act] = z[n:]
        key = (up.tobytes(), lo.tobytes())
        if key == previous:
            Ax = sc.A @ x
            feasible = np.all(Ax <= sc.u + tol) and np.all(Ax >= sc.l - tol)
            signs = np.all(y[up & ~eq] >= -tol) and np.all(y[lo] <= tol)
            return (x, y, it) if feasible and signs else None
        previous = key
    return None


def _solve_admm(problem: QpProblem, settings: SolverSettings,
                x0: np.ndarray | None = None, y0: np.ndarray | None = None) -> QpSolution:
    """OSQP on the equilibrated problem, polished at fixed iteration checkpoints."""
    import osqp

    t0 = time.perf_counter()
    sc = _Scaled.of(problem)
    cap = settings.iteration_cap
    solver = osqp.OSQP()
    solver.setup(
        P=sp.triu(sc.H, format="csc"), q=sc.c, A=sc.A, l=sc.l, u=sc.u,
        eps_abs=settings.abs_tol, eps_rel=settings.rel_tol, max_iter=cap,
        rho=settings.penalty, adaptive_rho=settings.adaptive_penalty,
        adaptive_rho_interval=settings.adaptive_interval,  # fixed schedule keeps runs deterministic
        polishing=False, verbose=settings.verbose,
    )
    xs0, ys0 = sc.scale(x0, y0)
    if xs0 is not None or ys0 is not None:
        solver.warm_start(x=xs0, y=ys0)

    stops = [c for c in _ADMM_CHECKPOINTS if c < cap] + [cap] if settings.polish else [cap]
    done, status, info = 0, Status.MAX_ITER, {}
    for stop in stops:
        solver.update_settings(max_iter=stop - done)
        res = solver.solve(raise_error=False)  # statuses are mapped below
        done += res.info.iter
        xs, ys = np.asarray(res.x, dtype=float), np.asarray(res.y, dtype=float)
        info = {"backend_status": res.info.status, "polished": False}
        val = res.info.status_val
        if val in (3, 4):
            status = Status.PRIMAL_INFEASIBLE
            break
        if val in (5, 6):
            status = Status.DUAL_INFEASIBLE
            break
        if not np.all(np.isfinite(xs)):
            break
        if settings.polish:
            polished = _active_set_polish(sc, xs, ys)
            if polished is not None:
                px, py = sc.unscale(polished[0], polished[1])
                primal, dual, p_scale, d_scale = kkt_residuals(problem, px, py)
                if (primal <= settings.abs_tol + settings.rel_tol * p_scale
                        and dual <= settings.abs_tol + settings.rel_tol * d_scale):
                    info.update(polished=True, polish_rounds=polished[2])
                    return _finish(problem, px, py, Status.OPTIMAL, done, t0, settings, info)
        if val in (1, 2):
            status = Status.OPTIMAL
            break
        solver.warm_start(x=xs, y=ys)
    x, y = sc.unscale(np.asarray(res.x, dtype=float), np.asarray(res.y, dtype=float))
    if status != Status.OPTIMAL and not np.all(np.isfinite(x)):
        x = np.zeros(problem.n_vars)
        y = np.zeros(sc.A.shape[0])
    return _finish(problem, x, y, status, done, t0, settings, info)


def solve(problem: QpProblem, settings: SolverSettings | None = None) -> QpSolution:
    """Solve ``problem``.

    Exhausting the iteration cap returns the last iterate with status
    ``max_iter``; certified infeasibility returns the matching status with an
    infinite objective.
    """
    settings = settings or SolverSettings()
    if settings.method == "ipm":
        return _solve_ipm(problem, settings)
    return _solve_admm(problem, settings)


def solve_dense_reference(problem: QpProblem, max_vars: int = DENSE_REFERENCE_MAX_VARS) -> QpSolution:
    """Dense interior-point cross-check (CVXOPT) for small problems.

    Works on dense matrices with its own KKT factorisation, so it shares no
    code path with :func:`solve`.  When the QP solve does not return an
    optimum, a feasibility LP decides whether the problem is primal
    infeasible.  Raises ``ValueError`` above ``max_vars`` variables.
    """
    if problem.n_vars > max_vars:
        raise ValueError(f"reference solver limited to {max_vars} variables, problem has {problem.n_vars}")
    from cvxopt import matrix, solvers

    t0 = time.perf_counter()
    n = problem.n_vars
    eye = np.eye(n)
    fin_u = np.isfinite(problem.ub)
    fin_l = np.isfinite(problem.lb)
    G = np.vstack([problem.A_i.toarray(), eye[fin_u], -eye[fin_l]])
    h = np.concatenate([problem.b_i, problem.ub[fin_u], -problem.lb[fin_l]])
    A = problem.A_e.toarray()
    b = problem.b_e
    opts = {"show_progress": False, "abstol": 1e-10, "reltol": 1e-10, "feastol": 1e-10, "maxiters": 200}
    # cvxopt may stop with "unknown" just short of these targets; such a point
    # is accepted when its duality gap is below accept * (1 + |objective|) and
    # both infeasibility measures are below accept.
    accept = 1e-7
    eq = {"A": matrix(A), "b": matrix(b)} if A.shape[0] else {}
    try:
        res = solvers.qp(matrix(problem.H.toarray()), matrix(problem.c), matrix(G), matrix(h), options=opts, **eq)
    except (ValueError, ArithmeticError) as exc:  # cvxopt raises on some infeasible inputs
        res = {"status": f"failed: {exc}", "x": None, "z": None, "y": None, "iterations": 0}
    settings = SolverSettings(method="ipm", eps_abs=1e-7, eps_rel=1e-7)

    def pack(res):
        x = np.asarray(res["x"]).ravel() if res["x"] is not None else np.zeros(n)
        z = np.asarray(res["z"]).ravel() if res["z"] is not None else np.zeros(h.size)
        ye = np.asarray(res["y"]).ravel() if res.get("y") is not None and A.shape[0] else np.zeros(A.shape[0])
        m_i = problem.b_i.size
        yb = np.zeros(n)
        yb[fin_u] += z[m_i : m_i + fin_u.sum()]
        yb[fin_l] -= z[m_i + fin_u.sum() :]
        return x, np.concatenate([ye, z[:m_i], yb])

    near = (res["status"] == "unknown" and res["x"] is not None
            and all(res.get(k) is not None for k in ("gap", "primal objective", "primal infeasibility",
                                                      "dual infeasibility"))
            and abs(res["gap"]) <= accept * (1.0 + abs(res["primal objective"]))
            and res["primal infeasibility"] <= accept and res["dual infeasibility"] <= accept)
    if res["status"] == "optimal" or near:
        x, y = pack(res)
        return _finish(problem, x, y, Status.OPTIMAL, res["iterations"], t0, settings, {"backend_status": res["status"], "method": "dense"})

    # feasibility LP: min 0 over the same constraint set
    lp = solvers.lp(matrix(np.zeros(n)), matrix(G), matrix(h), options=opts, **eq)
    if lp["status"] == "primal infeasible":
        status = Status.PRIMAL_INFEASIBLE
    elif lp["status"] == "optimal":
        # feasible set is nonempty, so the QP failure means unbounded or stalled
        status = Status.DUAL_INFEASIBLE if res["status"] == "dual infeasible" else Status.MAX_ITER
    else:
        status = Status.MAX_ITER
    x, y = pack(res) if res["x"] is not None else (np.zeros(n), np.zeros(problem.b_e.size + problem.b_i.size + n))
    if status in (Status.PRIMAL_INFEASIBLE, Status.DUAL_INFEASIBLE) and not np.all(np.isfinite(x)):
        x = np.zeros(n)
    return _finish(problem, x, y, status, res["iterations"], t0, settings,
                   {"backend_status": res["status"], "feasibility_lp": lp["status"], "method": "dense"})
