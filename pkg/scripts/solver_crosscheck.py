"""Compare the QP solvers and the grid oracle on small random instances.

    python scripts/solver_crosscheck.py --seeds 30
"""

import argparse
import sys

from ibcontrol.ctm import simulate
from ibcontrol.qp_build import build_problem, extract_solution
from ibcontrol.qp_solve import SolverSettings, grid_oracle, solve, solve_dense_reference
from ibcontrol.scenario import with_capacity_drop
from ibcontrol.synthetic import random_scenario


def rel(a, b):
    return abs(a - b) / max(abs(b), 1.0)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--grid-step", type=float, default=0.01)
    args = ap.parse_args(argv)

    print(f"{'seed':>4} {'vars':>5} {'dense':>10} {'ipm gap':>9} {'admm gap':>9} {'admm it':>8}")
    worst = 0.0
    for seed in range(args.seeds):
        sc = random_scenario(seed, n=1 + seed % 2, K_c=1 + seed % 3, steps_per_control=3)
        p = build_problem(sc)
        ref = solve_dense_reference(p)
        if not ref.optimal:
            print(f"{seed:>4} {p.n_vars:>5} {ref.status:>10}")
            continue
        ipm, admm = solve(p), solve(p, SolverSettings(method="admm"))
        g_ipm, g_admm = rel(ipm.objective, ref.objective), rel(admm.objective, ref.objective)
        worst = max(worst, g_ipm, g_admm)
        print(f"{seed:>4} {p.n_vars:>5} {ref.objective:>10.4f} {g_ipm:>9.1e} {g_admm:>9.1e} {admm.iterations:>8}")
    print(f"worst relative gap {worst:.1e}\n")

    print(f"{'seed':>4} {'QP':>10} {'grid':>10} {'gap':>9} {'eps dist':>8}")
    for seed in range(args.seeds):
        sc = with_capacity_drop(random_scenario(seed, n=1, K_c=2, steps_per_control=6, congested_start=False,
                                                max_demand=0.6), False)
        p = build_problem(sc)
        sol = solve(p)
        ex = extract_solution(sol.x, p.index_map, sc)
        traj = simulate(sc, ex.plan)
        if (traj.rel_a > 1 + 1e-6).any() or (traj.rel_b > 1 + 1e-6).any():
            continue
        g = grid_oracle(sc, args.grid_step)
        J = p.objective(sol.x, tiebreak=False)
        print(f"{seed:>4} {J:>10.4f} {g.best_objective:>10.4f} {rel(J, g.best_objective):>9.1e} "
              f"{g.distance_to_minimizers(ex.plan.eps, rel_tol=1e-3):>8.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
