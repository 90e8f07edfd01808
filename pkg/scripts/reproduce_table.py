"""Solve both builtin scenarios with and without capacity drop and tabulate TTS.

    python scripts/reproduce_table.py --out runs/table
"""

import argparse
import sys
from pathlib import Path

from ibcontrol import builtin_scenario
from ibcontrol.analysis import AnalysisReport, compare, write_report_csv


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("runs/table"))
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    rows = []
    for name in ("uncongested", "congested"):
        rows.extend(compare(builtin_scenario(name)).rows)
    report = AnalysisReport(tuple(rows))
    path = write_report_csv(report, args.out / "report.csv")

    head = f"{'scenario':<12} {'drop':<4} {'no control':>10} {'QP':>8} {'sim':>8} {'impr %':>7}  holding-back"
    print(head)
    print("-" * len(head))
    for r in report.rows:
        print(f"{r.scenario:<12} {r.variant:<4} {r.no_control_tts:>10.1f} {r.qp_tts:>8.1f} {r.sim_tts:>8.1f} "
              f"{r.improvement_sim_pct:>7.1f}  {r.holding_back}")
    print(f"\nwritten {path}")
    problems = report.violations()
    for p in problems:
        print("invariant violated:", p, file=sys.stderr)
    return 1 if problems else 0


if __name__ == "__main__":
    sys.exit(main())
