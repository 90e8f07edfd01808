"""Write per-section time series and density fields for one scenario variant.

    python scripts/diagnostics.py congested --capacity-drop on --out runs/diag
"""

import argparse
import sys
from pathlib import Path

from ibcontrol.analysis import (
    density_field,
    eps_surface,
    run_variant,
    section_series,
    write_density_csv,
    write_eps_csv,
    write_series_csv,
)
from ibcontrol.cli import resolve_scenario
from ibcontrol.projection import write_margins_csv


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scenario", help="builtin name or YAML path")
    ap.add_argument("--capacity-drop", choices=("on", "off"), default="on")
    ap.add_argument("--out", type=Path, default=Path("runs/diag"))
    args = ap.parse_args(argv)

    run = run_variant(resolve_scenario(args.scenario), args.capacity_drop)
    out = args.out / f"{run.scenario.label.split('[')[0]}-cd-{args.capacity_drop}"
    out.mkdir(parents=True, exist_ok=True)
    q_cap = run.scenario.fd.q_cap
    for kind, traj in (("no_control", run.no_control), ("controlled", run.controlled)):
        write_density_csv(density_field(traj), out / f"density_{kind}.csv")
        for s in range(1, run.scenario.n + 1):
            write_series_csv(section_series(traj, s, q_cap), out / f"series_{kind}_section{s}.csv")
    write_eps_csv(eps_surface(run.plan), out / "eps_surface.csv", run.scenario.control.steps_per_control)
    write_margins_csv(run.margins, out)

    surf = eps_surface(run.plan)
    print(f"{run.scenario.label}: status {run.solution.status}, "
          f"TTS {run.no_control.tts:.2f} -> {run.controlled.tts:.2f} veh*h")
    print(f"holding-back: {run.holding_back.summary()}")
    print(f"largest eps step: {surf.max_temporal_step:.4f} in time, {surf.max_spatial_step:.4f} in space")
    print(f"written to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
