"""Plot density fields, the sharing-factor surface and section flows (needs matplotlib).

    python scripts/plot_runs.py congested --capacity-drop on --out runs/plots
"""

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ibcontrol.analysis import run_variant, section_series  # noqa: E402
from ibcontrol.cli import resolve_scenario  # noqa: E402


def density_panel(ax, rel, title):
    im = ax.imshow(rel, aspect="auto", origin="lower", cmap="RdYlGn_r", vmin=0.0, vmax=2.0,
                   extent=(0, rel.shape[1], 0.5, rel.shape[0] + 0.5))
    ax.set_title(title)
    ax.set_xlabel("k")
    ax.set_ylabel("section")
    return im


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scenario")
    ap.add_argument("--capacity-drop", choices=("on", "off"), default="on")
    ap.add_argument("--section", type=int, default=None, help="section for the flow plot (default: last)")
    ap.add_argument("--out", type=Path, default=Path("runs/plots"))
    args = ap.parse_args(argv)

    run = run_variant(resolve_scenario(args.scenario), args.capacity_drop)
    stem = f"{run.scenario.label.split('[')[0]}-cd-{args.capacity_drop}"
    args.out.mkdir(parents=True, exist_ok=True)

    fig, axes = plt.subplots(2, 2, figsize=(11, 6), sharex=True, constrained_layout=True)
    for col, (kind, traj) in enumerate((("no control", run.no_control), ("controlled", run.controlled))):
        density_panel(axes[0, col], traj.rel_a, f"direction a, {kind}")
        im = density_panel(axes[1, col], traj.rel_b, f"direction b, {kind}")
    fig.colorbar(im, ax=axes, label="relative density")
    fig.savefig(args.out / f"{stem}-density.png", dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(8, 4), constrained_layout=True)
    m = run.scenario.control.steps_per_control
    for i, row in enumerate(run.plan.eps):
        ax.step(np.arange(row.size) * m, row, where="post", label=f"section {i + 1}")
    ax.set_xlabel("k")
    ax.set_ylabel("eps")
    ax.legend(ncol=3, fontsize="small")
    fig.savefig(args.out / f"{stem}-eps.png", dpi=120)
    plt.close(fig)

    section = args.section or run.scenario.n
    series = section_series(run.controlled, section, run.scenario.fd.q_cap)
    fig, ax = plt.subplots(figsize=(8, 4), constrained_layout=True)
    ax.plot(series["k"], series["q_a"], label="q a")
    ax.plot(series["k"], series["q_b"], label="q b")
    ax.plot(series["k"], series["q_total"], label="total")
    ax.axhline(run.scenario.fd.q_cap, color="k", lw=0.8, ls="--", label="carriageway capacity")
    ax.set_xlabel("k")
    ax.set_ylabel("veh/h")
    ax.set_title(f"section {section}, controlled")
    ax.legend(fontsize="small")
    fig.savefig(args.out / f"{stem}-flow-s{section}.png", dpi=120)
    plt.close(fig)
    print(f"figures written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
