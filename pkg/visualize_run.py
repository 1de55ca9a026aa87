#!/usr/bin/env python3
"""Plot trajectories and field snapshots from a cqsim output directory."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from framework.fieldio import read_field_csv, read_rows
from framework.models import field_min_eigenvalue, momentum_marginal


def load_trajectories(run_dir: Path) -> list[np.ndarray]:
    out = []
    for path in sorted(run_dir.glob("trajectories/*.csv")):
        _, rows = read_rows(path)
        if rows:
            out.append(np.array(rows))
    return out


def main(argv: list[str]) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--run", required=True, help="Output directory written by cqsim.py.")
    parser.add_argument(
        "--outdir",
        default=None,
        help="Directory for PNG outputs (default: <run>/plots).",
    )
    args = parser.parse_args(argv)

    run_dir = Path(args.run)
    if not run_dir.is_dir():
        print(f"run directory not found: {run_dir}")
        return 1

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ModuleNotFoundError:
        print("matplotlib is required. Install with:")
        print("python -m pip install -r requirements.txt")
        return 2

    outdir = Path(args.outdir) if args.outdir else run_dir / "plots"
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    trajectories = load_trajectories(run_dir)
    if trajectories:
        fig, (ax_z, ax_p) = plt.subplots(2, 1, figsize=(12, 8), sharex=True)
        for traj in trajectories:
            # colour by the final collapse direction
            colour = "tab:blue" if traj[-1, 4] > 0 else "tab:red"
            ax_z.plot(traj[:, 0], traj[:, 4], color=colour, linewidth=0.8, alpha=0.7)
            ax_p.plot(traj[:, 0], traj[:, 1], color=colour, linewidth=0.8, alpha=0.7)
        ax_z.set_ylabel("<sigma_z>")
        ax_z.set_ylim(-1.05, 1.05)
        ax_p.set_ylabel("p")
        ax_p.set_xlabel("t")
        for ax in (ax_z, ax_p):
            ax.grid(alpha=0.25)
        ax_z.set_title("Trajectories: qubit collapse and momentum drift")
        path = outdir / "trajectories.png"
        fig.tight_layout()
        fig.savefig(path, dpi=140)
        plt.close(fig)
        written.append(path)

    snapshots = sorted(run_dir.glob("fields/*.csv"))
    if snapshots:
        fig, (ax_w, ax_m) = plt.subplots(1, 2, figsize=(14, 5))
        t_vals, mins = [], []
        for path in snapshots:
            fld = read_field_csv(path)
            ax_w.plot(fld.grid.points, momentum_marginal(fld), label=f"t={fld.t:g}", linewidth=1.0)
            t_vals.append(fld.t)
            mins.append(field_min_eigenvalue(fld)[0])
        ax_w.set_xlabel("p")
        ax_w.set_ylabel("tr rho^W(p)")
        ax_w.legend(loc="best")
        ax_w.grid(alpha=0.25)
        ax_m.plot(t_vals, mins, marker="o")
        ax_m.axhline(0.0, color="black", linewidth=0.8)
        ax_m.set_xlabel("t")
        ax_m.set_ylabel("min eigenvalue of field")
        ax_m.grid(alpha=0.25)
        path = outdir / "fields.png"
        fig.tight_layout()
        fig.savefig(path, dpi=140)
        plt.close(fig)
        written.append(path)

    if not written:
        print("no trajectories or field snapshots found")
        return 1
    for path in written:
        print(f"plot={path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
