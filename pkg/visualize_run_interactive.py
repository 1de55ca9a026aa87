#!/usr/bin/env python3
"""Interactive HTML view of the field snapshots of a cqsim run."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from framework.fieldio import read_field_csv
from framework.qmat import batch_min_eigenvalue


def main(argv: list[str]) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--run", required=True, help="Output directory written by cqsim.py.")
    parser.add_argument(
        "--out",
        default=None,
        help="Output HTML path (default: <run>/plots/fields_interactive.html).",
    )
    args = parser.parse_args(argv)

    run_dir = Path(args.run)
    snapshots = sorted(run_dir.glob("fields/*.csv")) + sorted(run_dir.glob("recon/*.csv"))
    if not snapshots:
        print(f"no field snapshots found in {run_dir}")
        return 1

    try:
        import plotly.graph_objects as go
    except ModuleNotFoundError:
        print("plotly is required. Install with:")
        print("python -m pip install -r requirements.txt")
        return 2

    fig = go.Figure()
    for path in snapshots:
        fld = read_field_csv(path)
        name = f"{path.parent.name}/{path.stem} t={fld.t:g}"
        p = fld.grid.points
        components = {
            "rho00": fld.values[:, 0, 0].real,
            "rho11": fld.values[:, 1, 1].real,
            "|rho01|": abs(fld.values[:, 0, 1]),
        }
        for label, values in components.items():
            fig.add_trace(go.Scatter(x=p, y=values, mode="lines", name=f"{name} {label}"))
        fig.add_trace(
            go.Scatter(
                x=p,
                y=batch_min_eigenvalue(fld.values),
                mode="lines",
                name=f"{name} min eig",
                line=dict(dash="dot"),
            )
        )

    fig.update_layout(
        title=f"Partial Wigner field components ({run_dir.name})",
        xaxis_title="p",
        yaxis_title="value",
        hovermode="x unified",
        template="plotly_white",
        legend=dict(orientation="h", yanchor="bottom", y=1.02, xanchor="left", x=0),
    )

    out_path = Path(args.out) if args.out else run_dir / "plots" / "fields_interactive.html"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.write_html(out_path, include_plotlyjs="cdn")

    print(f"snapshots_plotted={len(snapshots)}")
    print(f"out_html={out_path}")
    print("tip: click legend names to toggle components.")
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
