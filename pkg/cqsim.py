#!/usr/bin/env python3
"""Simulate a qubit coupled to a heavy classical-limit particle.

Commands: closed and master propagate the partial Wigner field exactly, meanfield runs
the factorized trajectory equations, ensemble runs the stochastic unraveling, validity
reports the trade-off and the mean-field window, compare joins all of them.
"""

from __future__ import annotations

import argparse
import math
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np

from framework.config import RunConfig, available_presets, describe_defaults, load_run_config
from framework.console import log, set_quiet, warn
from framework.errors import CQSimError, ConfigError, InvariantError, PreconditionError
from framework.fieldio import (
    MEANFIELD_HEADER,
    NEGATIVITY_HEADER,
    POSITIVITY_HEADER,
    TRAJECTORY_HEADER,
    meanfield_rows,
    write_field_csv,
    write_json,
    write_rows,
)
from framework.meanfield import meanfield_momentum_variance, run_meanfield
from framework.models import (
    MomentumGrid,
    WignerField,
    field_l1_distance,
    field_min_eigenvalue,
    momentum_moments,
    pde_initial,
    product_field,
    qubit_marginal,
)
from framework.qmat import (
    TOL_FIELD_HERMITIAN,
    TOL_NORMALIZATION,
    bloch_vector,
    purity,
    trace_distance,
)
from framework.solvers import (
    ClosedPropagator,
    OpenPropagator,
    negativity_onset,
    positivity_scan,
    propagate_open,
    propagate_qubit_marginal,
)
from framework.unravel import (
    EnsembleResult,
    ensemble_summary,
    mean_qubit_state,
    reconstruct_field,
    run_ensemble,
    trajectory_rows,
)
from framework.validity import ValidityReport, report_to_dict, timescale_window, window_sweep

COMMANDS = ("closed", "master", "meanfield", "ensemble", "validity", "compare")
MEANFIELD_MAX_STEPS = 2000


def check_field(field: WignerField, what: str) -> None:
    norm = field.normalization()
    if abs(norm - 1.0) > TOL_NORMALIZATION:
        raise InvariantError(f"{what}: normalization {norm:.12f} drifted from 1")
    herm = field.hermiticity_error()
    if herm > TOL_FIELD_HERMITIAN:
        raise InvariantError(f"{what}: field lost Hermiticity ({herm:.3e})")


def field_name(index: int) -> str:
    return f"field_{index:03d}.csv"


def snapshot_rows(fields: list[WignerField]) -> list[dict[str, Any]]:
    rows = []
    for k, fld in enumerate(fields):
        value, p_at = field_min_eigenvalue(fld)
        mean, var = momentum_moments(fld)
        rho = qubit_marginal(fld)
        rows.append(
            {
                "file": f"fields/{field_name(k)}",
                "t": fld.t,
                "normalization": fld.normalization(),
                "min_eigenvalue": value,
                "min_eigenvalue_p": p_at,
                "mean_p": mean,
                "var_p": var,
                "qubit_bloch": list(bloch_vector(rho.matrix)),
                "qubit_purity": purity(rho),
            }
        )
    return rows


def propagate_snapshots(
    cfg: RunConfig, out: Path, propagator: ClosedPropagator | OpenPropagator, label: str
) -> list[WignerField]:
    start = product_field(pde_initial(cfg.init, cfg.grid), cfg.grid, cfg.boundary_guard)
    fields = []
    for k, t in enumerate(cfg.output.times):
        fld = propagator.apply(start, t)
        check_field(fld, f"{label} snapshot t={t}")
        write_field_csv(out / "fields" / field_name(k), fld, cfg.params)
        fields.append(fld)
        log(f"{label}_snapshot t={t} min_eig={field_min_eigenvalue(fld)[0]:.6e}")
    return fields


def cmd_closed(cfg: RunConfig, out: Path, threads: int) -> dict[str, Any]:
    fields = propagate_snapshots(cfg, out, ClosedPropagator(cfg.params, cfg.grid), "closed")
    rows = negativity_onset(
        cfg.init, cfg.params, cfg.output.times, cfg.grid, boundary_guard=cfg.boundary_guard
    )
    write_rows(out / "negativity.csv", NEGATIVITY_HEADER, rows)
    return {"snapshots": snapshot_rows(fields)}


def cmd_master(cfg: RunConfig, out: Path, threads: int) -> dict[str, Any]:
    fields = propagate_snapshots(cfg, out, OpenPropagator(cfg.params, cfg.grid), "master")
    rows = positivity_scan(
        cfg.init, cfg.params, cfg.output.times, cfg.grid, boundary_guard=cfg.boundary_guard
    )
    write_rows(out / "positivity.csv", POSITIVITY_HEADER, rows)
    return {"snapshots": snapshot_rows(fields)}


def cmd_meanfield(cfg: RunConfig, out: Path, threads: int) -> dict[str, Any]:
    states = run_meanfield(cfg.init, cfg.params, cfg.sde.t_final, cfg.sde.dt)
    write_rows(out / "meanfield.csv", MEANFIELD_HEADER, meanfield_rows(states))
    last = states[-1]
    return {
        "steps": len(states) - 1,
        "final": {"t": last.t, "p": last.p, "bloch": list(bloch_vector(last.rho.matrix))},
        "momentum_variance": meanfield_momentum_variance(cfg.init),
    }


def reconstruction_check(cfg: RunConfig, result: EnsembleResult, out: Path) -> dict[str, Any]:
    """Histogram the final snapshot and compare it with the exact open solution."""
    grid = MomentumGrid(cfg.grid.p_min, cfg.grid.p_max, cfg.output.recon_n)
    t = float(result.times[-1])
    recon = reconstruct_field(result, grid, t)
    write_field_csv(out / "recon" / "reconstructed.csv", recon, cfg.params)
    report: dict[str, Any] = {"t": t, "grid_n": grid.n, "normalization": recon.normalization()}
    try:
        start = product_field(pde_initial(cfg.init, grid), grid, cfg.boundary_guard)
        exact = propagate_open(start, cfg.params, t)
    except PreconditionError as exc:
        warn(f"reconstruction comparison skipped: {exc}")
        report["skipped"] = str(exc)
        return report
    write_field_csv(out / "recon" / "master.csv", exact, cfg.params)
    report["l1_to_master"] = field_l1_distance(recon, exact)
    report["l1_scale"] = 1.0 / math.sqrt(result.n_traj)
    return report


def cmd_ensemble(cfg: RunConfig, out: Path, threads: int) -> dict[str, Any]:
    result = run_ensemble(cfg.ensemble, cfg.init, cfg.params, threads=threads)
    for i in range(min(cfg.output.trajectory_files, result.n_traj)):
        path = out / "trajectories" / f"traj_{i:04d}.csv"
        write_rows(path, TRAJECTORY_HEADER, trajectory_rows(result, i))
    summary = ensemble_summary(result)
    if cfg.output.reconstruct:
        summary["reconstruction"] = reconstruction_check(cfg, result, out)
    exact = propagate_qubit_marginal(cfg.init.rho0, cfg.params, float(result.times[-1]))
    summary["qubit_marginal_trace_distance"] = trace_distance(mean_qubit_state(result), exact)
    return summary


def _sweep_angles(n: int) -> list[float]:
    return [math.pi * k / (n - 1) for k in range(n)]


def cmd_validity(cfg: RunConfig, out: Path, threads: int) -> dict[str, Any]:
    report = timescale_window(cfg.params, cfg.init.rho0, cfg.chi)
    sweep = window_sweep(cfg.params, _sweep_angles(cfg.sweep_points), cfg.chi)
    columns = [
        "theta",
        "mean_a",
        "variance_a",
        "tau_lower",
        "tau_upper",
        "window_nonempty",
        "log_width",
    ]
    rows = [[math.nan if r[c] is None else float(r[c]) for c in columns] for r in sweep]
    write_rows(out / "sweep.csv", columns, rows)
    return {"report": report_to_dict(report), "sweep": sweep}


def comparison_times(report: ValidityReport, t_default: float) -> tuple[float, float | None]:
    """Inside time (window midpoint, else half the upper bound) and the late time."""
    late = 10.0 * report.tau_upper if math.isfinite(report.tau_upper) else None
    if report.midpoint is not None:
        return report.midpoint, late
    if late is not None:
        return 0.5 * report.tau_upper, late
    return t_default, late


def meanfield_distance(cfg: RunConfig, t: float) -> dict[str, float]:
    # the mean-field step is exact for any dt
    dt = max(min(cfg.sde.dt, t), t / MEANFIELD_MAX_STEPS)
    states = run_meanfield(cfg.init, cfg.params, t, dt)
    exact = propagate_qubit_marginal(cfg.init.rho0, cfg.params, t)
    return {"t": t, "trace_distance": trace_distance(states[-1].rho, exact)}


def cmd_compare(cfg: RunConfig, out: Path, threads: int) -> dict[str, Any]:
    report = timescale_window(cfg.params, cfg.init.rho0, cfg.chi)
    inside, late = comparison_times(report, cfg.sde.t_final)
    if not report.window_nonempty:
        warn("mean-field validity window is empty for this state")
    meanfield: dict[str, Any] = {"inside": meanfield_distance(cfg, inside) if inside > 0 else None}
    meanfield["late"] = meanfield_distance(cfg, late) if late is not None else None

    result = run_ensemble(cfg.ensemble, cfg.init, cfg.params, threads=threads)
    t_end = float(result.times[-1])
    exact_rho = propagate_qubit_marginal(cfg.init.rho0, cfg.params, t_end)
    mf_states = run_meanfield(cfg.init, cfg.params, t_end, cfg.sde.dt) if t_end > 0 else []
    mf_rho = mf_states[-1].rho if mf_states else cfg.init.rho0

    grid = MomentumGrid(cfg.grid.p_min, cfg.grid.p_max, cfg.output.recon_n)
    master_var: float | None = None
    fields: dict[str, Any] = {}
    try:
        start = product_field(pde_initial(cfg.init, grid), grid, cfg.boundary_guard)
        exact_field = propagate_open(start, cfg.params, t_end)
        master_var = momentum_moments(exact_field)[1]
        fields["l1_ensemble_master"] = field_l1_distance(
            reconstruct_field(result, grid, t_end), exact_field
        )
    except PreconditionError as exc:
        warn(f"field comparison skipped: {exc}")
        fields["skipped"] = str(exc)

    return {
        "validity": report_to_dict(report),
        "window_empty": not report.window_nonempty,
        "meanfield_vs_master": meanfield,
        "at_t_final": {
            "t": t_end,
            "trace_distance_meanfield_master": trace_distance(mf_rho, exact_rho),
            "trace_distance_ensemble_master": trace_distance(mean_qubit_state(result), exact_rho),
            "trace_distance_meanfield_ensemble": trace_distance(mf_rho, mean_qubit_state(result)),
            "ensemble_tolerance": 5.0 / math.sqrt(result.n_traj),
            "momentum_variance": {
                "meanfield": meanfield_momentum_variance(cfg.init),
                "master": master_var,
                "ensemble": float(np.var(result.p[-1])),
            },
        },
        "fields": fields,
        "n_traj": result.n_traj,
        "seed": result.seed,
    }


HANDLERS: dict[str, Callable[[RunConfig, Path, int], dict[str, Any]]] = {
    "closed": cmd_closed,
    "master": cmd_master,
    "meanfield": cmd_meanfield,
    "ensemble": cmd_ensemble,
    "validity": cmd_validity,
    "compare": cmd_compare,
}


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="config sections and defaults:\n" + describe_defaults(),
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", default=None, help="TOML run config (merged over --preset).")
    parser.add_argument(
        "--preset",
        default=None,
        help=f"Bundled scenario: {', '.join(available_presets())}.",
    )
    parser.add_argument("--seed", type=int, default=None, help="Override sde.seed.")
    parser.add_argument(
        "--out",
        default=None,
        help="Run directory (default: out/<command>_<preset or config stem>).",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=1,
        help="Worker threads for the ensemble; results do not depend on it (default: 1).",
    )
    parser.add_argument("--quiet", action="store_true", help="Suppress progress lines.")
    return parser.parse_args(argv)


def default_out(args: argparse.Namespace) -> Path:
    stem = args.preset or (Path(args.config).stem if args.config else "run")
    return Path("out") / f"{args.command}_{stem}"


def run(args: argparse.Namespace) -> Path:
    if args.config is None and args.preset is None:
        raise ConfigError("one of --config or --preset is required")
    if args.threads < 1:
        raise ConfigError(f"--threads must be >= 1 (got {args.threads})")
    cfg = load_run_config(Path(args.config) if args.config else None, args.preset, args.seed)
    out = Path(args.out) if args.out else default_out(args)
    out.mkdir(parents=True, exist_ok=True)
    log(f"start command={args.command} out={out}")
    write_json(out / "config.json", cfg.raw)
    body = HANDLERS[args.command](cfg, out, args.threads)
    write_json(out / "summary.json", {"command": args.command, "params": cfg.params.echo(), **body})
    log(f"done command={args.command}")
    return out


def main(argv: list[str]) -> int:
    args = parse_args(argv)
    set_quiet(args.quiet)
    try:
        run(args)
    except CQSimError as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
