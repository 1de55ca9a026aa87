#!/usr/bin/env python3
"""Post-run QA checks for a cqsim output directory."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

from framework.errors import CQSimError
from framework.fieldio import TRAJECTORY_HEADER, read_field_csv, read_json, read_rows
from framework.qmat import TOL_FIELD_HERMITIAN


@dataclass
class QAReport:
    checked_fields: int = 0
    checked_trajectories: int = 0
    failures: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def check_fields(run_dir: Path, report: QAReport, norm_tol: float) -> None:
    for path in sorted(run_dir.glob("fields/*.csv")) + sorted(run_dir.glob("recon/*.csv")):
        try:
            fld = read_field_csv(path)
        except (CQSimError, ValueError) as exc:
            report.failures.append(f"{path.name}: unreadable field ({exc})")
            continue
        report.checked_fields += 1
        norm = fld.normalization()
        # reconstructed fields on a coarse grid are exact up to the histogram, not 1e-8
        tol = norm_tol if path.parent.name == "fields" else 1e-6
        if abs(norm - 1.0) > tol:
            report.failures.append(f"{path.name}: normalization {norm:.12f}")
        if fld.hermiticity_error() > TOL_FIELD_HERMITIAN:
            report.failures.append(f"{path.name}: non-Hermitian values")


def check_trajectories(run_dir: Path, report: QAReport, min_eig_floor: float) -> None:
    for path in sorted(run_dir.glob("trajectories/*.csv")):
        header, rows = read_rows(path)
        if header != TRAJECTORY_HEADER:
            report.failures.append(f"{path.name}: unexpected header {header}")
            continue
        report.checked_trajectories += 1
        times = [r[0] for r in rows]
        if any(b <= a for a, b in zip(times, times[1:], strict=False)):
            report.failures.append(f"{path.name}: recorded times not increasing")
        if any(r[5] > 1.0 + 1e-9 for r in rows):
            report.failures.append(f"{path.name}: purity above 1")
        worst = min(r[6] for r in rows)
        if worst < min_eig_floor:
            report.warnings.append(f"{path.name}: min eigenvalue {worst:.3e} below {min_eig_floor}")


def check_summary(run_dir: Path, report: QAReport) -> dict[str, object]:
    summary_path = run_dir / "summary.json"
    if not summary_path.exists():
        report.failures.append("summary.json missing")
        return {}
    if not (run_dir / "config.json").exists():
        report.failures.append("config.json missing")
    summary = read_json(summary_path)
    diagnostics = summary.get("diagnostics")
    if isinstance(diagnostics, dict) and diagnostics.get("abort_count", 0):
        report.warnings.append(f"{diagnostics['abort_count']} trajectories flagged for negativity")
    return summary


def main(argv: list[str]) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--run", required=True, help="Output directory written by cqsim.py.")
    parser.add_argument(
        "--norm-tol",
        type=float,
        default=1e-8,
        help="Allowed |normalization - 1| for solver field snapshots (default: 1e-8).",
    )
    parser.add_argument(
        "--min-eig-floor",
        type=float,
        default=-1e-3,
        help="Warn when a trajectory rho eigenvalue drops below this (default: -1e-3).",
    )
    parser.add_argument(
        "--strict",
        action="store_true",
        help="Exit non-zero when hard integrity checks fail.",
    )
    args = parser.parse_args(argv)

    run_dir = Path(args.run)
    if not run_dir.is_dir():
        print(f"run directory not found: {run_dir}")
        return 1

    report = QAReport()
    summary = check_summary(run_dir, report)
    check_fields(run_dir, report, args.norm_tol)
    check_trajectories(run_dir, report, args.min_eig_floor)

    print(f"command={summary.get('command', 'unknown')}")
    print(f"fields_checked={report.checked_fields}")
    print(f"trajectories_checked={report.checked_trajectories}")
    for failure in report.failures:
        print(f"integrity {failure}")
    for warning in report.warnings:
        print(f"warning: {warning}")
    print(f"qa_status={'PASS' if report.passed else 'FAIL'}")

    if args.strict and not report.passed:
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
