"""CSV and JSON artifacts written into a run directory.

Floats are written with ``repr`` so identical runs give byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from framework.errors import InvariantError
from framework.meanfield import MeanFieldState
from framework.models import ModelParams, MomentumGrid, WignerField
from framework.qmat import purity

FIELD_HEADER = ["p", "re00", "im00", "re01", "im01", "re10", "im10", "re11", "im11"]
MEANFIELD_HEADER = ["t", "p", "re00", "re01", "im01", "re11", "purity"]
TRAJECTORY_HEADER = ["t", "p", "bloch_x", "bloch_y", "bloch_z", "purity", "min_eig"]
NEGATIVITY_HEADER = ["t", "min_eig", "p_at"]
POSITIVITY_HEADER = ["t", "min_eig"]


def fmt(value: float) -> str:
    return repr(float(value))


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_field_csv(path: Path, field: WignerField, params: ModelParams | None = None) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = field.grid
    with path.open("w", newline="", encoding="utf-8") as f:
        f.write(f"# t={fmt(field.t)} q={fmt(field.q)}\n")
        f.write(f"# p_min={fmt(grid.p_min)} p_max={fmt(grid.p_max)} n={grid.n}\n")
        if params is not None:
            f.write(
                f"# lam={fmt(params.lam)} hbar={fmt(params.hbar)} gamma_c={fmt(params.gamma_c)} "
                f"gamma_q={fmt(params.gamma_q)} a0={fmt(params.a_op.a0)} a1={fmt(params.a_op.a1)}\n"
            )
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(FIELD_HEADER)
        for p, m in zip(grid.points, field.values, strict=True):
            writer.writerow(
                [
                    fmt(p),
                    fmt(m[0, 0].real),
                    fmt(m[0, 0].imag),
                    fmt(m[0, 1].real),
                    fmt(m[0, 1].imag),
                    fmt(m[1, 0].real),
                    fmt(m[1, 0].imag),
                    fmt(m[1, 1].real),
                    fmt(m[1, 1].imag),
                ]
            )


def _comment_value(meta: dict[str, str], key: str) -> str:
    try:
        return meta[key]
    except KeyError:
        raise InvariantError(f"field csv comment is missing {key!r}") from None


def read_field_csv(path: Path) -> WignerField:
    meta: dict[str, str] = {}
    with path.open("r", newline="", encoding="utf-8") as f:
        lines = f.read().splitlines()
    body = [line for line in lines if not line.startswith("#")]
    for line in lines:
        if line.startswith("#"):
            for token in line[1:].split():
                name, _, value = token.partition("=")
                meta[name] = value
    reader = csv.reader(body)
    header = next(reader, None)
    if header != FIELD_HEADER:
        raise InvariantError(f"{path} has unexpected header {header}")
    data = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    grid = MomentumGrid(
        p_min=float(_comment_value(meta, "p_min")),
        p_max=float(_comment_value(meta, "p_max")),
        n=int(_comment_value(meta, "n")),
    )
    values = np.empty((data.shape[0], 2, 2), dtype=complex)
    values[:, 0, 0] = data[:, 1] + 1j * data[:, 2]
    values[:, 0, 1] = data[:, 3] + 1j * data[:, 4]
    values[:, 1, 0] = data[:, 5] + 1j * data[:, 6]
    values[:, 1, 1] = data[:, 7] + 1j * data[:, 8]
    return WignerField(
        grid=grid,
        values=values,
        q=float(_comment_value(meta, "q")),
        t=float(_comment_value(meta, "t")),
    )


def read_rows(path: Path) -> tuple[list[str], list[list[float]]]:
    with path.open("r", newline="", encoding="utf-8") as f:
        reader = csv.reader(line for line in f if not line.startswith("#"))
        header = next(reader, None)
        if not header:
            raise InvariantError(f"{path} is empty")
        return header, [[float(v) for v in row] for row in reader if row]


def meanfield_rows(states: Sequence[MeanFieldState]) -> list[list[float]]:
    rows: list[list[float]] = []
    for s in states:
        m = s.rho.matrix
        rows.append(
            [s.t, s.p, m[0, 0].real, m[0, 1].real, m[0, 1].imag, m[1, 1].real, purity(s.rho)]
        )
    return rows


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    return value


def write_json(path: Path, payload: dict[str, Any]) -> None:
    """Sorted keys, strict JSON; non-finite floats are written as strings."""
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def read_json(path: Path) -> dict[str, Any]:
    return json.loads(path.read_text(encoding="utf-8"))
