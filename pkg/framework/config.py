"""TOML run configuration and the bundled presets.

A run is described by one TOML file with the sections below. ``--preset NAME`` starts
from ``configs/presets/NAME.toml``; a ``--config`` file is merged over it key by key.
"""
from __future__ import annotations

import math

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from framework.errors import ConfigError, PreconditionError
from framework.models import InitialCondition, ModelParams, MomentumGrid, PDist
from framework.qmat import Observable, QubitDensity
from framework.unravel import EnsembleSpec, SdeConfig

PRESET_DIR = Path(__file__).resolve().parents[1] / "configs" / "presets"

# None marks a key without a fixed default (derived from other keys).
DEFAULTS: dict[str, dict[str, Any]] = {
    "model": {
        "lam": 1.0,
        "hbar": 1.0,
        "gamma_c": 0.0,
        "gamma_q": 0.0,
        "q": 0.0,
        "observable": "sigma_z",
        "observable_im": None,
    },
    "grid": {"p_min": -20.0, "p_max": 20.0, "n": 1024, "boundary_guard": 1e-12},
    "initial": {
        "state": "plus",
        "bloch": None,
        "p_dist": "gaussian",
        "p0": 0.0,
        "sigma_p": 1.0,
        "q0": None,
    },
    "sde": {
        "dt": 1e-3,
        "t_final": 1.0,
        "record_stride": 100,
        "renormalize": True,
        "positivity_abort_threshold": -1e-3,
        "n_traj": 1000,
        "seed": 1,
        "scheme": "kraus",
        "allow_violation": False,
    },
    "output": {
        "times": None,
        "t_final": None,
        "n_snapshots": 5,
        "trajectory_files": 20,
        "reconstruct": True,
        "recon_n": 256,
    },
    "validity": {"chi": 10.0, "sweep_points": 13},
}


@dataclass(frozen=True)
class OutputConfig:
    times: tuple[float, ...]
    trajectory_files: int
    reconstruct: bool
    recon_n: int


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    grid: MomentumGrid
    boundary_guard: float
    init: InitialCondition
    ensemble: EnsembleSpec
    output: OutputConfig
    chi: float
    sweep_points: int
    raw: dict[str, dict[str, Any]]

    @property
    def sde(self) -> SdeConfig:
        return self.ensemble.config


def available_presets() -> list[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.toml"))


def load_toml(path: Path) -> dict[str, Any]:
    try:
        with path.open("rb") as f:
            return tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None


def load_preset(name: str) -> dict[str, Any]:
    path = PRESET_DIR / f"{name}.toml"
    if not path.exists():
        raise ConfigError(f"unknown preset {name!r} (available: {', '.join(available_presets())})")
    return load_toml(path)


def merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    out: dict[str, Any] = {k: dict(v) if isinstance(v, dict) else v for k, v in base.items()}
    for section, values in override.items():
        if isinstance(values, dict) and isinstance(out.get(section), dict):
            out[section].update(values)
        else:
            out[section] = values
    return out


def _check_keys(raw: dict[str, Any]) -> None:
    for section, values in raw.items():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(values, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key in values:
            if key not in DEFAULTS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")


def _number(section: dict[str, Any], name: str, where: str) -> float:
    value = section[name]
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ConfigError(f"{where}.{name} must be a number (got {value!r})")
    return float(value)


def _integer(section: dict[str, Any], name: str, where: str) -> int:
    value = section[name]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}.{name} must be an integer (got {value!r})")
    return value


def _numbers(values: list[Any], where: str) -> list[float]:
    out = []
    for value in values:
        if isinstance(value, bool) or not isinstance(value, int | float):
            raise ConfigError(f"{where} entries must be numbers (got {value!r})")
        out.append(float(value))
    return out


def _flag(section: dict[str, Any], name: str, where: str) -> bool:
    value = section[name]
    if not isinstance(value, bool):
        raise ConfigError(f"{where}.{name} must be true or false (got {value!r})")
    return value


def _observable(model: dict[str, Any]) -> Observable:
    spec = model["observable"]
    if isinstance(spec, str):
        return Observable.named(spec)
    try:
        re = [[float(v) for v in row] for row in spec]
        im = model["observable_im"] or [[0.0, 0.0], [0.0, 0.0]]
        im = [[float(v) for v in row] for row in im]
        matrix = [[complex(re[i][j], im[i][j]) for j in range(2)] for i in range(2)]
    except (TypeError, ValueError, IndexError):
        raise ConfigError("model.observable must be a name or a 2x2 list of numbers") from None
    return Observable(matrix)


def _initial_state(initial: dict[str, Any]) -> QubitDensity:
    bloch = initial["bloch"]
    if bloch is not None:
        if not isinstance(bloch, list) or len(bloch) != 3:
            raise ConfigError("initial.bloch must be a list [x, y, z]")
        return QubitDensity.from_bloch(*_numbers(bloch, "initial.bloch"))
    return QubitDensity.named(str(initial["state"]))


def _snapshot_times(output: dict[str, Any], default_t: float) -> tuple[float, ...]:
    times = output["times"]
    if times is not None:
        if not isinstance(times, list) or not times:
            raise ConfigError("output.times must be a non-empty list")
        values = tuple(_numbers(times, "output.times"))
    else:
        t_final = default_t if output["t_final"] is None else _number(output, "t_final", "output")
        n = _integer(output, "n_snapshots", "output")
        if n < 1:
            raise ConfigError("output.n_snapshots must be >= 1")
        values = (0.0,) if t_final == 0.0 or n == 1 else tuple(
            t_final * k / (n - 1) for k in range(n)
        )
    if any(t < 0.0 or not math.isfinite(t) for t in values):
        raise ConfigError("output times must be finite and >= 0")
    if list(values) != sorted(values):
        raise ConfigError("output times must be increasing")
    return values


def build_config(raw: dict[str, Any]) -> RunConfig:
    """Validate ``raw`` against DEFAULTS and build the typed run description."""
    _check_keys(raw)
    full = merge(DEFAULTS, raw)
    model, grid_s, initial = full["model"], full["grid"], full["initial"]
    sde, output, validity = full["sde"], full["output"], full["validity"]
    try:
        params = ModelParams(
            lam=_number(model, "lam", "model"),
            hbar=_number(model, "hbar", "model"),
            gamma_c=_number(model, "gamma_c", "model"),
            gamma_q=_number(model, "gamma_q", "model"),
            q=_number(model, "q", "model"),
            a_op=_observable(model),
        )
        grid = MomentumGrid(
            p_min=_number(grid_s, "p_min", "grid"),
            p_max=_number(grid_s, "p_max", "grid"),
            n=_integer(grid_s, "n", "grid"),
        )
        kind = initial["p_dist"]
        p0 = _number(initial, "p0", "initial")
        if kind == "delta":
            p_dist = PDist.delta(p0)
        elif kind == "gaussian":
            p_dist = PDist.gaussian(p0, _number(initial, "sigma_p", "initial"))
        else:
            raise ConfigError(f"initial.p_dist must be 'gaussian' or 'delta' (got {kind!r})")
        q0 = params.q if initial["q0"] is None else _number(initial, "q0", "initial")
        if q0 != params.q:
            raise ConfigError(
                f"inconsistent blocks: initial.q0={q0} differs from model.q={params.q}; "
                "q is fixed for the whole run"
            )
        init = InitialCondition(rho0=_initial_state(initial), p_dist=p_dist, q0=q0)
        sde_config = SdeConfig(
            dt=_number(sde, "dt", "sde"),
            t_final=_number(sde, "t_final", "sde"),
            record_stride=_integer(sde, "record_stride", "sde"),
            renormalize=_flag(sde, "renormalize", "sde"),
            positivity_abort_threshold=_number(sde, "positivity_abort_threshold", "sde"),
            scheme=str(sde["scheme"]),  # type: ignore[arg-type]
        )
        ensemble = EnsembleSpec(
            n_traj=_integer(sde, "n_traj", "sde"),
            seed=_integer(sde, "seed", "sde"),
            config=sde_config,
            allow_violation=_flag(sde, "allow_violation", "sde"),
        )
    except PreconditionError as exc:
        raise ConfigError(f"invalid config value: {exc}") from None

    recon_n = _integer(output, "recon_n", "output")
    chi = _number(validity, "chi", "validity")
    if not chi > 1.0:
        raise ConfigError(f"validity.chi must be > 1 (got {chi})")
    guard = _number(grid_s, "boundary_guard", "grid")
    if not 0.0 < guard < 1.0:
        raise ConfigError(f"grid.boundary_guard must lie in (0, 1) (got {guard})")
    try:
        MomentumGrid(grid.p_min, grid.p_max, recon_n)
    except PreconditionError as exc:
        raise ConfigError(f"invalid output.recon_n: {exc}") from None
    return RunConfig(
        params=params,
        grid=grid,
        boundary_guard=guard,
        init=init,
        ensemble=ensemble,
        output=OutputConfig(
            times=_snapshot_times(output, sde_config.t_final),
            trajectory_files=max(0, _integer(output, "trajectory_files", "output")),
            reconstruct=_flag(output, "reconstruct", "output"),
            recon_n=recon_n,
        ),
        chi=chi,
        sweep_points=max(2, _integer(validity, "sweep_points", "validity")),
        raw={k: v for k, v in full.items()},
    )


def load_run_config(
    config_path: Path | None,
    preset: str | None = None,
    seed: int | None = None,
) -> RunConfig:
    raw: dict[str, Any] = load_preset(preset) if preset else {}
    if config_path is not None:
        raw = merge(raw, load_toml(config_path))
    if seed is not None:
        raw = merge(raw, {"sde": {"seed": seed}})
    return build_config(raw)


def describe_defaults() -> str:
    """Reference text of every section, key and default, shown by ``--help``."""
    lines = []
    for section, values in DEFAULTS.items():
        lines.append(f"[{section}]")
        for key, value in values.items():
            shown = "(derived)" if value is None else repr(value)
            lines.append(f"  {key} = {shown}")
    return "\n".join(lines)
