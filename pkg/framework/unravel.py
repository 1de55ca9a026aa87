"""Stochastic classical-quantum unraveling and the Monte Carlo ensemble engine.

One trajectory carries a momentum p and a qubit state rho driven by one shared Wiener
increment dW per step:

    dp   = -lam <A> dt + sqrt(2 gamma_C) dW
    drho = -(i/hbar)[lam q A, rho] dt - gamma_Q [A, [A, rho]] dt
           + kappa (A rho + rho A - 2 <A> rho) dW,      kappa = -lam / sqrt(8 gamma_C)

Averaging rho_t delta(p_t - p) over trajectories reproduces the open master dynamics.

Noise stream layout for trajectory i: Philox keyed by SeedSequence(seed, spawn_key=(i,)).
The first normal is the initial momentum offset (gaussian p_dist only), then one normal
per step.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from framework.console import log, warn
from framework.errors import PreconditionError
from framework.models import (
    InitialCondition,
    ModelParams,
    MomentumGrid,
    TrajectoryState,
    WignerField,
)
from framework.qmat import QubitDensity, adjoint, batch_min_eigenvalue
from framework.validity import check_tradeoff

BLOCK_SIZE = 512
NOISE_CHUNK = 1024
DEFAULT_BORN_THRESHOLD = 0.99

Scheme = Literal["kraus", "euler"]


@dataclass(frozen=True)
class SdeConfig:
    dt: float = 1e-3
    t_final: float = 1.0
    record_stride: int = 100
    renormalize: bool = True
    positivity_abort_threshold: float = -1e-3
    scheme: Scheme = "kraus"

    def __post_init__(self) -> None:
        if not self.dt > 0.0:
            raise PreconditionError(f"sde dt must be > 0 (got {self.dt})")
        if self.t_final < 0.0:
            raise PreconditionError(f"sde t_final must be >= 0 (got {self.t_final})")
        if self.record_stride < 1:
            raise PreconditionError(f"record_stride must be >= 1 (got {self.record_stride})")
        if self.scheme not in ("kraus", "euler"):
            raise PreconditionError(f"unknown sde scheme {self.scheme!r}")
        steps = self.t_final / self.dt
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise PreconditionError(
                f"t_final={self.t_final} is not a whole number of steps dt={self.dt}"
            )

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def record_steps(self) -> np.ndarray:
        """Step indices kept in the result; the last step is always recorded."""
        steps = np.arange(0, self.n_steps + 1, self.record_stride, dtype=np.int64)
        if steps[-1] != self.n_steps:
            steps = np.append(steps, self.n_steps)
        return steps


@dataclass(frozen=True)
class EnsembleSpec:
    n_traj: int
    seed: int
    config: SdeConfig = field(default_factory=SdeConfig)
    allow_violation: bool = False

    def __post_init__(self) -> None:
        if self.n_traj < 1:
            raise PreconditionError(f"n_traj must be >= 1 (got {self.n_traj})")
        if not 0 <= self.seed < 2**64:
            raise PreconditionError(f"seed must be a 64-bit unsigned integer (got {self.seed})")


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    """Recorded snapshots of every trajectory.

    ``p`` has shape (n_records, n_traj) and ``rho`` (n_records, n_traj, 2, 2) in the
    computational basis. ``min_eigenvalue`` is the smallest rho eigenvalue each
    trajectory reached over all steps, recorded or not.
    """

    times: np.ndarray
    p: np.ndarray
    rho: np.ndarray
    min_eigenvalue: np.ndarray
    flagged: np.ndarray
    params: ModelParams
    config: SdeConfig
    seed: int
    q: float = 0.0

    @property
    def n_traj(self) -> int:
        return int(self.p.shape[1])

    @property
    def abort_count(self) -> int:
        return int(np.count_nonzero(self.flagged))

    @property
    def min_eigenvalue_seen(self) -> float:
        return float(np.min(self.min_eigenvalue))

    def index_of(self, at: float) -> int:
        hits = np.flatnonzero(np.abs(self.times - at) <= 1e-9 * max(1.0, abs(at)))
        if hits.size == 0:
            raise PreconditionError(
                f"time {at} was not recorded (recorded: {self.times[0]}..{self.times[-1]} "
                f"every {self.config.record_stride} steps)"
            )
        return int(hits[0])

    def _rho_at(self, at: float | None) -> np.ndarray:
        return self.rho[-1] if at is None else self.rho[self.index_of(at)]

    def expectation(self, at: float | None = None) -> np.ndarray:
        rho = self._rho_at(at)
        return np.einsum("ij,tji->t", self.params.a_op.matrix, rho).real

    def purity(self, at: float | None = None) -> np.ndarray:
        rho = self._rho_at(at)
        return np.einsum("tij,tji->t", rho, rho).real

    def bloch(self, at: float | None = None) -> np.ndarray:
        rho = self._rho_at(at)
        return np.stack(
            [
                2.0 * rho[:, 0, 1].real,
                -2.0 * rho[:, 0, 1].imag,
                (rho[:, 0, 0] - rho[:, 1, 1]).real,
            ],
            axis=1,
        )


def noise_coefficients(params: ModelParams) -> tuple[float, float]:
    """(momentum noise amplitude sqrt(2 gamma_C), qubit coefficient kappa)."""
    if params.lam == 0.0:
        return math.sqrt(2.0 * params.gamma_c), 0.0
    if params.gamma_c == 0.0:
        raise PreconditionError(
            "unraveling needs gamma_c > 0 when lam != 0: the coefficient lam/sqrt(8 gamma_c) "
            "is undefined"
        )
    return math.sqrt(2.0 * params.gamma_c), -params.lam / math.sqrt(8.0 * params.gamma_c)


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _check_step(dt: float) -> None:
    if not dt > 0.0:
        raise PreconditionError(f"dt must be > 0 (got {dt})")


def step_sde(
    state: TrajectoryState,
    params: ModelParams,
    dt: float,
    dw: float,
    renormalize: bool = True,
) -> TrajectoryState:
    """One Euler-Maruyama step; <A> is taken at the pre-step rho."""
    _check_step(dt)
    sigma_p, kappa = noise_coefficients(params)
    a = params.a_op.matrix
    rho = state.rho.matrix
    mean_a = float(np.trace(a @ rho).real)
    h = params.lam * params.q * a
    comm = a @ rho - rho @ a
    drho = (
        -1j / params.hbar * (h @ rho - rho @ h) * dt
        - params.gamma_q * (a @ comm - comm @ a) * dt
        + kappa * (a @ rho + rho @ a - 2.0 * mean_a * rho) * dw
    )
    new = rho + drho
    if renormalize:
        new = 0.5 * (new + adjoint(new))
        new = new / np.trace(new).real
    return TrajectoryState(
        t=state.t + dt,
        p=state.p - params.lam * mean_a * dt + sigma_p * dw,
        rho=QubitDensity(new, checked=False),
    )


def step_sde_kraus(
    state: TrajectoryState, params: ModelParams, dt: float, dw: float
) -> TrajectoryState:
    """Positivity-preserving step: rho' ~ M rho M^dag + 2 gamma_res A rho A dt.

    M = I - (i lam q A/hbar + gamma_Q A^2) dt + kappa A dY with dY = dW + 2 kappa <A> dt
    and gamma_res = gamma_Q - kappa^2/2, which is zero at saturation and negative only
    when the trade-off fails.
    """
    _check_step(dt)
    sigma_p, kappa = noise_coefficients(params)
    a = params.a_op.matrix
    rho = state.rho.matrix
    mean_a = float(np.trace(a @ rho).real)
    gamma_res = params.gamma_q - 0.5 * kappa**2
    dy = dw + 2.0 * kappa * mean_a * dt
    eye = np.eye(2, dtype=complex)
    m = eye - (1j * params.lam * params.q / params.hbar * a + params.gamma_q * a @ a) * dt
    m = m + kappa * dy * a
    new = m @ rho @ adjoint(m) + 2.0 * gamma_res * dt * (a @ rho @ a)
    new = 0.5 * (new + adjoint(new))
    new = new / np.trace(new).real
    return TrajectoryState(
        t=state.t + dt,
        p=state.p - params.lam * mean_a * dt + sigma_p * dw,
        rho=QubitDensity(new, checked=False),
    )


@dataclass
class _Block:
    """Eigenbasis components of a block of trajectories: x = r00, y = r11, c = r01."""

    p: np.ndarray
    x: np.ndarray
    y: np.ndarray
    c: np.ndarray

    def min_eigenvalue(self) -> np.ndarray:
        return 0.5 * (self.x + self.y) - np.hypot(0.5 * (self.x - self.y), np.abs(self.c))


def _run_block(
    start: int,
    stop: int,
    spec: EnsembleSpec,
    init: InitialCondition,
    params: ModelParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    cfg = spec.config
    dt = cfg.dt
    sqrt_dt = math.sqrt(dt)
    a0, a1 = params.a_op.a0, params.a_op.a1
    sigma_p, kappa = noise_coefficients(params)
    omega = params.lam * params.q * (a0 - a1) / params.hbar
    dephase = params.gamma_q * (a0 - a1) ** 2
    gamma_res = params.gamma_q - 0.5 * kappa**2
    base0 = 1.0 - (1j * params.lam * params.q * a0 / params.hbar + params.gamma_q * a0**2) * dt
    base1 = 1.0 - (1j * params.lam * params.q * a1 / params.hbar + params.gamma_q * a1**2) * dt
    size = stop - start

    rngs = [trajectory_rng(spec.seed, i) for i in range(start, stop)]
    p0 = np.full(size, init.p_dist.p0)
    if init.p_dist.kind == "gaussian":
        p0 = p0 + init.p_dist.sigma_p * np.array([g.standard_normal() for g in rngs])
    r0 = params.a_op.to_eigenbasis(init.rho0.matrix)
    state = _Block(
        p=p0,
        x=np.full(size, r0[0, 0].real),
        y=np.full(size, r0[1, 1].real),
        c=np.full(size, r0[0, 1], dtype=complex),
    )

    record = cfg.record_steps()
    n_rec = record.size
    out_p = np.empty((n_rec, size))
    out_r = np.zeros((n_rec, size, 2, 2), dtype=complex)
    lowest = state.min_eigenvalue()

    def store(slot: int) -> None:
        out_p[slot] = state.p
        out_r[slot, :, 0, 0] = state.x
        out_r[slot, :, 1, 1] = state.y
        out_r[slot, :, 0, 1] = state.c
        out_r[slot, :, 1, 0] = np.conj(state.c)

    store(0)
    slot = 1
    noise = np.empty((size, 0))
    for step in range(cfg.n_steps):
        k = step % NOISE_CHUNK
        if k == 0:
            width = min(NOISE_CHUNK, cfg.n_steps - step)
            noise = np.stack([g.standard_normal(width) for g in rngs])
        dw = sqrt_dt * noise[:, k]
        x, y, c = state.x, state.y, state.c
        mean_a = a0 * x + a1 * y
        state.p = state.p - params.lam * mean_a * dt + sigma_p * dw
        if cfg.scheme == "kraus":
            dy = dw + 2.0 * kappa * mean_a * dt
            m0 = base0 + kappa * a0 * dy
            m1 = base1 + kappa * a1 * dy
            nx = np.abs(m0) ** 2 * x + 2.0 * gamma_res * a0**2 * x * dt
            ny = np.abs(m1) ** 2 * y + 2.0 * gamma_res * a1**2 * y * dt
            nc = m0 * np.conj(m1) * c + 2.0 * gamma_res * a0 * a1 * c * dt
            tr = nx + ny
            nx, ny, nc = nx / tr, ny / tr, nc / tr
        else:
            nx = x + 2.0 * kappa * (a0 - mean_a) * x * dw
            ny = y + 2.0 * kappa * (a1 - mean_a) * y * dw
            nc = c + (-1j * omega - dephase) * c * dt + kappa * (a0 + a1 - 2.0 * mean_a) * c * dw
            if cfg.renormalize:
                tr = nx + ny
                nx, ny, nc = nx / tr, ny / tr, nc / tr
        state.x, state.y, state.c = nx, ny, nc
        lowest = np.minimum(lowest, state.min_eigenvalue())
        if slot < n_rec and record[slot] == step + 1:
            store(slot)
            slot += 1

    out_r = params.a_op.from_eigenbasis(out_r)
    return out_p, out_r, lowest


def run_ensemble(
    spec: EnsembleSpec,
    init: InitialCondition,
    params: ModelParams,
    threads: int = 1,
) -> EnsembleResult:
    """Integrate ``spec.n_traj`` independent trajectories.

    Trajectories run in fixed blocks of BLOCK_SIZE, each reading only its own noise
    streams, so ``threads`` changes scheduling and never the result.
    """
    if threads < 1:
        raise PreconditionError(f"threads must be >= 1 (got {threads})")
    noise_coefficients(params)
    holds, margin = check_tradeoff(params)
    if not holds:
        message = (
            "decoherence-diffusion trade-off violated: "
            f"gamma_c*gamma_q - lam^2/16 = {margin:.6g} < 0"
        )
        if not spec.allow_violation:
            raise PreconditionError(message + " (set allow_violation to study it)")
        warn(message + "; trajectories may lose positivity")

    cfg = spec.config
    bounds = [
        (lo, min(lo + BLOCK_SIZE, spec.n_traj)) for lo in range(0, spec.n_traj, BLOCK_SIZE)
    ]
    log(
        f"ensemble_start n_traj={spec.n_traj} steps={cfg.n_steps} dt={cfg.dt} "
        f"scheme={cfg.scheme} blocks={len(bounds)} threads={threads}"
    )
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda b: _run_block(b[0], b[1], spec, init, params), bounds))

    p = np.concatenate([part[0] for part in parts], axis=1)
    rho = np.concatenate([part[1] for part in parts], axis=1)
    lowest = np.concatenate([part[2] for part in parts])
    flagged = lowest < cfg.positivity_abort_threshold
    if np.any(flagged):
        warn(
            f"{int(np.count_nonzero(flagged))} trajectories fell below the positivity threshold "
            f"{cfg.positivity_abort_threshold} (min eigenvalue {float(np.min(lowest)):.3e})"
        )
    for arr in (p, rho, lowest, flagged):
        arr.flags.writeable = False
    times = cfg.record_steps() * cfg.dt
    times.flags.writeable = False
    log(f"ensemble_done n_traj={spec.n_traj} flagged={int(np.count_nonzero(flagged))}")
    return EnsembleResult(
        times=times,
        p=p,
        rho=rho,
        min_eigenvalue=lowest,
        flagged=flagged,
        params=params,
        config=cfg,
        seed=spec.seed,
        q=init.q0,
    )


def reconstruct_field(result: EnsembleResult, grid: MomentumGrid, at: float) -> WignerField:
    """Histogram estimator of E[rho_t delta(p_t - p)] on centred, periodically wrapped bins."""
    k = result.index_of(at)
    values = np.zeros((grid.n, 2, 2), dtype=complex)
    # np.add.at accumulates in trajectory order, which keeps the sum scheduling-invariant
    np.add.at(values, grid.bin_index(result.p[k]), result.rho[k])
    values /= result.n_traj * grid.dp
    return WignerField(grid=grid, values=values, q=result.q, t=float(result.times[k]))


def born_statistics(result: EnsembleResult, threshold: float) -> tuple[float, float, float]:
    """Fractions of trajectories collapsed toward a0, toward a1, and still undecided."""
    if not 0.0 < threshold < 1.0:
        raise PreconditionError(f"born threshold must lie in (0, 1) (got {threshold})")
    a_op = result.params.a_op
    s = (2.0 * result.expectation() - a_op.a0 - a_op.a1) / a_op.gap
    n = result.n_traj
    up = int(np.count_nonzero(s > threshold))
    down = int(np.count_nonzero(s < -threshold))
    return up / n, down / n, (n - up - down) / n


def mean_qubit_state(result: EnsembleResult, at: float | None = None) -> QubitDensity:
    rho = result._rho_at(at).mean(axis=0)
    return QubitDensity(0.5 * (rho + adjoint(rho)), checked=False)


def trajectory_rows(result: EnsembleResult, index: int) -> list[list[float]]:
    """Rows (t, p, bloch_x, bloch_y, bloch_z, purity, min_eig) of one trajectory."""
    if not 0 <= index < result.n_traj:
        raise PreconditionError(f"trajectory index {index} out of range")
    rho = result.rho[:, index]
    purity = np.einsum("tij,tji->t", rho, rho).real
    mins = batch_min_eigenvalue(rho)
    rows: list[list[float]] = []
    for k, t in enumerate(result.times):
        r = rho[k]
        rows.append(
            [
                float(t),
                float(result.p[k, index]),
                float(2.0 * r[0, 1].real),
                float(-2.0 * r[0, 1].imag),
                float((r[0, 0] - r[1, 1]).real),
                float(purity[k]),
                float(mins[k]),
            ]
        )
    return rows


def ensemble_summary(
    result: EnsembleResult, born_threshold: float = DEFAULT_BORN_THRESHOLD
) -> dict[str, object]:
    up, down, unresolved = born_statistics(result, born_threshold)
    final_a = result.expectation()
    a_op = result.params.a_op
    s = (2.0 * final_a - a_op.a0 - a_op.a1) / a_op.gap
    final_p = result.p[-1]
    moments = []
    for k, t in enumerate(result.times):
        rho = result.rho[k]
        mean_a = np.einsum("ij,tji->t", a_op.matrix, rho).real
        mean_rho = rho.mean(axis=0)
        moments.append(
            {
                "t": float(t),
                "mean_p": float(np.mean(result.p[k])),
                "var_p": float(np.var(result.p[k])),
                "mean_a": float(np.mean(mean_a)),
                "stderr_a": float(np.std(mean_a) / math.sqrt(result.n_traj)),
                "mean_purity": float(np.mean(np.einsum("tij,tji->t", rho, rho).real)),
                "mean_state_purity": float(np.trace(mean_rho @ mean_rho).real),
                "mean_state_bloch": [
                    float(2.0 * mean_rho[0, 1].real),
                    float(-2.0 * mean_rho[0, 1].imag),
                    float((mean_rho[0, 0] - mean_rho[1, 1]).real),
                ],
            }
        )
    return {
        "params": result.params.echo(),
        "seed": result.seed,
        "n_traj": result.n_traj,
        "dt": result.config.dt,
        "t_final": result.config.t_final,
        "scheme": result.config.scheme,
        "born": {
            "threshold": born_threshold,
            "frac_up": up,
            "frac_down": down,
            "unresolved": unresolved,
            "mean_final_p_up": float(np.mean(final_p[s > born_threshold])) if up else None,
            "mean_final_p_down": float(np.mean(final_p[s < -born_threshold])) if down else None,
        },
        "diagnostics": {
            "min_eigenvalue_seen": result.min_eigenvalue_seen,
            "abort_count": result.abort_count,
            "positivity_abort_threshold": result.config.positivity_abort_threshold,
        },
        "moments": moments,
    }
