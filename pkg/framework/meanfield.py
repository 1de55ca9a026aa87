"""Standard mean-field semi-classics: dp/dt = -lam <A>, d rho/dt = -(i/hbar)[lam q A, rho]."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from framework.errors import PreconditionError
from framework.models import InitialCondition, ModelParams
from framework.qmat import QubitDensity, adjoint, expectation


@dataclass(frozen=True)
class MeanFieldState:
    t: float
    p: float
    rho: QubitDensity


def _qubit_unitary(params: ModelParams, dt: float) -> np.ndarray:
    a_op = params.a_op
    phases = np.exp(-1j * params.lam * params.q * np.array([a_op.a0, a_op.a1]) * dt / params.hbar)
    return a_op.eigenbasis @ np.diag(phases) @ adjoint(a_op.eigenbasis)


def step_meanfield(state: MeanFieldState, params: ModelParams, dt: float) -> MeanFieldState:
    if not dt > 0.0:
        raise PreconditionError(f"dt must be > 0 (got {dt})")
    force = -params.lam * expectation(params.a_op, state.rho)
    u = _qubit_unitary(params, dt)
    rho = u @ state.rho.matrix @ adjoint(u)
    return MeanFieldState(
        t=state.t + dt,
        p=state.p + force * dt,
        rho=QubitDensity(0.5 * (rho + adjoint(rho)), checked=False),
    )


def run_meanfield(
    init: InitialCondition, params: ModelParams, t_final: float, dt: float
) -> list[MeanFieldState]:
    """Integrate from the centre p0 of the initial momentum distribution.

    Steps are sampled every dt; the last step is shortened so the run ends on t_final.
    """
    if not t_final > 0.0:
        raise PreconditionError(f"t_final must be > 0 (got {t_final})")
    if not dt > 0.0:
        raise PreconditionError(f"dt must be > 0 (got {dt})")
    n_full = int(np.floor(t_final / dt + 1e-9))
    state = MeanFieldState(t=0.0, p=init.p_dist.p0, rho=init.rho0)
    states = [state]
    for k in range(1, n_full + 1):
        state = step_meanfield(state, params, dt)
        state = MeanFieldState(t=k * dt, p=state.p, rho=state.rho)
        states.append(state)
    rest = t_final - n_full * dt
    if rest > 1e-12 * max(1.0, t_final):
        last = step_meanfield(state, params, rest)
        states.append(MeanFieldState(t=t_final, p=last.p, rho=last.rho))
    return states


def meanfield_momentum_variance(init: InitialCondition) -> float:
    """Every mean-field trajectory shares one force, so the momentum spread never changes."""
    return init.p_dist.variance
