"""Closed-form solutions used as independent test oracles.

Derived by hand, never by calling a solver. For sigma_z the components obey

    rho_aa(p, t) = rho_aa(0) G_t(p + lam a t)
    rho_01(p, t) = rho_01(0) G_t(p) exp(-2i lam q t / hbar - 4 gamma_Q t)

with G_t the initial Gaussian widened to variance sigma^2 + 2 gamma_C t. A general
observable is handled by the same formulas in its eigenbasis followed by conjugation.
"""
from __future__ import annotations

import numpy as np

from framework.errors import PreconditionError
from framework.models import (
    InitialCondition,
    ModelParams,
    MomentumGrid,
    WignerField,
    gaussian_density,
)
from framework.qmat import SIGMA_Z, ComplexMat2


def _require_sigma_z(params: ModelParams) -> None:
    if not np.allclose(params.a_op.matrix, SIGMA_Z, atol=1e-12):
        raise PreconditionError("oracle requires the observable sigma_z")


def _require_gaussian(init: InitialCondition) -> None:
    if init.p_dist.kind != "gaussian":
        raise PreconditionError("oracle requires a gaussian momentum distribution")


def _eigenbasis_solution(
    p: np.ndarray | float, t: float, init: InitialCondition, params: ModelParams
) -> np.ndarray:
    """Solution in the eigenbasis of A for arbitrary eigenvalues (a0, a1); shape (..., 2, 2)."""
    a_op = params.a_op
    a0, a1 = a_op.a0, a_op.a1
    r0 = a_op.to_eigenbasis(init.rho0.matrix)
    mean = init.p_dist.p0
    var = init.p_dist.variance + 2.0 * params.gamma_c * t
    p = np.asarray(p, dtype=float)
    lam = params.lam
    phase = np.exp(
        -1j * lam * params.q * (a0 - a1) * t / params.hbar - params.gamma_q * (a0 - a1) ** 2 * t
    )
    out = np.empty(p.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = r0[0, 0] * gaussian_density(p + lam * a0 * t, mean, var)
    out[..., 1, 1] = r0[1, 1] * gaussian_density(p + lam * a1 * t, mean, var)
    off = gaussian_density(p + lam * 0.5 * (a0 + a1) * t, mean, var)
    out[..., 0, 1] = r0[0, 1] * off * phase
    out[..., 1, 0] = r0[1, 0] * off * np.conj(phase)
    return out


def closed_solution(
    p: float, t: float, init: InitialCondition, params: ModelParams
) -> ComplexMat2:
    _require_sigma_z(params)
    _require_gaussian(init)
    return _eigenbasis_solution(p, t, init, params.replace(gamma_c=0.0, gamma_q=0.0))


def open_solution(p: float, t: float, init: InitialCondition, params: ModelParams) -> ComplexMat2:
    _require_sigma_z(params)
    _require_gaussian(init)
    return _eigenbasis_solution(p, t, init, params)


def conjugated_open_solution(
    p: np.ndarray | float, t: float, init: InitialCondition, params: ModelParams
) -> np.ndarray:
    """Open solution for any qubit observable via its eigenbasis unitary."""
    _require_gaussian(init)
    return params.a_op.from_eigenbasis(_eigenbasis_solution(p, t, init, params))


def open_field(
    grid: MomentumGrid, t: float, init: InitialCondition, params: ModelParams
) -> WignerField:
    values = conjugated_open_solution(grid.points, t, init, params)
    return WignerField(grid=grid, values=values, q=init.q0, t=t)


def drift_diffusion_marginal(
    p: np.ndarray | float,
    t: float,
    a: float,
    init: InitialCondition,
    params: ModelParams,
) -> np.ndarray:
    """Momentum density of a trajectory frozen in the eigenstate with eigenvalue ``a``."""
    var = init.p_dist.variance + 2.0 * params.gamma_c * t
    mean = init.p_dist.p0 - params.lam * a * t
    if var == 0.0:
        return np.where(np.asarray(p) == mean, np.inf, 0.0)
    return gaussian_density(p, mean, var)
