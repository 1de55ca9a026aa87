"""Exact propagation of the open partial-Wigner master equation

    d rho^W/dt = -(i/hbar)[lam q A, rho^W] + (lam/2){A, d rho^W/dp}
                 + gamma_C d^2 rho^W/dp^2 - gamma_Q [A, [A, rho^W]]

This is the ground-truth oracle for the mean-field and stochastic descriptions.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import fft

from framework.models import (
    DEFAULT_BOUNDARY_GUARD,
    InitialCondition,
    ModelParams,
    MomentumGrid,
    WignerField,
    default_grid,
    field_min_eigenvalue,
    pde_initial,
    product_field,
)
from framework.qmat import QubitDensity, anticommutator, commutator
from framework.solvers.base import advection_wavenumbers, check_boundary, spectral_derivative


@dataclass(frozen=True)
class OpenPropagator:
    params: ModelParams
    grid: MomentumGrid

    def multipliers(self) -> np.ndarray:
        p = self.params
        a = np.array([p.a_op.a0, p.a_op.a1])
        diff = a[:, None] - a[None, :]
        total = a[:, None] + a[None, :]
        u = advection_wavenumbers(self.grid)[None, None, :]
        u2 = np.asarray(self.grid.wavenumbers)[None, None, :] ** 2
        return (
            -1j * p.lam * p.q * diff[:, :, None] / p.hbar
            + 1j * u * p.lam * total[:, :, None] / 2.0
            - p.gamma_c * u2
            - p.gamma_q * (diff**2)[:, :, None]
        )

    def apply(self, field: WignerField, t: float) -> WignerField:
        check_boundary(field, self.params, t, gamma_c=self.params.gamma_c)
        if t == 0.0:
            return field.with_values(field.values, field.t)
        a_op = self.params.a_op
        rotated = a_op.to_eigenbasis(field.values)
        # rates are (2, 2, n); move the grid axis first to match the field layout
        factor = np.exp(t * np.moveaxis(self.multipliers(), -1, 0))
        evolved = fft.ifft(factor * fft.fft(rotated, axis=0), axis=0)
        return field.with_values(a_op.from_eigenbasis(evolved), field.t + t)


def propagate_open(field: WignerField, params: ModelParams, t: float) -> WignerField:
    return OpenPropagator(params, field.grid).apply(field, t)


def rhs_open(field: WignerField, params: ModelParams) -> np.ndarray:
    a = params.a_op.matrix
    h = params.lam * params.q * a
    vals = field.values
    d1 = spectral_derivative(vals, field.grid, order=1)
    d2 = spectral_derivative(vals, field.grid, order=2)
    return (
        -1j / params.hbar * commutator(h, vals)
        + 0.5 * params.lam * anticommutator(a, d1)
        + params.gamma_c * d2
        - params.gamma_q * commutator(a, commutator(a, vals))
    )


def propagate_qubit_marginal(rho: QubitDensity, params: ModelParams, t: float) -> QubitDensity:
    """Momentum-integrated master dynamics:

        d rho/dt = -(i/hbar)[lam q A, rho] - gamma_Q [A, [A, rho]]

    The anticommutator and diffusion terms are total p-derivatives and integrate out.
    """
    a_op = params.a_op
    r = a_op.to_eigenbasis(rho.matrix).copy()
    gap = a_op.gap
    decay = np.exp(
        -1j * params.lam * params.q * gap * t / params.hbar - params.gamma_q * gap**2 * t
    )
    r[0, 1] *= decay
    r[1, 0] *= np.conj(decay)
    return QubitDensity(a_op.from_eigenbasis(r), checked=False)


def positivity_scan(
    init: InitialCondition,
    params: ModelParams,
    times: Sequence[float],
    grid: MomentumGrid | None = None,
    boundary_guard: float = DEFAULT_BOUNDARY_GUARD,
) -> list[tuple[float, float]]:
    grid = grid or default_grid()
    start = product_field(pde_initial(init, grid), grid, boundary_guard)
    propagator = OpenPropagator(params, grid)
    return [(float(t), field_min_eigenvalue(propagator.apply(start, float(t)))[0]) for t in times]
