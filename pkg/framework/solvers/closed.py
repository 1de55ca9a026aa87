"""Exact propagation of the closed partial-Wigner equation

    d rho^W/dt = -(i/hbar)[lam q A, rho^W] + (lam/2){A, d rho^W/dp}

In the eigenbasis of A every matrix component is a constant-coefficient transport
equation, so one spectral exponential per component solves it exactly.
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
from framework.qmat import anticommutator, commutator
from framework.solvers.base import advection_wavenumbers, check_boundary, spectral_derivative


@dataclass(frozen=True)
class ClosedPropagator:
    params: ModelParams
    grid: MomentumGrid

    def multipliers(self) -> np.ndarray:
        p = self.params
        u = advection_wavenumbers(self.grid)
        eig = (p.a_op.a0, p.a_op.a1)
        rates = np.empty((2, 2, self.grid.n), dtype=complex)
        for i, a in enumerate(eig):
            for j, b in enumerate(eig):
                rates[i, j] = -1j * p.lam * p.q * (a - b) / p.hbar + 1j * u * p.lam * (a + b) / 2.0
        return rates

    def apply(self, field: WignerField, t: float) -> WignerField:
        check_boundary(field, self.params, t, gamma_c=0.0)
        if t == 0.0:
            return field.with_values(field.values, field.t)
        a_op = self.params.a_op
        rotated = a_op.to_eigenbasis(field.values)
        rates = self.multipliers()
        out = np.empty_like(rotated)
        for i in range(2):
            for j in range(2):
                spectrum = fft.fft(rotated[:, i, j])
                out[:, i, j] = fft.ifft(spectrum * np.exp(t * rates[i, j]))
        return field.with_values(a_op.from_eigenbasis(out), field.t + t)


def propagate_closed(field: WignerField, params: ModelParams, t: float) -> WignerField:
    return ClosedPropagator(params, field.grid).apply(field, t)


def rhs_closed(field: WignerField, params: ModelParams) -> np.ndarray:
    """Right side of the closed equation evaluated literally in the computational basis."""
    a = params.a_op.matrix
    h = params.lam * params.q * a
    dvals = spectral_derivative(field.values, field.grid)
    return -1j / params.hbar * commutator(h, field.values) + 0.5 * params.lam * anticommutator(
        a, dvals
    )


def negativity_onset(
    init: InitialCondition,
    params: ModelParams,
    times: Sequence[float],
    grid: MomentumGrid | None = None,
    boundary_guard: float = DEFAULT_BOUNDARY_GUARD,
) -> list[tuple[float, float, float]]:
    """Field-negativity witness of the closed dynamics at each requested time."""
    grid = grid or default_grid()
    start = product_field(pde_initial(init, grid), grid, boundary_guard)
    propagator = ClosedPropagator(params, grid)
    rows: list[tuple[float, float, float]] = []
    for t in times:
        value, p_at = field_min_eigenvalue(propagator.apply(start, float(t)))
        rows.append((float(t), value, p_at))
    return rows
