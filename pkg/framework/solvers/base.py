from __future__ import annotations

from typing import Protocol

import numpy as np
from scipy import fft

from framework.errors import PreconditionError
from framework.models import MomentumGrid, ModelParams, WignerField, momentum_marginal

GUARD_SIGMAS = 6.0


class FieldPropagator(Protocol):
    params: ModelParams
    grid: MomentumGrid

    def multipliers(self) -> np.ndarray:
        """Complex rates r_ab(u_k) with shape (2, 2, n) in the observable eigenbasis."""

    def apply(self, field: WignerField, t: float) -> WignerField:
        """Propagate ``field`` forward by ``t``."""


def advection_wavenumbers(grid: MomentumGrid) -> np.ndarray:
    """Wavenumbers for the first-derivative symbol; the unpaired Nyquist mode is zeroed
    so that r_ab(u) = conj(r_ba(-u)) holds on every stored mode."""
    u = np.array(grid.wavenumbers)
    u[grid.n // 2] = 0.0
    return u


def spectral_derivative(values: np.ndarray, grid: MomentumGrid, order: int = 1) -> np.ndarray:
    """d^order/dp^order of an (n, 2, 2) field along the momentum axis."""
    u = advection_wavenumbers(grid) if order % 2 else np.array(grid.wavenumbers)
    symbol = (1j * u) ** order
    return fft.ifft(symbol[:, None, None] * fft.fft(values, axis=0), axis=0)


def check_boundary(field: WignerField, params: ModelParams, t: float, gamma_c: float) -> None:
    """Reject propagation whose drift plus diffusion spread would wrap around the grid.

    Support estimate: mean +/- (|lambda| max|a| t + 6 sqrt(var + 2 gamma_C t)), with the
    mean and variance taken from |tr rho^W|.
    """
    if t < 0.0:
        raise PreconditionError(f"propagation time must be >= 0 (got {t})")
    grid = field.grid
    w = np.abs(momentum_marginal(field))
    total = float(np.sum(w))
    if total <= 0.0:
        return
    mean = float(np.sum(w * grid.points) / total)
    var = float(np.sum(w * (grid.points - mean) ** 2) / total)
    shift = abs(params.lam) * params.a_op.max_abs_eigenvalue * t
    reach = shift + GUARD_SIGMAS * float(np.sqrt(var + 2.0 * gamma_c * t))
    if mean - reach < grid.p_min or mean + reach > grid.p_max:
        raise PreconditionError(
            f"boundary guard violated: support [{mean - reach:.3f}, {mean + reach:.3f}] at "
            f"t={t} leaves the periodic grid [{grid.p_min}, {grid.p_max}] "
            f"(drift {shift:.3f}); enlarge the grid or shorten t"
        )
