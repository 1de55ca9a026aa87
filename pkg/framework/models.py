"""Model parameters, momentum grid, partial Wigner fields and initial conditions."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
from scipy import fft
from scipy.special import ndtr

from framework.errors import PreconditionError
from framework.qmat import (
    TOL_NORMALIZATION,
    Observable,
    QubitDensity,
    adjoint,
    batch_min_eigenvalue,
    batch_trace_norm,
)

DEFAULT_P_MIN = -20.0
DEFAULT_P_MAX = 20.0
DEFAULT_GRID_N = 1024
DEFAULT_BOUNDARY_GUARD = 1e-12
DELTA_WIDTH_BINS = 4.0


@dataclass(frozen=True)
class ModelParams:
    """The toy-model tuple (lambda, hbar, gamma_C, gamma_Q, q, A).

    Units: ``lam`` momentum/time per unit of A, ``gamma_c`` momentum^2/time,
    ``gamma_q`` 1/time, ``q`` length. ``q`` never moves (large-mass limit).
    """

    lam: float = 1.0
    hbar: float = 1.0
    gamma_c: float = 0.0
    gamma_q: float = 0.0
    q: float = 0.0
    a_op: Observable = field(default_factory=lambda: Observable.named("sigma_z"))

    def __post_init__(self) -> None:
        if not self.hbar > 0.0:
            raise PreconditionError(f"hbar must be > 0 (got {self.hbar})")
        if self.gamma_c < 0.0:
            raise PreconditionError(f"gamma_c must be >= 0 (got {self.gamma_c})")
        if self.gamma_q < 0.0:
            raise PreconditionError(f"gamma_q must be >= 0 (got {self.gamma_q})")

    def replace(self, **changes: float) -> ModelParams:
        values = {
            "lam": self.lam,
            "hbar": self.hbar,
            "gamma_c": self.gamma_c,
            "gamma_q": self.gamma_q,
            "q": self.q,
            "a_op": self.a_op,
        }
        values.update(changes)
        return ModelParams(**values)  # type: ignore[arg-type]

    def echo(self) -> dict[str, object]:
        return {
            "lam": self.lam,
            "hbar": self.hbar,
            "gamma_c": self.gamma_c,
            "gamma_q": self.gamma_q,
            "q": self.q,
            "a0": self.a_op.a0,
            "a1": self.a_op.a1,
            "observable_re": self.a_op.matrix.real.tolist(),
            "observable_im": self.a_op.matrix.imag.tolist(),
        }


@dataclass(frozen=True)
class MomentumGrid:
    p_min: float = DEFAULT_P_MIN
    p_max: float = DEFAULT_P_MAX
    n: int = DEFAULT_GRID_N

    def __post_init__(self) -> None:
        if self.n < 64 or self.n & (self.n - 1):
            raise PreconditionError(f"grid size must be a power of two >= 64 (got {self.n})")
        if not self.p_max > self.p_min:
            raise PreconditionError("grid requires p_max > p_min")

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / self.n

    @cached_property
    def points(self) -> np.ndarray:
        pts = self.p_min + self.dp * np.arange(self.n)
        pts.flags.writeable = False
        return pts

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Periodic spectral wavenumbers in FFT order, u_0 = 0."""
        u = 2.0 * np.pi * fft.fftfreq(self.n, d=self.dp)
        u.flags.writeable = False
        return u

    def bin_index(self, p: np.ndarray | float) -> np.ndarray:
        """Index of the grid point whose centred bin holds ``p``, wrapped periodically."""
        idx = np.floor((np.asarray(p, dtype=float) - self.p_min) / self.dp + 0.5).astype(np.int64)
        return np.mod(idx, self.n)


@dataclass(frozen=True, eq=False)
class WignerField:
    """Operator-valued momentum field rho^W(p) at fixed q: one 2x2 block per grid point."""

    grid: MomentumGrid
    values: np.ndarray
    q: float = 0.0
    t: float = 0.0

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=complex)
        if vals.shape != (self.grid.n, 2, 2):
            raise PreconditionError(
                f"field values must have shape ({self.grid.n}, 2, 2), got {vals.shape}"
            )
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def normalization(self) -> float:
        return float(np.sum(np.trace(self.values, axis1=1, axis2=2).real) * self.grid.dp)

    def hermiticity_error(self) -> float:
        """Largest |M - M^dag| over the grid, relative to the field's largest entry."""
        scale = max(float(np.max(np.abs(self.values))), 1e-300)
        return float(np.max(np.abs(self.values - adjoint(self.values)))) / scale

    def with_values(self, values: np.ndarray, t: float) -> WignerField:
        return WignerField(grid=self.grid, values=values, q=self.q, t=t)


@dataclass(frozen=True)
class PDist:
    kind: Literal["delta", "gaussian"] = "gaussian"
    p0: float = 0.0
    sigma_p: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("delta", "gaussian"):
            raise PreconditionError(f"unknown p distribution {self.kind!r}")
        if self.kind == "gaussian" and not self.sigma_p > 0.0:
            raise PreconditionError(f"gaussian sigma_p must be > 0 (got {self.sigma_p})")

    @property
    def variance(self) -> float:
        return self.sigma_p**2 if self.kind == "gaussian" else 0.0

    @classmethod
    def delta(cls, p0: float = 0.0) -> PDist:
        return cls(kind="delta", p0=p0, sigma_p=0.0)

    @classmethod
    def gaussian(cls, p0: float = 0.0, sigma_p: float = 1.0) -> PDist:
        return cls(kind="gaussian", p0=p0, sigma_p=sigma_p)


@dataclass(frozen=True)
class InitialCondition:
    rho0: QubitDensity
    p_dist: PDist = field(default_factory=PDist)
    q0: float = 0.0


@dataclass(frozen=True)
class TrajectoryState:
    t: float
    p: float
    rho: QubitDensity


def gaussian_density(p: np.ndarray | float, mean: float, variance: float) -> np.ndarray:
    return np.exp(-((np.asarray(p) - mean) ** 2) / (2.0 * variance)) / np.sqrt(
        2.0 * np.pi * variance
    )


def outside_mass(grid: MomentumGrid, mean: float, sigma: float) -> float:
    return float(ndtr((grid.p_min - mean) / sigma) + ndtr(-(grid.p_max - mean) / sigma))


def pde_initial(init: InitialCondition, grid: MomentumGrid) -> InitialCondition:
    """Swap a delta momentum distribution for the band-limited Gaussian of width 4*dp."""
    if init.p_dist.kind == "gaussian":
        return init
    return InitialCondition(
        rho0=init.rho0,
        p_dist=PDist.gaussian(init.p_dist.p0, DELTA_WIDTH_BINS * grid.dp),
        q0=init.q0,
    )


def product_field(
    init: InitialCondition,
    grid: MomentumGrid,
    boundary_guard: float = DEFAULT_BOUNDARY_GUARD,
) -> WignerField:
    dist = init.p_dist
    if dist.kind == "delta":
        weights = np.zeros(grid.n)
        weights[grid.bin_index(dist.p0)] = 1.0 / grid.dp
    else:
        mass = outside_mass(grid, dist.p0, dist.sigma_p)
        if mass >= boundary_guard:
            raise PreconditionError(
                f"grid [{grid.p_min}, {grid.p_max}] too small for gaussian"
                f" ({dist.p0}, {dist.sigma_p}): outside mass {mass:.3e} >= "
                f"guard {boundary_guard:.0e}"
            )
        weights = gaussian_density(grid.points, dist.p0, dist.variance)
        # quadrature correction so the discrete normalization is exact
        weights = weights / (np.sum(weights) * grid.dp)
    values = weights[:, None, None] * init.rho0.matrix[None, :, :]
    return WignerField(grid=grid, values=values, q=init.q0, t=0.0)


def qubit_marginal(field: WignerField) -> QubitDensity:
    total = np.sum(field.values, axis=0) * field.grid.dp
    tr = float(np.trace(total).real)
    if abs(tr - 1.0) > TOL_NORMALIZATION:
        raise PreconditionError(f"field is not normalized (integral of trace = {tr:.12f})")
    total = 0.5 * (total + adjoint(total)) / tr
    return QubitDensity(total, checked=False)


def momentum_marginal(field: WignerField) -> np.ndarray:
    return np.trace(field.values, axis1=1, axis2=2).real.copy()


def momentum_moments(field: WignerField) -> tuple[float, float]:
    w = momentum_marginal(field)
    dp = field.grid.dp
    total = float(np.sum(w) * dp)
    mean = float(np.sum(w * field.grid.points) * dp / total)
    var = float(np.sum(w * (field.grid.points - mean) ** 2) * dp / total)
    return mean, var


def field_min_eigenvalue(field: WignerField) -> tuple[float, float]:
    """Minimum eigenvalue over the grid and the momentum where it sits.

    np.argmin returns the first occurrence, i.e. ties resolve to the smallest p.
    """
    mins = batch_min_eigenvalue(field.values)
    j = int(np.argmin(mins))
    return float(mins[j]), float(field.grid.points[j])


def field_l1_distance(a: WignerField, b: WignerField) -> float:
    if a.grid != b.grid:
        raise PreconditionError("fields live on different grids")
    diff = a.values - b.values
    diff = 0.5 * (diff + adjoint(diff))
    return float(np.sum(batch_trace_norm(diff)) * a.grid.dp)


def default_grid() -> MomentumGrid:
    return MomentumGrid()
