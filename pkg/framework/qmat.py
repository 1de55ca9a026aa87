"""Exact 2x2 complex linear algebra for qubit observables and density matrices."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from framework.errors import PreconditionError

# Single table of tolerances; property tests tune against these names.
TOL_HERMITIAN = 1e-12
TOL_TRACE = 1e-10
TOL_PSD = 1e-9
TOL_EIGENBASIS = 1e-10
TOL_FIELD_HERMITIAN = 1e-10
TOL_NORMALIZATION = 1e-8
TOL_FIELD_PSD = 1e-6

ComplexMat2 = np.ndarray

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

for _m in (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z):
    _m.flags.writeable = False


def as_mat2(value: Any) -> ComplexMat2:
    """Return a read-only complex 2x2 copy of ``value``."""
    mat = np.array(value, dtype=complex)
    if mat.shape != (2, 2):
        raise PreconditionError(f"expected a 2x2 matrix, got shape {mat.shape}")
    mat.flags.writeable = False
    return mat


def adjoint(x: ComplexMat2) -> ComplexMat2:
    return np.conj(np.swapaxes(x, -1, -2))


def commutator(x: ComplexMat2, y: ComplexMat2) -> ComplexMat2:
    return x @ y - y @ x


def anticommutator(x: ComplexMat2, y: ComplexMat2) -> ComplexMat2:
    return x @ y + y @ x


def hermiticity_error(m: ComplexMat2) -> float:
    return float(np.max(np.abs(m - adjoint(m))))


def is_hermitian(m: ComplexMat2, tol: float = TOL_HERMITIAN) -> bool:
    scale = max(1.0, float(np.max(np.abs(m))))
    return hermiticity_error(m) <= tol * scale


def _require_hermitian(m: ComplexMat2, what: str) -> None:
    if not is_hermitian(m):
        raise PreconditionError(
            f"{what} must be Hermitian (max |M - M^dag| = {hermiticity_error(m):.3e})"
        )


def hermitian_eigenvalues(m: ComplexMat2) -> tuple[float, float]:
    """Closed-form (smaller, larger) eigenvalues of a Hermitian 2x2 matrix.

    Written through the half-gap ``sqrt(((m00 - m11)/2)^2 + |m01|^2)``, which is the
    characteristic-polynomial root ``(tr - sqrt(tr^2 - 4 det))/2`` without the
    cancellation of the raw discriminant.
    """
    a = float(m[0, 0].real)
    d = float(m[1, 1].real)
    mean = 0.5 * (a + d)
    half_gap = float(np.hypot(0.5 * (a - d), abs(m[0, 1])))
    return mean - half_gap, mean + half_gap


def min_eigenvalue(m: ComplexMat2) -> float:
    _require_hermitian(m, "min_eigenvalue input")
    return hermitian_eigenvalues(m)[0]


def batch_min_eigenvalue(values: np.ndarray) -> np.ndarray:
    """Smaller eigenvalue of every Hermitian 2x2 block in an (..., 2, 2) stack."""
    a = values[..., 0, 0].real
    d = values[..., 1, 1].real
    off = 0.5 * (values[..., 0, 1] + np.conj(values[..., 1, 0]))
    return 0.5 * (a + d) - np.hypot(0.5 * (a - d), np.abs(off))


def batch_trace_norm(values: np.ndarray) -> np.ndarray:
    """Sum of absolute eigenvalues of every Hermitian 2x2 block in a stack."""
    a = values[..., 0, 0].real
    d = values[..., 1, 1].real
    off = 0.5 * (values[..., 0, 1] + np.conj(values[..., 1, 0]))
    mean = 0.5 * (a + d)
    half_gap = np.hypot(0.5 * (a - d), np.abs(off))
    return np.abs(mean - half_gap) + np.abs(mean + half_gap)


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian qubit operator with its eigen-decomposition fixed at construction.

    Columns of ``eigenbasis`` are the eigenvectors for ``a0`` and ``a1``. A diagonal
    matrix keeps the computational basis and its diagonal order, so sigma_z has
    ``a0 = +1`` on |0> and ``a1 = -1`` on |1>. Off-diagonal matrices put the larger
    eigenvalue first.
    """

    matrix: ComplexMat2
    a0: float = field(init=False)
    a1: float = field(init=False)
    eigenbasis: ComplexMat2 = field(init=False)

    def __post_init__(self) -> None:
        mat = as_mat2(self.matrix)
        _require_hermitian(mat, "observable")
        object.__setattr__(self, "matrix", mat)

        alpha = float(mat[0, 0].real)
        delta = float(mat[1, 1].real)
        beta = complex(mat[0, 1])
        scale = max(1.0, float(np.max(np.abs(mat))))
        if abs(beta) <= 1e-14 * scale:
            a0, a1 = alpha, delta
            basis = np.eye(2, dtype=complex)
        else:
            a1, a0 = hermitian_eigenvalues(mat)
            v0 = np.array([beta, a0 - alpha], dtype=complex)
            v0 /= np.linalg.norm(v0)
            v1 = np.array([-np.conj(v0[1]), np.conj(v0[0])])
            basis = np.column_stack([v0, v1])
        basis.flags.writeable = False
        object.__setattr__(self, "a0", float(a0))
        object.__setattr__(self, "a1", float(a1))
        object.__setattr__(self, "eigenbasis", basis)

    @property
    def eigenvalues(self) -> tuple[float, float]:
        return self.a0, self.a1

    @property
    def gap(self) -> float:
        return self.a0 - self.a1

    @property
    def max_abs_eigenvalue(self) -> float:
        return max(abs(self.a0), abs(self.a1))

    def to_eigenbasis(self, values: np.ndarray) -> np.ndarray:
        """Rotate a matrix or a stack of matrices into the eigenbasis."""
        v = self.eigenbasis
        return adjoint(v) @ values @ v

    def from_eigenbasis(self, values: np.ndarray) -> np.ndarray:
        v = self.eigenbasis
        return v @ values @ adjoint(v)

    @classmethod
    def named(cls, name: str) -> Observable:
        table = {"sigma_x": SIGMA_X, "sigma_y": SIGMA_Y, "sigma_z": SIGMA_Z}
        try:
            return cls(table[name])
        except KeyError:
            raise PreconditionError(f"unknown observable name {name!r}") from None


@dataclass(frozen=True, eq=False)
class QubitDensity:
    """Qubit density matrix. ``checked=False`` skips validation for states that are
    deliberately monitored for negativity rather than assumed valid."""

    matrix: ComplexMat2
    checked: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self) -> None:
        mat = as_mat2(self.matrix)
        object.__setattr__(self, "matrix", mat)
        if not self.checked:
            return
        _require_hermitian(mat, "density matrix")
        tr = float(np.trace(mat).real)
        if abs(tr - 1.0) > TOL_TRACE:
            raise PreconditionError(f"density matrix trace must be 1 (got {tr:.12f})")
        lo = hermitian_eigenvalues(mat)[0]
        if lo < -TOL_PSD:
            raise PreconditionError(f"density matrix is not PSD (min eigenvalue {lo:.3e})")

    @classmethod
    def from_bloch(cls, x: float, y: float, z: float) -> QubitDensity:
        if x * x + y * y + z * z > 1.0 + TOL_PSD:
            raise PreconditionError("Bloch vector must lie inside the unit ball")
        return cls(0.5 * (IDENTITY + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z))

    @classmethod
    def pure(cls, amplitudes: Any) -> QubitDensity:
        psi = np.asarray(amplitudes, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, np.conj(psi)))

    @classmethod
    def polar(cls, theta: float, phi: float = 0.0) -> QubitDensity:
        """Pure state cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>."""
        return cls.pure([np.cos(theta / 2.0), np.exp(1j * phi) * np.sin(theta / 2.0)])

    @classmethod
    def named(cls, name: str) -> QubitDensity:
        s = 1.0 / np.sqrt(2.0)
        table: dict[str, Any] = {
            "zero": [1.0, 0.0],
            "one": [0.0, 1.0],
            "plus": [s, s],
            "minus": [s, -s],
            "plus_i": [s, 1j * s],
        }
        if name == "mixed":
            return cls(0.5 * IDENTITY)
        try:
            return cls.pure(table[name])
        except KeyError:
            raise PreconditionError(f"unknown state name {name!r}") from None


def expectation(a: Observable, rho: QubitDensity) -> float:
    value = complex(np.trace(a.matrix @ rho.matrix))
    scale = max(1.0, float(np.max(np.abs(a.matrix))))
    if abs(value.imag) > TOL_HERMITIAN * scale:
        raise PreconditionError(f"expectation has imaginary residue {value.imag:.3e}")
    return value.real


def trace_distance(r1: QubitDensity, r2: QubitDensity) -> float:
    diff = r1.matrix - r2.matrix
    lo, hi = hermitian_eigenvalues(0.5 * (diff + adjoint(diff)))
    return 0.5 * (abs(lo) + abs(hi))


def purity(rho: QubitDensity) -> float:
    return float(np.trace(rho.matrix @ rho.matrix).real)


def bloch_vector(m: ComplexMat2) -> tuple[float, float, float]:
    return (
        float(2.0 * m[0, 1].real),
        float(-2.0 * m[0, 1].imag),
        float((m[0, 0] - m[1, 1]).real),
    )
