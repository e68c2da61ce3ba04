"""Dense complex linear algebra for one- and two-spin Hilbert spaces.

Matrices are ``numpy`` complex128 arrays. The basis of the two-spin space is
|↓↓⟩, |↓↑⟩, |↑↓⟩, |↑↑⟩, spin 1 being the most significant factor of every
tensor product.
"""
import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from demon.configuration import CONFIG, Tolerance, tolerance
from demon.exceptions import DemonError, DimensionError, NonHermitianError

logger = logging.getLogger(__name__)

SUPPORTED_DIMS = (2, 4)

I2 = np.eye(2, dtype=complex)


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a finite square complex matrix."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DemonError("matrix has non-finite entries")
    return m


def mat_mul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def tensor(a, b) -> np.ndarray:
    """Kronecker product with ``a`` as the most significant factor."""
    return np.kron(as_matrix(a), as_matrix(b))


def trace(a) -> complex:
    return complex(np.trace(as_matrix(a)))


def expectation(op, rho) -> float:
    """Return the real part of tr(op·ρ)."""
    return float(np.real(trace(mat_mul(op, rho))))


def _off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def jacobi_eigh(a, max_sweeps: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Diagonalise a Hermitian matrix by cyclic complex Jacobi rotations.

    Each rotation first turns the pivot element real with a diagonal phase,
    then annihilates it with a real plane rotation.

    Returns:
        Eigenvalues in ascending order and the matching eigenvectors as columns.
    """
    a = as_matrix(a)
    if np.max(np.abs(a - a.conj().T)) > tolerance(Tolerance.ITERATIVE):
        raise NonHermitianError("matrix is not Hermitian")
    if max_sweeps is None:
        max_sweeps = CONFIG["jacobi"]["max_sweeps"]

    n = a.shape[0]
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    limit = tolerance(Tolerance.JACOBI) * max(1.0, float(np.linalg.norm(a)))

    sweeps = 0
    while _off_diagonal_norm(a) > limit:
        if sweeps == max_sweeps:
            logger.warning(f"Jacobi stopped after {sweeps} sweeps, off-diagonal norm {_off_diagonal_norm(a):.3e}")
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= limit / n:
                    continue
                phase = np.eye(n, dtype=complex)
                phase[q, q] = np.exp(-1j * np.angle(apq))
                # NR rotation on the now-real pivot
                theta = (a[q, q].real - a[p, p].real) / (2.0 * abs(apq))
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n, dtype=complex)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                g = phase @ rot
                a = g.conj().T @ a @ g
                a[p, q] = a[q, p] = 0.0
                v = v @ g
        sweeps += 1

    values = np.real(np.diag(a))
    order = np.argsort(values)
    return values[order], v[:, order]


def hermitian_eigenvalues(a) -> np.ndarray:
    """Return the ascending eigenvalues of a Hermitian matrix."""
    m = as_matrix(a)
    if np.max(np.abs(m - m.conj().T)) > tolerance(Tolerance.ITERATIVE):
        raise NonHermitianError("matrix is not Hermitian")
    if _off_diagonal_norm(m) == 0.0:
        return np.sort(np.real(np.diag(m)))
    values, _ = jacobi_eigh(m)
    return values


def trace_distance(a, b) -> float:
    """Half the trace norm of ``a − b``."""
    return 0.5 * float(np.sum(np.abs(hermitian_eigenvalues(as_matrix(a) - as_matrix(b)))))


class DensityMatrix(BaseModel):
    """Hermitian, unit-trace, positive state of one or two spins."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    mat: np.ndarray

    @field_validator("mat", mode="before")
    @classmethod
    def _check_state(cls, v):
        m = as_matrix(v).copy()
        tol = tolerance(Tolerance.ALGEBRAIC)
        if m.shape[0] not in SUPPORTED_DIMS:
            raise ValueError(f"density matrix must be 2x2 or 4x4, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > tol:
            raise ValueError(f"density matrix trace is {float(np.trace(m).real)!r}, not 1")
        if hermitian_eigenvalues(m)[0] < -tol:
            raise ValueError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        return m

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def from_ket(cls, ket: Sequence[complex]) -> "DensityMatrix":
        psi = np.asarray(ket, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(mat=np.outer(psi, psi.conj()))

    @classmethod
    def from_populations(cls, populations: Sequence[float]) -> "DensityMatrix":
        return cls(mat=np.diag(np.asarray(populations, dtype=float)))

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.mat)).copy()

    def eigenvalues(self) -> np.ndarray:
        return hermitian_eigenvalues(self.mat)

    def tensor(self, other: "DensityMatrix") -> "DensityMatrix":
        return DensityMatrix(mat=tensor(self.mat, other.mat))

    def evolve(self, u: "Unitary") -> "DensityMatrix":
        """Return U·ρ·U†."""
        if u.dim != self.dim:
            raise DimensionError(f"unitary of dim {u.dim} on state of dim {self.dim}")
        return DensityMatrix(mat=u.mat @ self.mat @ u.mat.conj().T)

    def distance(self, other: "DensityMatrix") -> float:
        return trace_distance(self.mat, other.mat)


class Unitary(BaseModel):
    """Pulse or evolution operator on one or two spins."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    mat: np.ndarray

    @field_validator("mat", mode="before")
    @classmethod
    def _check_unitary(cls, v):
        m = as_matrix(v).copy()
        if m.shape[0] not in SUPPORTED_DIMS:
            raise ValueError(f"unitary must be 2x2 or 4x4, got {m.shape}")
        if np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0]))) > tolerance(Tolerance.ITERATIVE):
            raise ValueError("matrix is not unitary")
        m.setflags(write=False)
        return m

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def dagger(self) -> "Unitary":
        return Unitary(mat=adjoint(self.mat))

    @classmethod
    def identity(cls, dim: int = 4) -> "Unitary":
        return cls(mat=np.eye(dim, dtype=complex))

    def __matmul__(self, other: "Unitary") -> "Unitary":
        return Unitary(mat=mat_mul(self.mat, other.mat))


def mat_exp_diag_phase(h_diag: Sequence[float], t: float) -> Unitary:
    """Return the diagonal propagator exp(−i·diag(h)·t)."""
    h = np.asarray(h_diag, dtype=float)
    return Unitary(mat=np.diag(np.exp(-1j * h * t)))


def partial_trace(rho: DensityMatrix, keep: int) -> DensityMatrix:
    """Reduce a two-spin state to spin ``keep`` (1 or 2)."""
    if rho.dim != 4:
        raise DimensionError("partial trace needs a two-spin state")
    if keep not in (1, 2):
        raise DimensionError(f"bad spin index {keep}")
    r = rho.mat.reshape(2, 2, 2, 2)
    if keep == 1:
        return DensityMatrix(mat=np.einsum("ijkj->ik", r))
    return DensityMatrix(mat=np.einsum("ijik->jk", r))


def random_density_matrix(rng: np.random.Generator, dim: int = 4, rank: Optional[int] = None) -> DensityMatrix:
    """Draw ρ = G·G†/tr from a complex Ginibre matrix."""
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return DensityMatrix(mat=m / np.trace(m).real)


def random_unitary(rng: np.random.Generator, dim: int = 4) -> Unitary:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return Unitary(mat=q * (d / np.abs(d)))


def spin_operator(single: np.ndarray, spin: int) -> np.ndarray:
    """Embed a 2×2 operator on ``spin`` into the two-spin space."""
    if spin == 1:
        return tensor(single, I2)
    if spin == 2:
        return tensor(I2, single)
    raise DimensionError(f"bad spin index {spin}")


def basis_index(s1: int, s2: int) -> int:
    """Index of |s1 s2⟩ with 0 = ↓ and 1 = ↑."""
    return 2 * s1 + s2
