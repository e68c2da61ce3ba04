import math

import numpy as np
import pytest
from pydantic import ValidationError

from demon.exceptions import DimensionError, NonHermitianError
from demon.qmatrix import (
    DensityMatrix,
    Unitary,
    adjoint,
    basis_index,
    hermitian_eigenvalues,
    jacobi_eigh,
    mat_exp_diag_phase,
    mat_mul,
    partial_trace,
    random_density_matrix,
    random_unitary,
    spin_operator,
    tensor,
    trace_distance,
)


def _random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


def test_jacobi_matches_numpy():
    rng = np.random.default_rng(7)
    for n in (2, 4):
        for _ in range(20):
            h = _random_hermitian(rng, n)
            values, vectors = jacobi_eigh(h)
            assert np.allclose(values, np.linalg.eigvalsh(h), atol=1e-12)
            assert np.allclose(h @ vectors, vectors * values, atol=1e-10)
            assert np.allclose(vectors.conj().T @ vectors, np.eye(n), atol=1e-12)


def test_eigenvalues_reject_non_hermitian():
    with pytest.raises(NonHermitianError):
        hermitian_eigenvalues([[0, 1], [0, 0]])


def test_diagonal_eigenvalues_are_sorted():
    assert list(hermitian_eigenvalues(np.diag([0.7, 0.1, 0.2, 0.0]))) == [0.0, 0.1, 0.2, 0.7]


def test_shape_errors():
    with pytest.raises(DimensionError):
        mat_mul(np.eye(2), np.eye(4))
    with pytest.raises(DimensionError):
        DensityMatrix(mat=[[1.0, 0.0]])


def test_density_matrix_validation():
    with pytest.raises(ValidationError):
        DensityMatrix(mat=np.diag([0.5, 0.4]))
    with pytest.raises(ValidationError):
        DensityMatrix(mat=np.diag([1.2, -0.2]))
    with pytest.raises(ValidationError):
        DensityMatrix(mat=np.eye(3) / 3)


def test_density_matrix_is_read_only():
    rho = DensityMatrix.from_populations([0.25, 0.75])
    with pytest.raises(ValueError):
        rho.mat[0, 0] = 1.0


def test_tensor_orders_spin_one_first():
    down = DensityMatrix.from_populations([1.0, 0.0])
    up = DensityMatrix.from_populations([0.0, 1.0])
    pair = down.tensor(up)
    assert pair.populations()[basis_index(0, 1)] == 1.0
    assert np.allclose(tensor(np.diag([1, 0]), np.eye(2)), spin_operator(np.diag([1, 0]), 1))


def test_partial_trace_of_product():
    rng = np.random.default_rng(3)
    a = random_density_matrix(rng, 2)
    b = random_density_matrix(rng, 2)
    pair = a.tensor(b)
    assert np.allclose(partial_trace(pair, 1).mat, a.mat, atol=1e-14)
    assert np.allclose(partial_trace(pair, 2).mat, b.mat, atol=1e-14)
    with pytest.raises(DimensionError):
        partial_trace(a, 1)


def test_trace_distance():
    down = DensityMatrix.from_populations([1.0, 0.0])
    up = DensityMatrix.from_populations([0.0, 1.0])
    plus = DensityMatrix.from_ket([1.0, 1.0])
    assert trace_distance(down.mat, down.mat) == 0.0
    assert down.distance(up) == pytest.approx(1.0)
    assert down.distance(plus) == pytest.approx(math.sqrt(0.5))


def test_evolution_keeps_spectrum():
    rng = np.random.default_rng(11)
    rho = random_density_matrix(rng, 4, rank=2)
    u = random_unitary(rng, 4)
    after = rho.evolve(u)
    assert np.allclose(after.eigenvalues(), rho.eigenvalues(), atol=1e-12)
    with pytest.raises(DimensionError):
        rho.evolve(Unitary.identity(2))


def test_unitary_validation():
    with pytest.raises(ValidationError):
        Unitary(mat=np.diag([1.0, 2.0]))
    u = mat_exp_diag_phase([1.0, -1.0], math.pi / 2)
    assert np.allclose(u.mat, np.diag([-1j, 1j]))
    assert np.allclose((u @ u.dagger).mat, np.eye(2))


def test_adjoint():
    a = np.array([[1.0, 2.0j], [3.0, 4.0 - 1.0j]])
    assert np.array_equal(adjoint(a), np.array([[1.0, 3.0], [-2.0j, 4.0 + 1.0j]]))
    with pytest.raises(DimensionError):
        adjoint(np.ones(3))


def test_tensor_is_associative():
    rng = np.random.default_rng(8)
    a, b, c = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3))
    assert np.allclose(tensor(tensor(a, b), c), tensor(a, tensor(b, c)), atol=1e-14)
