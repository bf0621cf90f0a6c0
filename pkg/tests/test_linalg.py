import numpy as np
import pytest
import scipy.sparse as sp

from qri.errors import Breakdown, NoConvergence, SingularMatrix, ZeroVector
from qri.linalg import (
    LUSolver,
    OrthonormalBasis,
    basis_from_columns,
    dense_eig,
    dense_lu_solve,
    mgs_append,
    sin_angle_vectors,
    smallest_singular_vector,
    spmv,
)
from conftest import rand_complex


def test_spmv_matches_dense(rng):
    A = sp.random(40, 40, density=0.2, random_state=7, format="csr")
    A = sp.csr_array(A + 1j * sp.random(40, 40, density=0.2, random_state=8, format="csr"))
    x = rand_complex(rng, 40)
    assert np.allclose(spmv(A, x), A.toarray() @ x, atol=1e-14)


def test_spmv_shape_mismatch(rng):
    A = sp.csr_array(np.eye(4))
    with pytest.raises(ValueError):
        spmv(A, np.ones(5))


def test_lu_round_trip(rng):
    A = rand_complex(rng, 30 * 30).reshape(30, 30) + 30.0 * np.eye(30)
    x_true = rand_complex(rng, 30)
    x = dense_lu_solve(A, A @ x_true)
    assert np.linalg.norm(x - x_true) <= 1e-12 * np.linalg.norm(x_true)


def test_lu_solver_reuse(rng):
    A = rand_complex(rng, 100).reshape(10, 10) + 10.0 * np.eye(10)
    lu = LUSolver(A)
    for _ in range(3):
        b = rand_complex(rng, 10)
        assert np.linalg.norm(A @ lu.solve(b) - b) <= 1e-12 * np.linalg.norm(b)


def test_lu_singular_raises():
    A = np.zeros((3, 3), dtype=complex)
    A[0, 0] = 1.0
    with pytest.raises(SingularMatrix):
        LUSolver(A)


def test_lu_exactly_singular_raises():
    # elimination produces an exact zero pivot; near-singular matrices
    # with rounding-level pivots are deliberately let through (the
    # shift-invert path relies on factoring nearly singular matrices)
    A = np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
    with pytest.raises(SingularMatrix):
        LUSolver(A)


def test_dense_eig_companion_roots():
    # construct-then-recover: eigenvalues of a companion matrix are the
    # polynomial roots, here z^6 with roots 1..6
    roots = np.arange(1.0, 7.0)
    C = np.zeros((6, 6), dtype=complex)
    C[1:, :-1] = np.eye(5)
    C[:, -1] = -np.poly(roots)[1:][::-1]
    lam, V = dense_eig(C)
    assert np.allclose(sorted(lam.real), roots, atol=1e-8)
    assert np.allclose(np.linalg.norm(V, axis=0), 1.0, atol=1e-13)
    for i in range(6):
        assert np.linalg.norm(C @ V[:, i] - lam[i] * V[:, i]) <= 1e-8


def test_smallest_singular_vector_recovers(rng):
    # build a tall matrix with a known, well separated smallest direction
    n, k = 20, 6
    U, _ = np.linalg.qr(rand_complex(rng, n * k).reshape(n, k))
    Vh, _ = np.linalg.qr(rand_complex(rng, k * k).reshape(k, k))
    s = np.array([5.0, 4.0, 3.0, 2.0, 1.0, 1e-6])
    A = U @ np.diag(s) @ Vh.conj().T
    v = smallest_singular_vector(A)
    target = Vh[:, -1]
    assert sin_angle_vectors(v, target) <= 1e-9
    assert abs(np.linalg.norm(v) - 1.0) <= 1e-13


def test_basis_append_and_defect(rng):
    basis = OrthonormalBasis(50)
    for _ in range(30):
        basis.append(rand_complex(rng, 50))
    assert basis.k == 30
    assert basis.orthonormality_defect() <= 1e-13
    assert basis.matrix.shape == (50, 30)


def test_basis_many_appends_with_breakdowns(rng):
    # dim 100, 200 candidate vectors: once the basis is full every
    # further candidate must break down
    n = 100
    basis = OrthonormalBasis(n)
    breakdowns = 0
    for _ in range(200):
        try:
            basis.append(rand_complex(rng, n))
        except Breakdown:
            breakdowns += 1
    assert basis.k == n
    assert breakdowns == 100
    assert basis.orthonormality_defect() <= 1e-12


def test_basis_rejects_dependent_vector(rng):
    basis = OrthonormalBasis(10)
    v = rand_complex(rng, 10)
    basis.append(v)
    with pytest.raises(Breakdown):
        basis.append(1e-17 * v)


def test_basis_zero_vector(rng):
    basis = OrthonormalBasis(5)
    with pytest.raises(ZeroVector):
        basis.append(np.zeros(5, dtype=complex))


def test_basis_project_out(rng):
    basis = OrthonormalBasis(20)
    for _ in range(5):
        basis.append(rand_complex(rng, 20))
    x = rand_complex(rng, 20)
    r = basis.project_out(x)
    assert np.max(np.abs(basis.matrix.conj().T @ r)) <= 1e-13 * np.linalg.norm(x)


def test_mgs_append_functional(rng):
    basis = OrthonormalBasis(15)
    u = rand_complex(rng, 15)
    v = mgs_append(basis, u)
    assert basis.k == 1
    assert abs(np.linalg.norm(v) - 1.0) <= 1e-13


def test_basis_from_columns(rng):
    cols = [rand_complex(rng, 12) for _ in range(4)]
    basis = basis_from_columns(cols)
    assert basis.k == 4
    assert basis.orthonormality_defect() <= 1e-13


def test_sin_angle_vectors_phase_invariant(rng):
    a = rand_complex(rng, 25)
    b = rand_complex(rng, 25)
    s0 = sin_angle_vectors(a, b)
    s1 = sin_angle_vectors(a * np.exp(1j * 0.7), b * 3.0)
    assert abs(s0 - s1) <= 1e-13


def test_sin_angle_vectors_extremes(rng):
    a = rand_complex(rng, 8)
    assert sin_angle_vectors(a, 2j * a) <= 1e-13
    e1 = np.zeros(8, dtype=complex)
    e2 = np.zeros(8, dtype=complex)
    e1[0] = 1.0
    e2[1] = 1.0
    assert abs(sin_angle_vectors(e1, e2) - 1.0) <= 1e-13
