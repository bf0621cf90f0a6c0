"""Quadratic eigenvalue problem container and first-order companion form.

A problem is the triple ``(M, C, K)`` defining ``Q(lam) = lam^2 M + lam C + K``;
eigenpairs satisfy ``Q(lam) x = 0``.  When ``M`` is singular some of the 2n
eigenvalues are infinite; those are always carried with an explicit flag,
never as overflow values.

The companion form used everywhere is

    A = [[-C, -K],   B = [[M, 0],
         [ I,  0]]        [0, I]]

with pencil eigenvectors ``[lam*x; x]`` for finite ``lam``, so right
eigenvectors of the quadratic problem sit in the lower block.
"""

import os
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import SingularMatrix
from .linalg import LUSolver, spmv

DEFAULT_DENSE_CAP = 2000


def dense_cap():
    """Largest matrix order the package will densify.

    Overridable through the ``QRI_DENSE_CAP`` environment variable; the
    guard exists so that desk-scale verification paths are not silently
    applied to problems that are too large for them.
    """
    value = os.environ.get("QRI_DENSE_CAP", "")
    if value:
        return int(value)
    return DEFAULT_DENSE_CAP


def _as_canonical_csr(A):
    if sp.issparse(A):
        A = A.tocsr()
    else:
        A = sp.csr_array(np.asarray(A))
    A = sp.csr_array(A).astype(np.complex128)
    A.sum_duplicates()
    A.sort_indices()
    A.eliminate_zeros()
    if A.data.size and not np.isfinite(A.data).all():
        raise ValueError("matrix entries must be finite")
    return A


def _norm1(A):
    # max column sum of moduli
    if A.nnz == 0:
        return 0.0
    return float(np.abs(A).sum(axis=0).max())


class QepProblem:
    """Sparse matrices of ``Q(lam) = lam^2 M + lam C + K``.

    Matrices are stored in canonical CSR form (sorted column indices, no
    duplicates or explicit zeros) with complex128 entries, so identical
    inputs give bitwise-identical products.
    """

    def __init__(self, M, C, K, name=""):
        self.M = _as_canonical_csr(M)
        self.C = _as_canonical_csr(C)
        self.K = _as_canonical_csr(K)
        self.name = name
        shapes = {self.M.shape, self.C.shape, self.K.shape}
        if len(shapes) != 1:
            raise ValueError(f"M, C, K must share one shape, got {shapes}")
        n_rows, n_cols = self.M.shape
        if n_rows != n_cols:
            raise ValueError("matrices must be square")
        self.n = n_rows
        self._norms = None

    @property
    def norms1(self):
        """1-norms ``(|M|_1, |C|_1, |K|_1)``, computed once."""
        if self._norms is None:
            self._norms = (_norm1(self.M), _norm1(self.C), _norm1(self.K))
        return self._norms

    def densify(self):
        return self.M.toarray(), self.C.toarray(), self.K.toarray()

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<QepProblem{label} n={self.n}>"


@dataclass
class Eigentriplet:
    """One computed eigenvalue with its right (and optionally left) vector.

    ``lam`` is ``None`` exactly when ``infinite`` is set.  ``x`` has unit
    2-norm.  When ``y`` is present its scaling is chosen by the producer
    (the dense oracle scales left vectors so that the rank-one resolvent
    expansion holds with unit right vectors).
    """

    lam: complex | None
    x: np.ndarray
    y: np.ndarray | None = None
    infinite: bool = False


def q_apply(p, lam, x):
    """``Q(lam) x`` via three sparse products."""
    x = np.asarray(x, dtype=complex)
    return lam * lam * spmv(p.M, x) + lam * spmv(p.C, x) + spmv(p.K, x)


def q_prime_apply(p, lam, x):
    """``Q'(lam) x = (2 lam M + C) x``."""
    x = np.asarray(x, dtype=complex)
    return 2.0 * lam * spmv(p.M, x) + spmv(p.C, x)


def shifted_matrix(p, sigma):
    """Assemble ``Q(sigma) = sigma^2 M + sigma C + K`` as canonical CSR."""
    S = (sigma * sigma) * p.M + sigma * p.C + p.K
    S = sp.csr_array(S)
    S.sum_duplicates()
    S.sort_indices()
    return S


def residual_denominator(p, omega):
    nm, nc, nk = p.norms1
    return abs(omega) ** 2 * nm + abs(omega) * nc + nk


def relative_residual(p, omega, xtilde):
    """Normalized residual of an approximate pair ``(omega, xtilde)``.

    ``norm(Q(omega) xtilde) / (|omega|^2 |M|_1 + |omega| |C|_1 + |K|_1)``,
    assuming ``xtilde`` has unit norm.  The denominator makes the value a
    backward-error-style quantity that is comparable across shifts.
    """
    r = q_apply(p, omega, xtilde)
    return float(np.linalg.norm(r) / residual_denominator(p, omega))


@dataclass
class LinearizedPencil:
    """Companion pencil ``(A, B)`` of a quadratic problem, kept sparse."""

    A: sp.csr_array
    B: sp.csr_array
    n: int


def linearize(p):
    """Companion linearization of ``p`` with sparse 2n x 2n blocks."""
    n = p.n
    eye = sp.identity(n, dtype=complex, format="csr")
    A = sp.block_array([[-p.C, -p.K], [eye, None]], format="csr")
    B = sp.block_array([[p.M, None], [None, eye]], format="csr")
    A.sort_indices()
    B.sort_indices()
    return LinearizedPencil(A=sp.csr_array(A), B=sp.csr_array(B), n=n)


def pencil_dense(Md, Cd, Kd):
    """Dense companion pencil from dense coefficient blocks."""
    n = Md.shape[0]
    A = np.zeros((2 * n, 2 * n), dtype=complex)
    B = np.zeros((2 * n, 2 * n), dtype=complex)
    A[:n, :n] = -Cd
    A[:n, n:] = -Kd
    A[n:, :n] = np.eye(n)
    B[:n, :n] = Md
    B[n:, n:] = np.eye(n)
    return A, B


def shift_invert_dense(A, B, sigma):
    """``S = (A - sigma B)^{-1} B`` for a dense pencil.

    Returns ``(S, fsolve)`` where ``fsolve`` is the LU solver for
    ``A - sigma B`` (reused by callers that need further solves with the
    same shifted pencil).  Raises :class:`SingularMatrix` when ``sigma``
    is an eigenvalue of the pencil.
    """
    F = A - sigma * B
    fsolve = LUSolver(F)
    S = fsolve.solve(B)
    return S, fsolve


def linearize_shift_invert(p, sigma):
    """Dense ``S = (A - sigma B)^{-1} B`` for the companion pencil of ``p``.

    Eigenvalues ``theta`` of ``S`` map to quadratic eigenvalues through
    ``lam = sigma + 1/theta``; ``theta = 0`` corresponds to an infinite
    eigenvalue.  Only available while ``2 n`` stays within
    :func:`dense_cap`.
    """
    if 2 * p.n > dense_cap():
        raise ValueError(
            f"2n = {2 * p.n} exceeds the dense cap {dense_cap()}; "
            "set QRI_DENSE_CAP to override"
        )
    A, B = pencil_dense(*p.densify())
    try:
        S, _ = shift_invert_dense(A, B, sigma)
    except SingularMatrix as exc:
        raise SingularMatrix(
            f"sigma = {sigma} is an eigenvalue of the companion pencil"
        ) from exc
    return S


_SUFFIXES = ("_M.mtx", "_C.mtx", "_K.mtx")


def write_problem(prefix, p):
    """Write ``M, C, K`` as Matrix Market coordinate files (complex
    general), one file per matrix: ``<prefix>_M.mtx`` etc."""
    for suffix, matrix in zip(_SUFFIXES, (p.M, p.C, p.K)):
        scipy.io.mmwrite(
            prefix + suffix, sp.coo_array(matrix), field="complex", precision=17
        )
    return [prefix + s for s in _SUFFIXES]


def read_problem(prefix, name=""):
    """Read a problem written by :func:`write_problem`."""
    mats = []
    for suffix in _SUFFIXES:
        path = prefix + suffix
        if not os.path.exists(path):
            raise FileNotFoundError(f"missing matrix file: {path}")
        mats.append(sp.csr_array(scipy.io.mmread(path)))
    return QepProblem(*mats, name=name or os.path.basename(prefix))
