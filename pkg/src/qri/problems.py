"""Built-in test problems.

Each generator returns a :class:`~qri.qep.QepProblem`.  The generators are
deterministic: the randomized ones take an explicit seed.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .qep import QepProblem


def example1():
    """3x3 reference problem with known spectrum.

    The six eigenvalues are ``1/3, 1/2, 1, i, -i`` and one infinite
    eigenvalue (the mass matrix is singular), which makes it handy for
    exercising eigenvalue ordering, infinite-eigenvalue handling, and
    the dense verification paths.
    """
    M = np.array([[0.0, 6.0, 0.0], [0.0, 6.0, 0.0], [0.0, 0.0, 1.0]])
    C = np.array([[1.0, -6.0, 0.0], [2.0, -7.0, 0.0], [0.0, 0.0, 0.0]])
    K = np.eye(3)
    return QepProblem(M, C, K, name="example1")


def wave2d(m, zeta=1.0):
    """Wave resonance problem on the unit square with one impedance face.

    Finite differences on an ``m x m`` grid (interior plus boundary
    elimination) give ``n = m (m - 1)`` unknowns, ``h = 1/m``:

    - ``M = -4 pi^2 h^2  I_(m-1) (x) (I_m - e_m e_m^T / 2)``
    - ``C = 2 pi i (h / zeta)  I_(m-1) (x) (e_m e_m^T)``
    - ``K = I_(m-1) (x) D_m + T_(m-1) (x) (-I_m + e_m e_m^T / 2)``

    where ``D_m`` is tridiagonal ``(-1, 4, -1)`` with last diagonal entry
    reduced to 2, and ``T_(m-1)`` is tridiagonal ``(1, 0, 1)``.  ``M`` is
    nonsingular, ``C`` has rank ``m - 1``, and ``zeta`` is the (possibly
    complex) impedance parameter.
    """
    if m < 2:
        raise ValueError("need m >= 2")
    if zeta == 0:
        raise ValueError("zeta must be nonzero")
    h = 1.0 / m
    eye_small = sp.identity(m - 1, dtype=complex, format="csr")

    last = sp.csr_array(
        ([1.0 + 0.0j], ([m - 1], [m - 1])), shape=(m, m)
    )  # e_m e_m^T
    half_free = sp.identity(m, dtype=complex, format="csr") - 0.5 * last

    M = (-4.0 * np.pi**2 * h * h) * sp.kron(eye_small, half_free, format="csr")
    C = (2.0j * np.pi * h / zeta) * sp.kron(eye_small, last, format="csr")

    D = sp.diags_array(
        [-np.ones(m - 1), np.r_[4.0 * np.ones(m - 1), 2.0], -np.ones(m - 1)],
        offsets=[-1, 0, 1],
        format="csr",
    ).astype(complex)
    T = sp.diags_array(
        [np.ones(m - 2), np.ones(m - 2)], offsets=[-1, 1], format="csr"
    ).astype(complex)
    G = -sp.identity(m, dtype=complex, format="csr") + 0.5 * last
    K = sp.kron(eye_small, D, format="csr") + sp.kron(T, G, format="csr")

    return QepProblem(M, C, K, name=f"wave2d(m={m})")


@dataclass
class SpringMaxwellParams:
    """Parameters for :func:`spring_maxwell`.

    Coefficients left as ``None`` are drawn log-uniformly from
    ``[1e-1, 1e1]`` using ``seed``.
    """

    element_count: int
    chain_count: int
    seed: int = 0
    rho: float | None = None
    alpha_rho: float | None = None
    eta: np.ndarray | None = None
    xi: np.ndarray | None = None
    e: np.ndarray | None = None


def _log_uniform(rng, size=None):
    return 10.0 ** rng.uniform(-1.0, 1.0, size)


def _chain_matrices(p):
    # assembled 1-d linear finite elements on [0, 1], p elements,
    # left end fixed: stiffness (1/h) tridiag(-1, 2, -1) and consistent
    # mass (h/6) tridiag(1, 4, 1), free-end entries halved
    h = 1.0 / p
    kd = np.r_[2.0 * np.ones(p - 1), 1.0] / h
    ko = -np.ones(p - 1) / h
    stiff = sp.diags_array([ko, kd, ko], offsets=[-1, 0, 1], format="csr")
    md = np.r_[4.0 * np.ones(p - 1), 2.0] * (h / 6.0)
    mo = np.ones(p - 1) * (h / 6.0)
    mass = sp.diags_array([mo, md, mo], offsets=[-1, 0, 1], format="csr")
    return stiff.astype(complex), mass.astype(complex)


def spring_maxwell(params):
    """Viscoelastic ladder: one elastic block coupled to damped chains.

    The mass matrix carries only the first block (``rho * Mass``), so it
    is rank deficient by construction; the damping matrix is block
    diagonal over the chains; the stiffness matrix has an arrowhead block
    structure coupling the first block to every chain and is exactly
    symmetric.  Block size is ``element_count``; total dimension is
    ``element_count * (chain_count + 1)``.
    """
    p_el = params.element_count
    m = params.chain_count
    if p_el < 1 or m < 1:
        raise ValueError("need element_count >= 1 and chain_count >= 1")
    rng = np.random.default_rng(params.seed)
    rho = params.rho if params.rho is not None else _log_uniform(rng)
    alpha_rho = params.alpha_rho if params.alpha_rho is not None else _log_uniform(rng)
    eta = np.asarray(params.eta if params.eta is not None else _log_uniform(rng, m))
    xi = np.asarray(params.xi if params.xi is not None else _log_uniform(rng, m))
    e = np.asarray(params.e if params.e is not None else _log_uniform(rng, m))
    if not (eta.shape == xi.shape == e.shape == (m,)):
        raise ValueError("eta, xi, e must each have chain_count entries")
    if min(rho, alpha_rho, eta.min(), xi.min(), e.min()) <= 0:
        raise ValueError("all coefficients must be positive")

    stiff, mass = _chain_matrices(p_el)
    blocks = m + 1

    def block_grid():
        return [[None] * blocks for _ in range(blocks)]

    Mb = block_grid()
    Mb[0][0] = rho * mass

    Cb = block_grid()
    for i in range(m):
        Cb[i + 1][i + 1] = eta[i] * stiff

    Kb = block_grid()
    Kb[0][0] = alpha_rho * stiff
    for i in range(m):
        Kb[i + 1][i + 1] = e[i] * stiff
        Kb[0][i + 1] = -xi[i] * stiff
        Kb[i + 1][0] = -xi[i] * stiff

    # block_array needs every block row/column to fix its size, so pad
    # all-None diagonals with explicit zero blocks
    zero = sp.csr_array((p_el, p_el), dtype=complex)
    for grid in (Mb, Cb, Kb):
        for i in range(blocks):
            if all(grid[i][j] is None for j in range(blocks)):
                grid[i][i] = zero

    M = sp.block_array(Mb, format="csr")
    C = sp.block_array(Cb, format="csr")
    K = sp.block_array(Kb, format="csr")
    return QepProblem(M, C, K, name=f"spring_maxwell(p={p_el},m={m})")


def random_qep(n, density=0.05, seed=0):
    """Random sparse complex problem with a nonsingular mass matrix.

    ``M`` is made strictly diagonally dominant (all 2n eigenvalues
    finite); ``C`` and ``K`` are unstructured.  Useful for property
    tests.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)

    def sparse_random():
        nnz = max(n, int(round(density * n * n)))
        idx = rng.choice(n * n, size=min(nnz, n * n), replace=False)
        rows, cols = np.divmod(np.sort(idx), n)
        vals = rng.standard_normal(len(idx)) + 1j * rng.standard_normal(len(idx))
        return sp.csr_array((vals, (rows, cols)), shape=(n, n))

    M = sparse_random()
    off = np.abs(M).sum(axis=1)
    M = M + sp.diags_array(off + 1.0, format="csr")
    return QepProblem(M, sparse_random(), sparse_random(), name=f"random_qep(n={n})")
