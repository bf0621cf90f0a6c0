"""Dense verification oracle.

Computes the complete eigendecomposition of a desk-scale quadratic
problem through the shift-inverted companion pencil and exposes the
angle identities, convergence bound, resolvent expansion, and
perturbation diagnostics that the iterative solvers are checked
against.  Everything here is dense and O(n^3); the :func:`~qri.qep.dense_cap`
guard keeps it from being applied to problems it cannot handle.

Angle conventions
-----------------
For a subspace ``V`` (orthonormal columns) and a vector ``x``,
``sin(V, x) = norm((I - V V*) x) / norm(x)``.  Angles between two vectors
treat each as a one-dimensional subspace, so complex phases never
matter.  The tangent of a vector against a unit reference ``x1`` is
``norm((I - x1 x1*) w) / |x1* w|``.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (
    Breakdown,
    DegenerateResidual,
    HypothesisViolated,
    InfiniteEigenvaluePresent,
    OrthogonalToTarget,
    SingularMatrix,
    ZeroVector,
)
from .linalg import LUSolver, OrthonormalBasis, dense_eig, sin_angle_vectors
from .qep import Eigentriplet, dense_cap, pencil_dense, shift_invert_dense

# theta below this fraction of the dominant |theta| is a zero of the
# shift-inverted pencil, i.e. an infinite eigenvalue of the quadratic
INF_THETA_RTOL = 1e-10

# a target direction whose component outside the subspace falls below
# this fraction of its norm makes the angle quantities meaningless
PERP_FLOOR_RTOL = 1e-13


def _columns(V):
    """Accept an OrthonormalBasis or a plain array of orthonormal columns."""
    if isinstance(V, OrthonormalBasis):
        return V.matrix
    V = np.asarray(V, dtype=complex)
    if V.ndim == 1:
        V = V[:, None]
    return V


def _project_out(V, x, passes=2):
    Vm = _columns(V)
    w = np.array(x, dtype=complex)
    for _ in range(passes):
        w -= Vm @ (Vm.conj().T @ w)
    return w


def sin_angle(V, x):
    """Sine of the angle between ``span(V)`` and the vector ``x``.

    An empty basis gives 1.  Raises :class:`ZeroVector` for ``x = 0``.
    """
    x = np.asarray(x, dtype=complex)
    nx = np.linalg.norm(x)
    if nx == 0.0:
        raise ZeroVector("angle of a zero vector is undefined")
    if _columns(V).shape[1] == 0:
        return 1.0
    return float(np.linalg.norm(_project_out(V, x)) / nx)


@dataclass
class OracleDecomposition:
    """Complete eigendata of one problem around one shift.

    ``triplets`` holds all 2n eigenvalues, finite ones first in
    ascending ``|lam - sigma|`` order (ties by phase of ``lam - sigma``,
    then by position), infinite ones last.  ``lams``, ``X`` and ``Y``
    cover the finite part only; right vectors have unit norm and left
    vectors are scaled so that

        Q(mu)^{-1} = sum_i  x_i y_i* / (mu - lam_i)

    holds exactly whenever every eigenvalue is finite.
    """

    problem: object
    sigma: complex
    triplets: list
    lams: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    n_infinite: int
    _shift_lu: dict = field(default_factory=dict, repr=False)

    @property
    def finite_count(self):
        return len(self.lams)

    def shifted_solver(self, mu):
        """Dense LU solver for ``Q(mu)``, memoized per ``mu``."""
        key = complex(mu)
        if key not in self._shift_lu:
            Md, Cd, Kd = self.problem.densify()
            self._shift_lu[key] = LUSolver(key * key * Md + key * Cd + Kd)
        return self._shift_lu[key]


def full_eig(p, sigma):
    """All 2n eigentriplets of ``p`` via the shift-inverted pencil.

    The shifted pencil ``S = (A - sigma B)^{-1} B`` is formed densely and
    fed to the QR eigensolver; eigenvalues come back as
    ``lam = sigma + 1 / theta`` with ``theta ~ 0`` flagged infinite.
    Left vectors are read off the rows of ``W^{-1} (A - sigma B)^{-1}``
    (the inverse eigenvector matrix times the shifted resolvent), which
    pairs them with the right vectors and fixes their scale in one step.

    Raises :class:`SingularMatrix` if ``sigma`` is itself an eigenvalue
    and ``ValueError`` if ``2 n`` exceeds the dense cap.
    """
    n = p.n
    if 2 * n > dense_cap():
        raise ValueError(
            f"oracle needs 2n = {2 * n} <= dense cap {dense_cap()}; "
            "set QRI_DENSE_CAP to override"
        )
    A, B = pencil_dense(*p.densify())
    S, fsolve = shift_invert_dense(A, B, sigma)
    theta, W = dense_eig(S)

    Finv = fsolve.solve(np.eye(2 * n, dtype=complex))
    try:
        G = np.linalg.solve(W, Finv)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(
            "eigenvector matrix is numerically singular; the oracle needs "
            "a diagonalizable shifted pencil"
        ) from exc

    thr = INF_THETA_RTOL * max(1.0, float(np.abs(theta).max()))
    finite = np.abs(theta) > thr

    fin_idx = np.flatnonzero(finite)
    lam_fin = sigma + 1.0 / theta[fin_idx]
    dist = np.abs(lam_fin - sigma)
    phase = np.angle(lam_fin - sigma)
    order = np.lexsort((np.arange(len(fin_idx)), phase, dist))

    lams = lam_fin[order]
    X = np.empty((n, len(order)), dtype=complex)
    Y = np.empty((n, len(order)), dtype=complex)
    triplets = []
    for col, j in enumerate(order):
        i = fin_idx[j]
        xraw = W[n:, i]
        c = np.linalg.norm(xraw)
        if c == 0.0:
            raise ZeroVector("pencil eigenvector has an empty lower block")
        x = xraw / c
        y = np.conj(c * (lams[col] - sigma)) * np.conj(G[i, :n])
        X[:, col] = x
        Y[:, col] = y
        triplets.append(Eigentriplet(lam=complex(lams[col]), x=x, y=y))

    for i in np.flatnonzero(~finite):
        xraw = W[:n, i]
        c = np.linalg.norm(xraw)
        if c == 0.0:
            raise ZeroVector("pencil eigenvector has an empty upper block")
        yraw = np.conj(G[i, :n])
        ny = np.linalg.norm(yraw)
        y = yraw / ny if ny > 0 else yraw
        triplets.append(
            Eigentriplet(lam=None, x=xraw / c, y=y, infinite=True)
        )

    return OracleDecomposition(
        problem=p,
        sigma=complex(sigma),
        triplets=triplets,
        lams=lams,
        X=X,
        Y=Y,
        n_infinite=int(np.count_nonzero(~finite)),
    )


def select_target_pair(lams, sigma):
    """Indices of the closest and second-closest values to ``sigma``.

    Ties are broken by the phase of ``lam - sigma`` and then by position,
    matching the ordering used by :func:`full_eig`.
    """
    lams = np.asarray(lams, dtype=complex)
    if lams.size < 2:
        raise ValueError("need at least two finite eigenvalues")
    dist = np.abs(lams - sigma)
    phase = np.angle(lams - sigma)
    order = np.lexsort((np.arange(lams.size), phase, dist))
    return int(order[0]), int(order[1])


def resolvent_check(d, mu):
    """Relative Frobenius error of the rank-one resolvent expansion at ``mu``.

    ``norm(Q(mu)^{-1} - sum_i x_i y_i* / (mu - lam_i)) / norm(Q(mu)^{-1})``.

    Raises :class:`InfiniteEigenvaluePresent` when the decomposition
    contains infinite eigenvalues (the pure partial-fraction form then
    no longer represents the inverse).
    """
    if d.n_infinite:
        raise InfiniteEigenvaluePresent(
            f"{d.n_infinite} infinite eigenvalue(s); the expansion needs a "
            "nonsingular mass matrix"
        )
    gaps = mu - d.lams
    if np.abs(gaps).min() == 0.0:
        raise ValueError("mu coincides with an eigenvalue")
    n = d.problem.n
    Qinv = d.shifted_solver(mu).solve(np.eye(n, dtype=complex))
    R = (d.X / gaps) @ d.Y.conj().T
    return float(np.linalg.norm(Qinv - R) / np.linalg.norm(Qinv))


def expansion_angle_identity(V, v_next, x):
    """Exact factorization of the angle sine under a one-vector expansion.

    With ``x_perp = (I - P_V) x`` nonzero and ``v_next`` orthonormal to
    ``V``,

        sin([V, v_next], x) = sin(V, x) * sin(v_next, x_perp)

    holds as an identity.  Returns ``(lhs, rhs, gap)`` so callers can
    assert the gap at their own tolerance.

    Raises :class:`HypothesisViolated` when ``x`` lies in ``span(V)`` to
    working precision, and ``ValueError`` when ``v_next`` is not
    orthonormal to ``V``.
    """
    Vm = _columns(V)
    v = np.asarray(v_next, dtype=complex)
    if Vm.shape[1] and float(np.abs(Vm.conj().T @ v).max()) > 1e-12:
        raise ValueError("v_next is not orthogonal to the basis")
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("v_next must have unit norm")
    x = np.asarray(x, dtype=complex)
    nx = np.linalg.norm(x)
    if nx == 0.0:
        raise ZeroVector("angle of a zero vector is undefined")

    x_perp = _project_out(Vm, x)
    if np.linalg.norm(x_perp) <= PERP_FLOOR_RTOL * nx:
        raise HypothesisViolated("x lies in span(V) to working precision")

    extended = np.hstack([Vm, v[:, None]])
    lhs = sin_angle(extended, x)
    rhs = sin_angle(Vm, x) * sin_angle_vectors(v, x_perp)
    return lhs, rhs, abs(lhs - rhs)


def expansion_angle_bound(d, V, r, sigma):
    """Spectral bound on the angle of the next expansion direction.

    For the exact expansion ``u = Q(sigma)^{-1} r`` orthonormalized
    against ``V``, the sine of its angle to ``x1_perp = (I - P_V) x1``
    is bounded by

        |lam1 - sigma| / |lam2 - sigma| * xi,
        xi = sum_{i >= 2} |y_i* r| / |y_1* r|

    where ``lam1, lam2`` are the two eigenvalues closest to ``sigma``
    and the left vectors carry the oracle scaling.  Returns
    ``(lhs, rhs, xi)``.
    """
    if d.n_infinite:
        raise InfiniteEigenvaluePresent(
            "the bound needs every eigenvalue finite (nonsingular mass matrix)"
        )
    r = np.asarray(r, dtype=complex)
    i1, i2 = select_target_pair(d.lams, sigma)
    coeffs = d.Y.conj().T @ r
    if abs(coeffs[i1]) < 1e-300:
        raise DegenerateResidual(
            "residual has no component along the target left eigenvector"
        )
    rest = np.abs(np.delete(coeffs, i1)).sum()
    xi = float(rest / abs(coeffs[i1]))
    rhs = abs(d.lams[i1] - sigma) / abs(d.lams[i2] - sigma) * xi

    x1 = d.X[:, i1]
    x1_perp = _project_out(V, x1)
    if np.linalg.norm(x1_perp) <= PERP_FLOOR_RTOL:
        raise HypothesisViolated("target vector already lies in span(V)")

    u = d.shifted_solver(sigma).solve(r)
    u_perp = _project_out(V, u)
    nu = np.linalg.norm(u_perp)
    if nu <= 1e-300:
        raise Breakdown("exact expansion direction lies in span(V)")
    lhs = sin_angle_vectors(u_perp / nu, x1_perp)
    return float(lhs), float(rhs), xi


@dataclass
class ExpansionDiag:
    """Decomposition of an inexact expansion against its exact counterpart.

    ``utilde = u + eps * norm(u) * f`` with unit ``f``; ``f_perp`` is the
    part of ``f`` outside the subspace; ``eps_tilde`` is the relative
    error measured after projection; ``v`` and ``vtilde`` are the exact
    and perturbed normalized expansion directions.  ``gap_scale`` and
    ``gap_direction`` report how far the two exact identities

        eps_tilde * sin(V, u)   = eps * sin(V, f)
        sin(vtilde, v)          = eps_tilde * sin(vtilde, f_perp)

    are from zero for the given data.
    """

    u: np.ndarray
    utilde: np.ndarray
    eps: float
    f: np.ndarray
    f_perp: np.ndarray
    eps_tilde: float
    v: np.ndarray
    vtilde: np.ndarray
    gap_scale: float
    gap_direction: float


def expansion_perturbation_diagnostics(V, u, utilde):
    """Measure an inexact expansion vector against the exact one.

    Returns an :class:`ExpansionDiag`; with ``utilde == u`` exactly, all
    scalar fields are zero and both directions coincide.  Raises
    :class:`HypothesisViolated` when ``u`` (or ``utilde``) carries no
    component outside the subspace, since no expansion direction exists
    then.
    """
    u = np.asarray(u, dtype=complex)
    utilde = np.asarray(utilde, dtype=complex)
    nu = np.linalg.norm(u)
    if nu == 0.0:
        raise ZeroVector("exact expansion vector is zero")

    u_perp = _project_out(V, u)
    nup = np.linalg.norm(u_perp)
    if nup <= PERP_FLOOR_RTOL * nu:
        raise HypothesisViolated("u lies in span(V); no expansion direction")
    v = u_perp / nup

    delta = utilde - u
    ndelta = np.linalg.norm(delta)
    if ndelta == 0.0:
        zero = np.zeros_like(u)
        return ExpansionDiag(
            u=u, utilde=utilde, eps=0.0, f=zero, f_perp=zero,
            eps_tilde=0.0, v=v, vtilde=v, gap_scale=0.0, gap_direction=0.0,
        )

    eps = float(ndelta / nu)
    f = delta / ndelta
    f_perp = _project_out(V, f)

    ut_perp = _project_out(V, utilde)
    nutp = np.linalg.norm(ut_perp)
    if nutp <= PERP_FLOOR_RTOL * np.linalg.norm(utilde):
        raise HypothesisViolated("utilde lies in span(V); no expansion direction")
    vtilde = ut_perp / nutp

    eps_tilde = float(np.linalg.norm(_project_out(V, delta)) / nup)

    gap_scale = abs(eps_tilde * sin_angle(V, u) - eps * sin_angle(V, f))
    if np.linalg.norm(f_perp) == 0.0:
        gap_direction = abs(sin_angle_vectors(vtilde, v))
    else:
        gap_direction = abs(
            sin_angle_vectors(vtilde, v) - eps_tilde * sin_angle_vectors(vtilde, f_perp)
        )

    return ExpansionDiag(
        u=u, utilde=utilde, eps=eps, f=f, f_perp=f_perp,
        eps_tilde=eps_tilde, v=v, vtilde=vtilde,
        gap_scale=float(gap_scale), gap_direction=float(gap_direction),
    )


@dataclass
class AngleDecomposition:
    """``w = alpha * x1 + beta * x_perp`` with unit ``x_perp`` orthogonal
    to the unit reference ``x1`` and ``beta >= 0``."""

    alpha: complex
    beta: float
    tan_angle: float
    x_perp: np.ndarray | None


def decompose_along(x1, w):
    """Split ``w`` into components along and orthogonal to ``x1``.

    ``tan_angle = beta / |alpha|``.  Raises :class:`OrthogonalToTarget`
    when ``w`` has no component along ``x1``.
    """
    x1 = np.asarray(x1, dtype=complex)
    x1 = x1 / np.linalg.norm(x1)
    w = np.asarray(w, dtype=complex)
    alpha = np.vdot(x1, w)
    if abs(alpha) < 1e-300:
        raise OrthogonalToTarget("vector is orthogonal to the reference direction")
    q = w - alpha * x1
    beta = float(np.linalg.norm(q))
    x_perp = q / beta if beta > 0.0 else None
    return AngleDecomposition(
        alpha=complex(alpha), beta=beta, tan_angle=beta / abs(alpha), x_perp=x_perp
    )


class SandwichResult(NamedTuple):
    tan_exact: float
    tan_inexact: float
    tan_error: float
    hypothesis_holds: bool
    sandwich_holds: bool


def angle_sandwich(d, u, utilde, x1=None):
    """Tangent ordering of exact, inexact, and error directions.

    With ``t(w) = norm((I - x1 x1*) w) / |x1* w|``, checks the ordering

        t(u) <= t(utilde) <= t(u - utilde)

    which is expected whenever the hypothesis ``t(u) < t(u - utilde)``
    holds (the inexact direction should be no closer to the reference
    than the exact one, nor farther than the pure error).  ``x1``
    defaults to the decomposition's eigenvector nearest its shift; pass
    it explicitly to target another direction.  Returns the three
    tangents and both flags; no exception is raised on a violation, so
    callers can gather statistics.  With ``utilde == u`` exactly the
    error direction is undefined and the result is degenerate-true with
    an infinite error tangent.

    The ordering rests on a two-eigenvector model with aligned
    coefficient phases; with complex data the lower comparison can fail
    by a margin of order ``norm(u - utilde) / norm(u)`` even when the
    hypothesis holds, so treat per-trial flags as statistics rather
    than certainties.
    """
    if x1 is None:
        if d is None:
            raise ValueError("need a decomposition or an explicit x1")
        x1 = d.X[:, 0]
    u = np.asarray(u, dtype=complex)
    utilde = np.asarray(utilde, dtype=complex)
    t_u = decompose_along(x1, u).tan_angle
    diff = u - utilde
    if np.linalg.norm(diff) == 0.0:
        return SandwichResult(t_u, t_u, float("inf"), True, True)
    t_ut = decompose_along(x1, utilde).tan_angle
    t_err = decompose_along(x1, diff).tan_angle
    hypothesis = t_u < t_err
    sandwich = t_u <= t_ut <= t_err
    return SandwichResult(
        tan_exact=t_u,
        tan_inexact=t_ut,
        tan_error=t_err,
        hypothesis_holds=bool(hypothesis),
        sandwich_holds=bool(sandwich),
    )
