"""Dense complex kernels for the small projected problems.

Everything in here operates on small matrices (the reduced pencils and
projected blocks), so plain LAPACK through scipy is used throughout.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DecompositionError, SingularMatrixError

EPS = np.finfo(float).eps

# |beta| must exceed this multiple of eps * ||Bcal||_inf for a finite eigenvalue
INFINITE_FLOOR = 1e3
DROP_TOL = 1e-10


def inf_norm(M):
    """Induced infinity norm (max absolute row sum); works for sparse input."""
    if M.shape[0] == 0 or M.shape[1] == 0:
        return 0.0
    return float(np.max(np.asarray(abs(M).sum(axis=1)).ravel()))


@dataclass(frozen=True)
class PencilEigs:
    """Finite eigenpairs of a pencil ``Acal - s Bcal``.

    ``vectors[:, i]`` belongs to ``values[i]`` and has infinity norm one.
    """

    values: np.ndarray
    vectors: np.ndarray
    infinite_count: int

    def __len__(self):
        return len(self.values)


def normalize_inf(x):
    """Scale ``x`` so that its largest-magnitude entry equals one."""
    i = int(np.argmax(np.abs(x)))
    return x / x[i]


def pencil_eigs(Acal, Bcal):
    """Finite generalized eigenpairs of ``(Acal, Bcal)``.

    Eigenvalues are returned in the homogeneous form by QZ; a pair
    ``(alpha, beta)`` is kept when ``|beta| > 1e3 * eps * ||Bcal||_inf``.
    The rest are reported only through ``infinite_count``.
    """
    Acal = np.asarray(Acal, dtype=complex)
    Bcal = np.asarray(Bcal, dtype=complex)
    if Acal.shape != Bcal.shape or Acal.shape[0] != Acal.shape[1]:
        raise ValueError(f"pencil blocks must be square and equal in size, got {Acal.shape} and {Bcal.shape}")
    n = Acal.shape[0]
    if n == 0:
        return PencilEigs(np.zeros(0, complex), np.zeros((0, 0), complex), 0)
    try:
        w, vr = sla.eig(Acal, Bcal, right=True, homogeneous_eigvals=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise DecompositionError("QZ", n) from exc
    alpha, beta = w[0], w[1]
    floor = INFINITE_FLOOR * EPS * inf_norm(Bcal)
    finite = np.abs(beta) > floor
    values = alpha[finite] / beta[finite]
    vectors = vr[:, finite]
    if vectors.shape[1]:
        idx = np.argmax(np.abs(vectors), axis=0)
        vectors = vectors / vectors[idx, np.arange(vectors.shape[1])]
    return PencilEigs(values, vectors, int(n - np.count_nonzero(finite)))


def smallest_singular(M):
    """Return ``(sigma, u, v)``, the smallest singular triple of ``M``.

    ``M @ v`` equals ``sigma * u`` up to rounding; ``u`` and ``v`` have unit
    2-norm.  For a non-square ``M`` the smallest of the ``min(M.shape)``
    singular values is used.
    """
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        raise ValueError("smallest_singular needs a nonempty matrix")
    try:
        U, s, Vh = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError("SVD", M.shape) from exc
    return float(s[-1]), U[:, -1], Vh[-1].conj()


def sigma_min(M):
    """Smallest singular value only."""
    M = np.asarray(M, dtype=complex)
    try:
        return float(np.linalg.svd(M, compute_uv=False)[-1])
    except np.linalg.LinAlgError as exc:
        raise DecompositionError("SVD", M.shape) from exc


def orthonormal_extend(basis, new_cols, drop_tol=DROP_TOL):
    """Append to ``basis`` an orthonormal basis of the new directions.

    Each new column is projected against the current basis twice (classical
    Gram-Schmidt with one reorthogonalization pass).  A column is dropped when
    its norm after projection falls below ``drop_tol`` times its norm before
    projection, so rank-deficient input simply adds fewer columns.

    Parameters
    ----------
    basis : (k, r) array or None
        Orthonormal columns; ``None`` or an empty array means no basis yet.
    new_cols : (k, p) array
    drop_tol : float

    Returns
    -------
    (k, r + p') array with orthonormal columns, ``p' <= p``.
    """
    if drop_tol <= 0:
        raise ValueError("drop_tol must be positive")
    new_cols = np.asarray(new_cols, dtype=complex)
    if new_cols.ndim == 1:
        new_cols = new_cols[:, None]
    k = new_cols.shape[0]
    if basis is None:
        basis = np.zeros((k, 0), complex)
    basis = np.asarray(basis, dtype=complex)
    G = basis
    for j in range(new_cols.shape[1]):
        c = new_cols[:, j].copy()
        pre = np.linalg.norm(c)
        if pre == 0.0 or not np.isfinite(pre):
            continue
        # scale first so that high chain powers cannot overflow the projections
        c /= pre
        for _ in range(2):
            if G.shape[1]:
                c -= G @ (G.conj().T @ c)
        nrm = np.linalg.norm(c)
        if nrm <= drop_tol:
            continue
        G = np.column_stack([G, c / nrm])
    return G.copy() if G is basis else G


def dense_solve(M, RHS, adjoint=False):
    """Solve ``M X = RHS`` (or ``M^H X = RHS``) for small dense ``M``.

    Raises :class:`SingularMatrixError` with a condition estimate when ``M``
    is singular to working precision.
    """
    M = np.asarray(M, dtype=complex)
    RHS = np.asarray(RHS, dtype=complex)
    n = M.shape[0]
    if M.ndim != 2 or M.shape[1] != n:
        raise ValueError(f"dense_solve needs a square matrix, got {M.shape}")
    if n == 0:
        return RHS.copy()
    with warnings.catch_warnings():
        # exact singularity is reported below through the condition estimate
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M, check_finite=True)
    gecon, = sla.get_lapack_funcs(("gecon",), (lu,))
    rcond, info = gecon(lu, np.linalg.norm(M, 1), norm="1")
    if rcond < EPS or not np.isfinite(rcond):
        cond = np.inf if rcond == 0 else 1.0 / rcond
        raise SingularMatrixError(f"matrix is singular to working precision (cond ~ {cond:.3g})", cond=cond)
    return sla.lu_solve((lu, piv), RHS, trans=2 if adjoint else 0)
