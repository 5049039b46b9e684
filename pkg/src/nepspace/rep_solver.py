"""Interpolatory subspace iteration for rational eigenvalue problems.

Given ``R(s) = P(s) + C (sI - A)^{-1} B`` and a target ``tau``, the bases
``V`` and ``W`` are grown with the shifted power chains
``(A - mu I)^{-j} B`` and ``(A - mu I)^{-Hj} C^H`` at the current Ritz values.
The reduced rational function then Hermite-interpolates ``R`` at every
visited point, and its eigenvalues closest to ``tau`` converge quickly to
eigenvalues of ``R``.
"""

from dataclasses import dataclass

import numpy as np

from .dense import DROP_TOL, inf_norm, pencil_eigs, sigma_min
from .errors import PoleError, SingularMatrixError
from .iteration import SubspaceIteration
from .rational import build_linearization, residual_rational
from .report import Mode, closeness_key
from .sparse import factorize, speye

FILTER_TOL = 1e-8


@dataclass
class ProjectionPair:
    """Orthonormal right and left bases of equal width.

    In one-sided mode ``W`` is the same array as ``V``.
    """

    V: np.ndarray
    W: np.ndarray
    mode: Mode = Mode.TWO_SIDED

    def __post_init__(self):
        self.mode = Mode(self.mode)
        self.V = np.asarray(self.V, dtype=complex)
        self.W = self.V if self.mode is Mode.ONE_SIDED else np.asarray(self.W, dtype=complex)
        if self.V.shape != self.W.shape:
            raise ValueError(f"V and W must have the same shape, got {self.V.shape} and {self.W.shape}")

    @property
    def r(self):
        return self.V.shape[1]


def _shifted_factor(sys, mu, counter):
    try:
        return factorize(sys.A - mu * speye(sys.k), shift=mu, counter=counter)
    except SingularMatrixError as exc:
        raise PoleError(mu, "shift is an eigenvalue of A") from exc


def _power_chain(F, rhs, q, adjoint=False):
    out = []
    X = rhs
    for _ in range(q):
        X = F.solve(X, adjoint=adjoint)
        out.append(X)
    return np.hstack(out)


def expand_two_sided(sys, mu, q=2, counter=None):
    """Right and left directions at ``mu``.

    Returns ``(Vdirs, Wdirs)``, each ``k x (n q)``: the blocks
    ``(A - mu I)^{-j} B`` and ``(A - mu I)^{-Hj} C^H`` for ``j = 1..q``.
    Both chains share one factorization.
    """
    if q < 1:
        raise ValueError("q must be positive")
    F = _shifted_factor(sys, complex(mu), counter)
    Vd = _power_chain(F, sys.B, q)
    Wd = _power_chain(F, sys.C.conj().T, q, adjoint=True)
    return Vd, Wd


def expand_one_sided(sys, mu, q=3, counter=None):
    """Right directions ``(A - mu I)^{-j} B``, ``j = 1..q``, only."""
    if q < 1:
        raise ValueError("q must be positive")
    F = _shifted_factor(sys, complex(mu), counter)
    return _power_chain(F, sys.B, q)


def pencil_from_blocks(WAV, WV, WB, CV, P):
    """Dense reduced pencil from projected blocks.

    ``P`` is the list of linearization coefficients ``P_0..P_d`` (``d >= 1``).
    Layout matches :func:`nepspace.rational.build_linearization` with ``A``,
    ``B``, ``C`` and the identity replaced by their projections.
    """
    r = WAV.shape[0]
    n = WB.shape[1]
    d = len(P) - 1
    N = r + n * d
    Acal = np.zeros((N, N), complex)
    Bcal = np.zeros((N, N), complex)
    Acal[:r, :r] = WAV
    Acal[:r, N - n:] = WB
    Acal[r:r + n, :r] = CV
    for i in range(d):
        Acal[r:r + n, r + i * n:r + (i + 1) * n] = P[d - 1 - i]
    for i in range(d - 1):
        rows = slice(r + (i + 1) * n, r + (i + 2) * n)
        Acal[rows, r + i * n:r + (i + 1) * n] = -np.eye(n)
        Bcal[rows, r + (i + 1) * n:r + (i + 2) * n] = -np.eye(n)
    Bcal[:r, :r] = WV
    Bcal[r:r + n, r:r + n] = -P[d]
    return Acal, Bcal


def project_blocks(sys, proj):
    """``(W^*AV, W^*V, W^*B, CV)`` computed from scratch."""
    V, W = proj.V, proj.W
    Wh = W.conj().T
    return Wh @ (sys.A @ V), Wh @ V, Wh @ sys.B, sys.C @ V


def build_reduced_pencil(sys, proj):
    """Reduced pencil ``(Acal_r, Bcal_r)`` of size ``r + n d``."""
    WAV, WV, WB, CV = project_blocks(sys, proj)
    return pencil_from_blocks(WAV, WV, WB, CV, sys.lin_coeffs)


def is_pole_candidate(lam, WAV, WV, filter_tol=FILTER_TOL, scale=None):
    """True when ``W^*AV - lam W^*V`` is numerically singular."""
    if scale is None:
        scale = inf_norm(WAV)
    return sigma_min(WAV - lam * WV) <= filter_tol * scale


def reduced_eigs_filtered(Acal_r, Bcal_r, WAV, WV, tau=0.0, want=None, filter_tol=FILTER_TOL):
    """Finite reduced eigenpairs that are not poles of the reduced function.

    Candidates are sorted by distance to ``tau`` and tested lazily, so at
    most ``want`` pairs (all when ``want`` is None) are returned.
    """
    eig = pencil_eigs(Acal_r, Bcal_r)
    order = sorted(range(len(eig.values)), key=lambda i: closeness_key(tau)(eig.values[i]))
    scale = inf_norm(WAV)
    out = []
    for i in order:
        lam = complex(eig.values[i])
        if not np.isfinite(lam):
            continue
        if WAV.shape[0] and is_pole_candidate(lam, WAV, WV, filter_tol, scale):
            continue
        out.append((lam, eig.vectors[:, i]))
        if want is not None and len(out) >= want:
            break
    return out


class RationalSolver(SubspaceIteration):
    """Subspace iteration state for one :func:`solve_rep` run."""

    def __init__(self, sys, tau, k_eigs, strategy="ALL", mode=Mode.TWO_SIDED, q=None, tol=1e-8,
                 max_iter=50, filter_tol=FILTER_TOL, drop_tol=DROP_TOL, recompute=False):
        mode = Mode(mode)
        if q is None:
            q = 2 if mode is Mode.TWO_SIDED else 3
        super().__init__(tau, k_eigs, strategy, mode, q, tol, max_iter, drop_tol)
        self.sys = sys
        self.lin = build_linearization(sys)
        self.filter_tol = filter_tol
        self.recompute = recompute
        k, n = sys.k, sys.n
        self.AV = np.zeros((k, 0), complex)
        self.WAV = np.zeros((0, 0), complex)
        self.WV = np.zeros((0, 0), complex)
        self.WB = np.zeros((0, n), complex)
        self.CV = np.zeros((n, 0), complex)

    @property
    def dim(self):
        return self.sys.k

    @property
    def dirs_per_point(self):
        return self.sys.n * self.q

    @property
    def block_size(self):
        return self.sys.n

    def directions(self, mu):
        if self.two_sided:
            return expand_two_sided(self.sys, mu, self.q, self.counter)
        return expand_one_sided(self.sys, mu, self.q, self.counter), None

    def grow(self, Vn, Wn):
        sys = self.sys
        r0 = self.WAV.shape[0]
        V, W = self.V, self.W
        AVn = sys.A @ Vn
        self.AV = np.hstack([self.AV, AVn])
        W0h = W[:, :r0].conj().T
        Wnh = Wn.conj().T
        # only the new border of each projected block is computed
        self.WAV = np.block([[self.WAV, W0h @ AVn], [Wnh @ self.AV]])
        self.WV = np.block([[self.WV, W0h @ Vn], [Wnh @ V]])
        self.WB = np.vstack([self.WB, Wnh @ sys.B])
        self.CV = np.hstack([self.CV, sys.C @ Vn])

    def blocks(self):
        if self.recompute:
            return project_blocks(self.sys, ProjectionPair(self.V, self.W, self.mode))
        return self.WAV, self.WV, self.WB, self.CV

    def candidates(self, want):
        WAV, WV, WB, CV = self.blocks()
        Acal, Bcal = pencil_from_blocks(WAV, WV, WB, CV, self.sys.lin_coeffs)
        return reduced_eigs_filtered(Acal, Bcal, WAV, WV, self.tau, want, self.filter_tol)

    def residual(self, lam, v_reduced):
        return residual_rational(self.sys, self.lin, lam, v_reduced, self.V)

    def lift(self, v_reduced):
        # the trailing block of the reduced vector is the eigenvector of R
        return np.asarray(v_reduced[-self.sys.n:], dtype=complex)


def solve_rep(sys, tau, k_eigs=1, strategy="ALL", *, q=None, mode=Mode.TWO_SIDED, tol=1e-8, max_iter=50,
              init_points=None, init_basis=None, radius=1.0, seed=0, filter_tol=FILTER_TOL,
              drop_tol=DROP_TOL, recompute=False):
    """Eigenvalues of a rational problem closest to ``tau``.

    Parameters
    ----------
    sys : StateSpaceREP
    tau : complex
        Target point.
    k_eigs : int
        Number of eigenvalues wanted.
    strategy : {"ALL", "BR", "WR"}
        Which unconverged Ritz values become the next interpolation points.
    q : int, optional
        Length of the power chains; defaults to 2 (two-sided) or 3 (one-sided).
    mode : {"two-sided", "one-sided"}
    tol : float
        Threshold on the relative residual of every wanted Ritz pair.
    init_points : sequence of complex, optional
        First interpolation points.  By default ``tau`` plus seeded random
        points within about ``radius`` of it, enough for ``k_eigs`` columns.
    init_basis : array or (V, W) tuple, optional
        Orthonormal starting bases; overrides ``init_points``.

    Returns
    -------
    SolveReport
    """
    solver = RationalSolver(sys, tau, k_eigs, strategy, mode, q, tol, max_iter, filter_tol, drop_tol, recompute)
    return solver.run(init_points=init_points, init_basis=init_basis, radius=radius, seed=seed)
