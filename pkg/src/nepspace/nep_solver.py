"""Interpolatory subspace iteration for split-form nonlinear problems.

``T(s)`` is partitioned as ``[[A(s), B(s)], [C(s), D(s)]]`` with a small
trailing block.  The bases are grown with the derivative chains of
``A(s)^{-1} B(s)`` and ``(C(s) A(s)^{-1})^H`` at the current Ritz values, and
the projected problem

    T_red(s) = [[W^* A(s) V, W^* B(s)], [C(s) V, D(s)]]

keeps the split structure with the same scalar functions.
"""

import logging

import numpy as np

from .dense import DROP_TOL, inf_norm, sigma_min
from .errors import IncreaseProbes
from .iteration import SubspaceIteration, initial_points
from .nep import PartitionedNEP, embed_split, residual_split, solve_chain
from .report import Mode
from .small_nep import companion_eigs, contour_solve

log = logging.getLogger(__name__)

FILTER_TOL = 1e-8
RADIUS_RETRIES = 4


def expand_nep(p, mu, q=2, mode=Mode.TWO_SIDED, counter=None):
    """Right (and, two-sided, left) directions at ``mu``, each ``k x (m q)``."""
    two = Mode(mode) is Mode.TWO_SIDED
    X, Y = solve_chain(p, complex(mu), q, adjoint=two, counter=counter)
    return np.hstack(X), (np.hstack(Y) if two else None)


class ReducedSplitNEP:
    """Projected blocks of every term, grown column by column.

    For term ``j``: ``WAV[j] = W^* A_j V``, ``WB[j] = W^* B_j``,
    ``CV[j] = C_j V`` and ``D[j] = D_j``.
    """

    def __init__(self, p):
        self.p = p
        self.fns = p.fns
        k, m = p.k, p.m
        nt = len(self.fns)
        self.AV = [np.zeros((k, 0), complex) for _ in range(nt)]
        self.WAV = [np.zeros((0, 0), complex) for _ in range(nt)]
        self.WB = [np.zeros((0, m), complex) for _ in range(nt)]
        self.CV = [np.zeros((m, 0), complex) for _ in range(nt)]
        self.D = [blk[3] for blk in p.blocks]

    @property
    def r(self):
        return self.WAV[0].shape[0]

    @property
    def m(self):
        return self.p.m

    def grow(self, W_old, Vn, Wn):
        Woh = W_old.conj().T
        Wnh = Wn.conj().T
        for j, (Aj, Bj, Cj, _) in enumerate(self.p.blocks):
            AVn = Aj @ Vn
            self.AV[j] = np.hstack([self.AV[j], AVn])
            self.WAV[j] = np.block([[self.WAV[j], Woh @ AVn], [Wnh @ self.AV[j]]])
            self.WB[j] = np.vstack([self.WB[j], Wnh @ Bj])
            self.CV[j] = np.hstack([self.CV[j], Cj @ Vn])

    @classmethod
    def from_bases(cls, p, V, W):
        """Projection computed in one go (reference for the incremental path)."""
        red = cls(p)
        red.grow(np.zeros((p.k, 0), complex), V, W)
        return red

    def term_matrix(self, j):
        return np.block([[self.WAV[j], self.WB[j]], [self.CV[j], self.D[j]]])

    def eval(self, s, deriv=0):
        """``T_red^{(deriv)}(s)`` as a dense ``(r + m)`` square matrix."""
        fv = self.p.nep.fvals(s, deriv)[:, deriv]
        N = self.r + self.m
        out = np.zeros((N, N), complex)
        for j, c in enumerate(fv):
            if c != 0:
                out += c * self.term_matrix(j)
        return out

    def eval_A(self, s):
        fv = self.p.nep.fvals(s)[:, 0]
        out = np.zeros((self.r, self.r), complex)
        for j, c in enumerate(fv):
            out += c * self.WAV[j]
        return out

    @property
    def is_polynomial(self):
        return all(f.is_polynomial for f in self.fns)

    def poly_coeffs(self):
        d = max(f.degree for f in self.fns)
        N = self.r + self.m
        P = [np.zeros((N, N), complex) for _ in range(d + 1)]
        for j, f in enumerate(self.fns):
            P[f.degree] += complex(f.coef) * self.term_matrix(j)
        return P


def assemble_reduced(p, V, W=None):
    """:class:`ReducedSplitNEP` for the bases ``V`` and ``W`` (``W = V`` if omitted)."""
    V = np.asarray(V, dtype=complex)
    W = V if W is None else np.asarray(W, dtype=complex)
    return ReducedSplitNEP.from_bases(p, V, W)


def is_reduced_pole(red, lam, filter_tol=FILTER_TOL):
    """True when ``A_red(lam) = W^* A(lam) V`` is numerically singular."""
    if red.r == 0:
        return False
    Ar = red.eval_A(lam)
    return sigma_min(Ar) <= filter_tol * inf_norm(Ar)


def _filtered(pairs, red, want, filter_tol):
    out = []
    for lam, v in pairs:
        if not np.isfinite(lam) or is_reduced_pole(red, lam, filter_tol):
            continue
        out.append((lam, v))
        if want is not None and len(out) >= want:
            break
    return out


def solve_reduced(red, tau, want, radius=1.0, rng=None, filter_tol=FILTER_TOL, nodes=64):
    """The ``want`` admissible eigenpairs of the reduced problem closest to ``tau``.

    Matrix polynomials are solved through the companion pencil; everything
    else by the contour solver on a disk about ``tau`` whose radius is grown
    (or shrunk on rank saturation) a bounded number of times.
    """
    tau = complex(tau)
    if red.is_polynomial:
        pairs = companion_eigs(red.poly_coeffs(), tau)
        return _filtered(pairs, red, want, filter_tol)
    rng = np.random.default_rng(0) if rng is None else rng
    rho = float(radius)
    best = []
    for attempt in range(RADIUS_RETRIES + 1):
        try:
            pairs = contour_solve(red.eval, tau, rho, want + 4, tau, rng,
                                  eval_dT=lambda s: red.eval(s, 1), nodes=nodes)
        except IncreaseProbes:
            rho /= 2
            log.info("reduced contour saturated; shrinking radius to %g", rho)
            continue
        got = _filtered(pairs, red, want, filter_tol)
        if len(got) > len(best):
            best = got
        if len(got) >= want:
            return got
        rho *= 2
        log.info("reduced contour found %d of %d eigenvalues; radius -> %g (attempt %d)",
                 len(got), want, rho, attempt + 1)
    return best


class SplitSolver(SubspaceIteration):
    """Subspace iteration state for one :func:`solve_nep` run."""

    def __init__(self, nep, tau, k_eigs, strategy="ALL", mode=Mode.TWO_SIDED, q=None, m=2, tol=1e-8,
                 max_iter=50, filter_tol=FILTER_TOL, drop_tol=DROP_TOL, perm=None, radius=1.0,
                 embedded_norm=False, seed=0):
        mode = Mode(mode)
        if q is None:
            q = 2 if mode is Mode.TWO_SIDED else 3
        super().__init__(tau, k_eigs, strategy, mode, q, tol, max_iter, drop_tol)
        self.p = PartitionedNEP(nep, m, perm)
        self.red = ReducedSplitNEP(self.p)
        self.filter_tol = filter_tol
        self.radius = float(radius)
        self.embedded_norm = embedded_norm
        # probes for the reduced contour solves
        self.rng = np.random.default_rng([seed, 1])

    @property
    def dim(self):
        return self.p.k

    @property
    def dirs_per_point(self):
        return self.p.m * self.q

    @property
    def block_size(self):
        return self.p.m

    def directions(self, mu):
        return expand_nep(self.p, mu, self.q, self.mode, self.counter)

    def grow(self, Vn, Wn):
        r0 = self.red.r
        self.red.grow(self.W[:, :r0], Vn, Wn)

    def candidates(self, want):
        return solve_reduced(self.red, self.tau, want, self.radius, self.rng, self.filter_tol)

    def residual(self, lam, v_reduced):
        return residual_split(self.p.nep, lam, v_reduced, self.V, self.p.m, self.embedded_norm)

    def lift(self, v_reduced):
        x = embed_split(v_reduced, self.V)
        if self.p.perm is None:
            return x
        out = np.empty_like(x)
        out[self.p.perm] = x
        return out


def solve_nep(nep, tau, k_eigs=1, strategy="ALL", *, m=2, q=None, mode=Mode.TWO_SIDED, tol=1e-8, max_iter=50,
              init_points=None, init_basis=None, radius=1.0, seed=0, filter_tol=FILTER_TOL, drop_tol=DROP_TOL,
              perm=None, embedded_norm=False):
    """Eigenvalues of ``T(s) = sum_j f_j(s) T_j`` closest to ``tau``.

    Parameters
    ----------
    nep : SplitNEP
    m : int
        Size of the trailing block of the partition.
    perm : array of int, optional
        Symmetric permutation applied to ``T`` before partitioning; returned
        eigenvectors are in the original ordering.
    radius : float
        Scale of the random initial points and lower bound for the radius of
        the reduced contour solves.
    embedded_norm : bool
        Normalize residuals by the embedded rather than the reduced vector.

    Other parameters are as for :func:`nepspace.rep_solver.solve_rep`.
    """
    m_eff = m
    q_eff = q if q is not None else (2 if Mode(mode) is Mode.TWO_SIDED else 3)
    if init_points is None and init_basis is None:
        count = max(1, -(-(k_eigs + m_eff) // (m_eff * q_eff)))
        init_points = initial_points(tau, count, radius, np.random.default_rng(seed))
    pts = None if init_points is None else [complex(z) for z in init_points]
    rho = float(radius)
    if pts:
        # the reduced contour must reach every initial point
        rho = max(rho, 2 * max(abs(complex(tau) - z) for z in pts))
    solver = SplitSolver(nep, tau, k_eigs, strategy, mode, q, m, tol, max_iter, filter_tol, drop_tol, perm,
                         rho, embedded_norm, seed)
    report = solver.run(init_points=pts, init_basis=init_basis, radius=radius, seed=seed)
    report.permutation = solver.p.perm
    return report

