"""The outer loop shared by the rational and the split-form solvers.

Both methods alternate between expanding a pair of projection bases so that
the reduced function Hermite-interpolates the full one at a set of points,
and extracting the eigenvalues of the reduced problem closest to the target.
Subclasses supply the expansion directions, the reduced eigensolve and the
residual; the bookkeeping (point selection, caching, logging) lives here.
"""

import logging
import math
import time

import numpy as np

from .dense import orthonormal_extend
from .errors import PoleError, ReducedSpectrumEmpty
from .report import EigEstimate, IterationRecord, Mode, SolveReport, Strategy, select_points
from .sparse import SolveCounter

log = logging.getLogger(__name__)

# interpolation points closer than this (relative) count as revisits
DUPLICATE_TOL = 1e-14
POLE_RETRIES = 3


def perturb_shift(mu):
    """Move a shift that landed on a pole."""
    return mu * (1 + 1e-8) + 1e-8j


def initial_points(tau, count, radius, rng):
    """``tau`` followed by ``count - 1`` seeded complex Gaussian offsets."""
    pts = [complex(tau)]
    for _ in range(count - 1):
        z = rng.standard_normal(2)
        pts.append(complex(tau) + radius * complex(z[0], z[1]) / math.sqrt(2.0))
    return pts


class SubspaceIteration:
    """Base class; see :class:`nepspace.rep_solver.RationalSolver`."""

    def __init__(self, tau, k_eigs, strategy, mode, q, tol, max_iter, drop_tol):
        if k_eigs < 1:
            raise ValueError("k_eigs must be at least 1")
        if tol <= 0:
            raise ValueError("tol must be positive")
        mode = Mode(mode)
        if q < 2 or (mode is Mode.ONE_SIDED and q < 3):
            raise ValueError(f"q={q} is too small for {mode.value} interpolation")
        self.tau = complex(tau)
        self.k_eigs = int(k_eigs)
        self.strategy = Strategy(strategy)
        self.mode = mode
        self.q = int(q)
        self.tol = float(tol)
        self.max_iter = int(max_iter)
        self.drop_tol = drop_tol
        self.counter = SolveCounter()
        self.visited = []
        self.V = None
        self.W = None

    # -- hooks -------------------------------------------------------------
    @property
    def dim(self):
        """Ambient dimension of the projected space."""
        raise NotImplementedError

    @property
    def dirs_per_point(self):
        raise NotImplementedError

    @property
    def block_size(self):
        """Width of the unprojected block (``n`` or ``m``)."""
        raise NotImplementedError

    def initial_count(self):
        """Initial points needed so that ``r >= k_eigs + block_size``.

        A strictly proper reduced function with ``r`` states has only about
        ``r - n`` finite eigenvalues, so ``r >= k_eigs`` alone can leave too
        few candidates.
        """
        return max(1, math.ceil((self.k_eigs + self.block_size) / self.dirs_per_point))

    def directions(self, mu):
        """Right and left expansion directions at ``mu`` (left is None one-sided)."""
        raise NotImplementedError

    def grow(self, Vn, Wn):
        """Absorb new orthonormal columns into the cached projected blocks."""
        raise NotImplementedError

    def candidates(self, want):
        """Closest admissible reduced eigenpairs, sorted by distance to tau."""
        raise NotImplementedError

    def residual(self, lam, v_reduced):
        raise NotImplementedError

    def lift(self, v_reduced):
        raise NotImplementedError

    # -- machinery ---------------------------------------------------------
    @property
    def two_sided(self):
        return self.mode is Mode.TWO_SIDED

    @property
    def subdim(self):
        return 0 if self.V is None else self.V.shape[1]

    def _is_duplicate(self, mu):
        scale = max(1.0, abs(mu))
        return any(abs(mu - p) <= DUPLICATE_TOL * scale for p in self.visited)

    def _directions_with_retry(self, mu, shifts):
        for _ in range(POLE_RETRIES + 1):
            try:
                return mu, self.directions(mu)
            except PoleError:
                new = perturb_shift(mu)
                log.info("shift %s is a pole; retrying at %s", mu, new)
                shifts.append((mu, new))
                mu = new
        raise PoleError(mu, f"still singular after {POLE_RETRIES} perturbations")

    def expand(self, points, shifts):
        """Expand the bases at ``points``; returns the number of new columns."""
        Vd, Wd = [], []
        for mu in points:
            mu = complex(mu)
            if self._is_duplicate(mu):
                # directions at a visited point already lie in the subspace
                log.debug("skipping revisited interpolation point %s", mu)
                continue
            used, (vd, wd) = self._directions_with_retry(mu, shifts)
            self.visited.append(mu)
            if used != mu:
                self.visited.append(used)
            Vd.append(vd)
            if wd is not None:
                Wd.append(wd)
        if not Vd:
            return 0
        k = self.dim
        V0 = self.V if self.V is not None else np.zeros((k, 0), complex)
        V1 = orthonormal_extend(V0, np.hstack(Vd), self.drop_tol)
        if self.two_sided:
            W0 = self.W if self.W is not None else np.zeros((k, 0), complex)
            W1 = orthonormal_extend(W0, np.hstack(Wd), self.drop_tol)
            # projection spaces must stay equal in dimension
            r = min(V1.shape[1], W1.shape[1])
            V1, W1 = V1[:, :r], W1[:, :r]
        else:
            W1 = V1
        added = V1.shape[1] - V0.shape[1]
        if added <= 0:
            return 0
        Vn = V1[:, V0.shape[1]:]
        Wn = W1[:, V0.shape[1]:]
        self.V, self.W = V1, W1
        self.grow(Vn, Wn if self.two_sided else Vn)
        return added

    def set_basis(self, V, W=None):
        """Start from explicit orthonormal bases instead of interpolation points."""
        V = np.asarray(V, dtype=complex)
        W = V if (W is None or not self.two_sided) else np.asarray(W, dtype=complex)
        if V.shape != W.shape:
            raise ValueError("initial bases must have the same shape")
        self.V, self.W = V, W
        self.grow(V, W)

    def run(self, init_points=None, init_basis=None, radius=1.0, seed=0):
        """Iterate until the ``k_eigs`` closest Ritz pairs have converged."""
        rng = np.random.default_rng(seed)
        report = SolveReport(self.tau, self.k_eigs, self.strategy, self.mode)
        start = time.perf_counter()
        shifts = []
        if init_basis is not None:
            V0, W0 = init_basis if isinstance(init_basis, tuple) else (init_basis, None)
            self.set_basis(V0, W0)
            points = []
        else:
            if init_points is None:
                count = self.initial_count()
                init_points = initial_points(self.tau, count, radius, rng)
            points = [complex(p) for p in init_points]
            self.expand(points, shifts)

        last = None
        for it in range(1, self.max_iter + 1):
            if it > 1:
                shifts = []
                grown = self.expand(points, shifts)
                if grown == 0:
                    report.message = "subspace stagnated: no new directions at the selected points"
                    break
            cands = self.candidates(self.k_eigs)
            if not cands:
                raise ReducedSpectrumEmpty("reduced spectrum empty: no admissible eigenvalue of the projected problem")
            lams = [c[0] for c in cands]
            res = [self.residual(lam, v) for lam, v in cands]
            rec = IterationRecord(
                iter=it,
                points=list(points),
                candidates=lams,
                residuals=res,
                subdim=self.subdim,
                nfact=self.counter.factorizations,
                elapsed=time.perf_counter() - start,
                pole_shifts=list(shifts),
            )
            report.iterations.append(rec)
            last = (cands, res)
            log.info("iter %d: r=%d residuals=%s", it, self.subdim, ["%.2e" % r for r in res])
            if len(cands) >= self.k_eigs and all(r < self.tol for r in res):
                report.converged = True
                report.message = "converged"
                break
            sel = select_points(lams, res, self.tol, self.strategy)
            if not sel:
                # all candidates converged but fewer than k_eigs exist yet
                z = rng.standard_normal(2)
                points = [self.tau + radius * complex(z[0], z[1])]
            else:
                points = [lams[i] for i in sel]
            rec.selected = list(points)
        else:
            report.message = f"no convergence within max_iter={self.max_iter}"

        if last is not None:
            cands, res = last
            report.estimates = [
                EigEstimate(lam=complex(lam), v_reduced=v, v_full=self.lift(v), residual=float(r), converged=r < self.tol)
                for (lam, v), r in zip(cands, res)
            ]
        report.counts = self.counter.as_dict()
        report.V, report.W = self.V, self.W
        return report
