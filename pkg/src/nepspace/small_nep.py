"""Dense solvers for small nonlinear eigenproblems.

Polynomial problems go through the first companion pencil.  Everything else
is handled by a contour-integral (probing) method: block moments of
``T(s)^{-1}`` over a circle are compressed by an SVD to a small linear
eigenproblem whose eigenvalues are those of ``T`` inside the circle.  Every
accepted pair is polished by Newton's method on a bordered system.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dense import dense_solve, inf_norm, normalize_inf, pencil_eigs
from .errors import DecompositionError, IncreaseProbes, SingularMatrixError
from .report import closeness_key

log = logging.getLogger(__name__)

RANK_TOL = 1e-11
RESIDUAL_TOL = 1e-8
MAX_MOMENTS = 4


@dataclass(frozen=True)
class Contour:
    """Circle with ``nodes`` trapezoid points and ``probe_cols`` probe vectors."""

    center: complex
    radius: float
    nodes: int = 64
    probe_cols: int = 6

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("contour radius must be positive")
        if self.nodes < 16 or self.nodes % 2:
            raise ValueError("contour needs an even number of at least 16 nodes")
        if self.probe_cols < 1:
            raise ValueError("contour needs at least one probe column")


def thread_count():
    """Worker threads for node evaluations, from ``NEPSPACE_THREADS``."""
    raw = os.environ.get("NEPSPACE_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def companion_eigs(P, tau=0.0, want=None):
    """Eigenpairs of ``P(s) = P_0 + s P_1 + ... + s^d P_d`` nearest ``tau``.

    Uses the pencil ``[[P_{d-1} ... P_0], [-I, 0 ...], ...] - s diag(-P_d, -I, ...)``
    acting on ``[s^{d-1} v; ...; v]``; the eigenvector is the last block.
    """
    P = [np.atleast_2d(np.asarray(c, dtype=complex)) for c in P]
    d = len(P) - 1
    if d < 1:
        raise ValueError("companion_eigs needs degree >= 1")
    if not np.any(P[-1]):
        raise ValueError("leading coefficient is zero")
    n = P[0].shape[0]
    N = n * d
    Acal = np.zeros((N, N), complex)
    Bcal = np.zeros((N, N), complex)
    for i in range(d):
        Acal[:n, i * n:(i + 1) * n] = P[d - 1 - i]
    Bcal[:n, :n] = -P[d]
    for i in range(d - 1):
        Acal[(i + 1) * n:(i + 2) * n, i * n:(i + 1) * n] = -np.eye(n)
        Bcal[(i + 1) * n:(i + 2) * n, (i + 1) * n:(i + 2) * n] = -np.eye(n)
    eig = pencil_eigs(Acal, Bcal)
    pairs = [(complex(lam), normalize_inf(eig.vectors[N - n:, i])) for i, lam in enumerate(eig.values)]
    pairs.sort(key=lambda p: closeness_key(tau)(p[0]))
    return pairs if want is None else pairs[:want]


def newton_refine(eval_T, eval_dT, lam, v, steps=8, scale=None):
    """Polish ``(lam, v)`` with Newton's method on ``T(lam) v = 0, u^H v = 1``.

    Returns ``(lam, v, residual)`` for the iterate with the smallest residual.
    ``scale`` floors the norm of ``T`` in the residual; it defaults to
    ``||T(lam)||_inf`` at the starting point.
    """
    if scale is None:
        scale = inf_norm(eval_T(lam))
    v = normalize_inf(np.asarray(v, dtype=complex))
    u = v.conj() / np.vdot(v, v).real
    n = v.shape[0]
    best = (lam, v, _rel_residual(eval_T(lam), v, scale))
    for _ in range(steps):
        T = eval_T(lam)
        J = np.zeros((n + 1, n + 1), complex)
        J[:n, :n] = T
        J[:n, n] = eval_dT(lam) @ v
        J[n, :n] = u
        rhs = np.concatenate([-(T @ v), [0.0]])
        try:
            step = dense_solve(J, rhs)
        except SingularMatrixError:
            break
        v = v + step[:n]
        lam = lam + step[n]
        if not np.isfinite(lam) or not np.all(np.isfinite(v)):
            break
        res = _rel_residual(eval_T(lam), v, scale)
        if res < best[2]:
            best = (lam, normalize_inf(v), res)
        if abs(step[n]) <= 1e-15 * max(1.0, abs(lam)):
            break
    return best


def _rel_residual(T, v, scale=0.0):
    """``||T v||_inf / (||T||_inf ||v||_inf)``.

    ``||T||_inf`` is floored by ``scale``: at an exact eigenvalue of a tiny
    problem (``1 x 1`` in the extreme) the norm of ``T(lam)`` itself vanishes.
    """
    nv = np.max(np.abs(v))
    nT = max(inf_norm(T), scale)
    if nv == 0 or nT == 0:
        return 0.0 if nv else np.inf
    return float(np.max(np.abs(T @ v)) / (nT * nv))


def _moments(eval_T, contour, probes, count, rotation, threads):
    N = contour.nodes
    theta = 2 * np.pi * (np.arange(N) + rotation) / N
    zeta = np.exp(1j * theta)
    nodes = contour.center + contour.radius * zeta

    def node_solve(z):
        return dense_solve(eval_T(z), probes)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sols = list(pool.map(node_solve, nodes))
    else:
        sols = [node_solve(z) for z in nodes]
    # fixed summation order keeps runs reproducible
    out = []
    for p in range(count):
        acc = np.zeros_like(sols[0])
        for i in range(N):
            acc += zeta[i] ** (p + 1) * sols[i]
        out.append(acc / N)
    return out


def _hankel(M, moments, shift):
    return np.block([[moments[i + j + shift] for j in range(M)] for i in range(M)])


def contour_eigs(eval_T, contour, want=None, tau=None, rng=None, eval_dT=None, threads=None,
                 residual_tol=RESIDUAL_TOL, rank_tol=RANK_TOL):
    """Eigenpairs of ``T`` inside a circle, nearest ``tau`` first.

    Parameters
    ----------
    eval_T : callable
        ``s -> T(s)`` as a dense ``n x n`` array, holomorphic inside ``contour``.
    contour : Contour
    want : int, optional
        Maximum number of pairs returned.
    tau : complex, optional
        Sort target; defaults to the contour center.
    rng : numpy Generator, optional
        Source of the probe block.
    eval_dT : callable, optional
        ``s -> T'(s)``; enables Newton polishing of every pair.

    Raises
    ------
    IncreaseProbes
        If the moment matrix has full rank even with the maximal number of
        moments, so that eigenvalues may be missing.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    tau = contour.center if tau is None else complex(tau)
    threads = thread_count() if threads is None else threads
    Tc = np.asarray(eval_T(contour.center))
    n = Tc.shape[0]
    scale = inf_norm(Tc)
    p = min(contour.probe_cols, n)
    probes = rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p))

    moments = None
    for rotation in (0.0, 0.5, 0.25, 0.75):
        try:
            moments = _moments(eval_T, contour, probes, 2 * MAX_MOMENTS, rotation, threads)
            break
        except SingularMatrixError:
            log.info("contour node hit an eigenvalue; rotating nodes")
    if moments is None:
        raise SingularMatrixError("T(s) singular at contour nodes for every rotation")

    for M in range(2, MAX_MOMENTS + 1):
        H0 = _hankel(M, moments, 0)
        H1 = _hankel(M, moments, 1)
        try:
            U, s, Wh = np.linalg.svd(H0, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise DecompositionError("SVD", H0.shape) from exc
        if s.size == 0 or s[0] == 0:
            return []
        rank = int(np.count_nonzero(s > rank_tol * s[0]))
        capacity = min(H0.shape)
        if rank < capacity:
            break
        log.debug("moment rank saturated at M=%d (rank %d)", M, rank)
    else:
        raise IncreaseProbes(rank, capacity)

    U0, s0, W0 = U[:, :rank], s[:rank], Wh[:rank].conj().T
    red = U0.conj().T @ H1 @ W0 / s0
    zeta, S = np.linalg.eig(red)
    lams = contour.center + contour.radius * zeta
    vecs = U0[:n] @ S

    out = []
    for i, lam in enumerate(lams):
        v = vecs[:, i]
        if not np.all(np.isfinite(v)) or not np.any(v):
            continue
        if eval_dT is not None:
            lam, v, res = newton_refine(eval_T, eval_dT, complex(lam), v, scale=scale)
        else:
            v = normalize_inf(v)
            res = _rel_residual(eval_T(lam), v, scale)
        if abs(lam - contour.center) > contour.radius * (1 + 1e-10):
            continue
        if not res <= residual_tol:
            continue
        if any(abs(lam - mu) <= 1e-10 * max(1.0, abs(mu)) for mu, _ in out):
            continue
        out.append((complex(lam), v))
    out.sort(key=lambda pr: closeness_key(tau)(pr[0]))
    return out if want is None else out[:want]


def contour_solve(eval_T, center, radius, want, tau=None, rng=None, eval_dT=None, nodes=64, probes=None,
                  threads=None, residual_tol=RESIDUAL_TOL):
    """:func:`contour_eigs` with automatic probe growth on rank saturation."""
    n = np.asarray(eval_T(center)).shape[0]
    cols = (want + 4) if probes is None else probes
    while True:
        c = Contour(complex(center), float(radius), nodes, min(cols, n))
        try:
            return contour_eigs(eval_T, c, want, tau, rng, eval_dT, threads, residual_tol)
        except IncreaseProbes as exc:
            if cols >= n:
                raise
            log.info("contour rank saturated (%s); doubling probes", exc)
            cols = min(2 * cols, n)
