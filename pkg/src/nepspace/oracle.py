"""Brute-force reference solutions for small problems.

These routines make no attempt at efficiency; they exist to check the
subspace solvers against answers obtained by an independent route.
"""

import numpy as np
import scipy.linalg as sla

from .dense import EPS, pencil_eigs
from .errors import NoConvergence
from .rational import build_linearization, densify_linearization
from .report import closeness_key
from .small_nep import companion_eigs, contour_solve

REP_SIZE_CAP = 2000
NEP_SIZE_CAP = 300


def oracle_rep(sys, tau, k_eigs):
    """The ``k_eigs`` eigenvalues of ``R`` closest to ``tau`` from the dense pencil.

    Pencil eigenvalues that coincide (within ``1e-10``) with eigenvalues of
    ``A`` are discarded: they are uncontrollable or unobservable modes, not
    eigenvalues of ``R``.
    """
    lin = build_linearization(sys)
    N = lin.Acal.shape[0]
    if N > REP_SIZE_CAP:
        raise ValueError(f"oracle_rep is limited to pencils of size {REP_SIZE_CAP}, got {N}")
    Acal, Bcal = densify_linearization(lin)
    vals = pencil_eigs(Acal, Bcal).values
    poles = sla.eigvals(sys.A.toarray())
    keep = [complex(v) for v in vals if not np.any(np.abs(poles - v) <= 1e-10 * max(1.0, abs(v)))]
    keep.sort(key=closeness_key(complex(tau)))
    return keep[:k_eigs]


def oracle_scalar_root(f, df, guess, tol=1e-14, max_steps=200, scale=None):
    """Newton's method for a scalar root, to ``|f| <= tol * scale``.

    ``scale`` defaults to ``max(1, |f(guess)|)``.
    """
    s = complex(guess)
    fs = complex(f(s))
    if scale is None:
        scale = max(1.0, abs(fs))
    for _ in range(max_steps):
        if abs(fs) <= tol * scale:
            return s
        d = complex(df(s))
        if d == 0:
            raise NoConvergence(f"zero derivative at {s}")
        step = fs / d
        s -= step
        fs = complex(f(s))
        if abs(step) <= 2 * EPS * max(1.0, abs(s)):
            # no further progress is possible in floating point
            if abs(fs) <= 100 * tol * scale:
                return s
            raise NoConvergence(f"Newton stalled at {s} with |f| = {abs(fs):.3e}")
    if abs(fs) <= tol * scale:
        return s
    raise NoConvergence(f"Newton did not converge in {max_steps} steps (|f| = {abs(fs):.3e})")


def oracle_nep(nep, tau, k_eigs, region_radius=1.0, rng=None):
    """The ``k_eigs`` eigenvalues of a small split problem closest to ``tau``.

    Matrix polynomials use the dense companion pencil.  Other problems use a
    fine contour (256 nodes, ``k_eigs + 8`` probes) on the disk of radius
    ``region_radius`` about ``tau``.
    """
    if nep.n > NEP_SIZE_CAP:
        raise ValueError(f"oracle_nep is limited to n <= {NEP_SIZE_CAP}, got {nep.n}")
    if nep.is_polynomial:
        return [lam for lam, _ in companion_eigs(nep.poly_coeffs(), tau, k_eigs)]
    rng = np.random.default_rng(12345) if rng is None else rng
    pairs = contour_solve(nep.eval, tau, region_radius, k_eigs, tau, rng,
                          eval_dT=lambda s: nep.eval(s, 1), nodes=256, probes=k_eigs + 8)
    return [lam for lam, _ in pairs]
