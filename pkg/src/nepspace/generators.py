"""Seeded synthetic test problems."""

import numpy as np
import scipy.sparse as sp

from .nep import ScalarFn, SplitNEP
from .rational import StateSpaceREP


def generate_banded(k, bandwidth=5, n_io=2, seed=0):
    """Rational problem ``C (sI - A)^{-1} B`` with a random banded ``A``.

    ``A`` has standard normal entries on the ``bandwidth`` central diagonals;
    ``B`` (``k x n_io``) and ``C`` (``n_io x k``) are dense standard normal.
    """
    if bandwidth < 1 or bandwidth % 2 == 0:
        raise ValueError("bandwidth must be a positive odd number")
    if n_io < 1 or k < 1:
        raise ValueError("k and n_io must be positive")
    rng = np.random.default_rng(seed)
    h = min(bandwidth // 2, k - 1)
    offsets = list(range(-h, h + 1))
    diags = [rng.standard_normal(k - abs(o)) for o in offsets]
    A = sp.diags(diags, offsets, shape=(k, k), format="csc")
    B = rng.standard_normal((k, n_io))
    C = rng.standard_normal((n_io, k))
    return StateSpaceREP(A=A, B=B, C=C)


def _sym_sprandn(n, density, rng):
    M = sp.random(n, n, density=density, random_state=rng, data_rvs=rng.standard_normal, format="csc")
    return sp.csc_matrix((M + M.T) * 0.5)


def generate_delay(n, density=0.05, g_scale=0.1, seed=0):
    """``T(s) = F - s I + exp(-2 s) G`` with sparse symmetric random ``F`` and ``G``."""
    if not (0 < density <= 1):
        raise ValueError("density must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    F = _sym_sprandn(n, density, rng)
    G = _sym_sprandn(n, density, rng) * g_scale
    return SplitNEP((
        (ScalarFn.constant(1.0), F),
        (ScalarFn.monomial(1, -1.0), sp.identity(n, format="csc")),
        (ScalarFn.exponential(-2.0), G),
    ))


def generate_quadratic(n, density=0.05, seed=0):
    """``T(s) = K + s C + s^2 M`` with sparse random ``K``, ``C`` and diagonal ``M > 0``."""
    if not (0 < density <= 1):
        raise ValueError("density must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    K = _sym_sprandn(n, density, rng) + sp.identity(n) * 2.0
    C = sp.random(n, n, density=density, random_state=rng, data_rvs=rng.standard_normal, format="csc") * 0.5
    M = sp.diags(rng.uniform(1.0, 2.0, n), format="csc")
    return SplitNEP((
        (ScalarFn.constant(1.0), K),
        (ScalarFn.monomial(1), C),
        (ScalarFn.monomial(2), M),
    ))
