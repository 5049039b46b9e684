import time
from contextlib import contextmanager
from math import factorial

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment
from hypothesis import settings

from nepspace.nep import ScalarFn, SplitNEP
from nepspace.rational import StateSpaceREP

settings.register_profile("nepspace", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("nepspace")


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_rep(rng, k, n, d=0, density=0.1, shift=0.0):
    """Random state-space problem with a sparse ``A`` (diagonal always present)."""
    A = sp.random(k, k, density=density, random_state=rng, data_rvs=rng.standard_normal)
    A = A + sp.diags(rng.standard_normal(k) + shift)
    B = rng.standard_normal((k, n))
    C = rng.standard_normal((n, k))
    P = tuple(rng.standard_normal((n, n)) for _ in range(d + 1)) if d > 0 else ()
    return StateSpaceREP(A=A, B=B, C=C, P=P)


def diag_example(P0=0.0):
    """``A = diag(1, 3)``, ``B = [1; 1]``, ``C = [1 1]``; zero of ``R`` at 2 when ``P0 = 0``."""
    return StateSpaceREP(A=sp.diags([1.0, 3.0]), B=[[1.0], [1.0]], C=[[1.0, 1.0]], P=([[P0]],))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def same_values(a, b, atol):
    """True when ``a`` and ``b`` match one-to-one within ``atol`` (optimal assignment)."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.shape != b.shape:
        return False
    cost = np.abs(a[:, None] - b[None, :])
    i, j = linear_sum_assignment(cost)
    return bool(np.all(cost[i, j] <= atol))


def random_split(rng, n, density=0.3):
    """Random five-term split problem, holomorphic on ``|s| < 2``."""
    fns = [
        ScalarFn.constant(1.0),
        ScalarFn.monomial(1, -1.0),
        ScalarFn.exponential(-0.5, 0.3),
        ScalarFn.sqrt_branch(-3.0, 0.2),
        ScalarFn.rational((1.0,), (4.0, 1.0), 0.5),
    ]
    terms = []
    for f in fns:
        T = sp.random(n, n, density=density, random_state=rng, data_rvs=rng.standard_normal)
        terms.append((f, sp.csc_matrix(T + sp.diags(rng.standard_normal(n)))))
    return SplitNEP(tuple(terms))


def linear_split(T1, T2):
    """``T(s) = T1 - s T2``."""
    return SplitNEP(((ScalarFn.constant(1.0), sp.csc_matrix(T1)), (ScalarFn.monomial(1, -1.0), sp.csc_matrix(T2))))


def reduced_derivs(sys, WAV, WV, WB, CV, s, up_to):
    """Derivatives of ``P(s) + CV (s W^*V - W^*AV)^{-1} W^*B`` computed densely."""
    K = np.linalg.inv(s * WV - WAV)
    out = []
    X = K @ WB
    for j in range(up_to + 1):
        out.append((-1) ** j * factorial(j) * (CV @ X) + sys.eval_P(s, j))
        X = K @ (WV @ X)
    return out


# -- acceptance verdicts ------------------------------------------------------

ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Context manager recording PASS/FAIL and runtime for one acceptance criterion."""
    results = request.config.stash.setdefault(ACCEPTANCE, {})

    @contextmanager
    def check(number, title):
        t0 = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            msg = (str(exc).strip().splitlines() or [type(exc).__name__])[0]
            results[number] = ("FAIL", title, f"{time.perf_counter() - t0:.1f}s, {msg[:120]}")
            raise
        results[number] = ("PASS", title, f"{time.perf_counter() - t0:.1f}s")

    return check


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(ACCEPTANCE, None)
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(results):
        status, title, detail = results[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title} ({detail})")
