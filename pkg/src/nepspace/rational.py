"""Rational eigenvalue problems in transfer-function form.

A problem is ``R(s) = P(s) + C (sI - A)^{-1} B`` with a large sparse ``A``
(``k x k``), tall ``B`` (``k x n``), wide ``C`` (``n x k``) and a small matrix
polynomial ``P(s) = P_0 + s P_1 + ... + s^d P_d``.  Polynomial coefficients
are always stored in ascending order of degree.
"""

from dataclasses import dataclass, field
from functools import cached_property
from math import factorial

import numpy as np
import scipy.sparse as sp

from .dense import inf_norm
from .errors import PoleError, SingularMatrixError
from .sparse import as_csc, factorize, speye


@dataclass(frozen=True)
class StateSpaceREP:
    """``R(s) = P(s) + C (sI - A)^{-1} B``.

    ``P`` is a tuple of dense ``n x n`` coefficients, possibly empty (a proper
    problem).
    """

    A: sp.csc_matrix
    B: np.ndarray
    C: np.ndarray
    P: tuple = ()

    def __post_init__(self):
        A = as_csc(self.A)
        B = np.atleast_2d(np.asarray(self.B, dtype=complex))
        C = np.atleast_2d(np.asarray(self.C, dtype=complex))
        P = tuple(np.atleast_2d(np.asarray(p, dtype=complex)) for p in self.P)
        k = A.shape[0]
        if A.shape != (k, k) or k < 1:
            raise ValueError(f"A must be square and nonempty, got {A.shape}")
        if B.shape[0] != k:
            raise ValueError(f"B must have {k} rows, got {B.shape}")
        n = B.shape[1]
        if C.shape != (n, k):
            raise ValueError(f"C must be {n}x{k}, got {C.shape}")
        for i, p in enumerate(P):
            if p.shape != (n, n):
                raise ValueError(f"P[{i}] must be {n}x{n}, got {p.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "P", P)

    @property
    def k(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.B.shape[1]

    @property
    def lin_coeffs(self):
        """Coefficients ``P_0..P_d`` used by the linearization (``d >= 1``).

        A proper or constant problem is padded to degree one with ``P_1 = 0``.
        """
        P = list(self.P) if self.P else [np.zeros((self.n, self.n), complex)]
        if len(P) == 1:
            P.append(np.zeros((self.n, self.n), complex))
        return P

    @property
    def d(self):
        return len(self.lin_coeffs) - 1

    def eval_P(self, s, deriv=0):
        """``P^{(deriv)}(s)`` by Horner's rule."""
        out = np.zeros((self.n, self.n), complex)
        for i in range(len(self.P) - 1, deriv - 1, -1):
            c = factorial(i) / factorial(i - deriv)
            out = out * s + c * self.P[i]
        return out

    @cached_property
    def blocks_inf_norm(self):
        """``|| [[A, B], [C, 0]] ||_inf`` without forming the block matrix."""
        top = np.asarray(abs(self.A).sum(axis=1)).ravel() + np.abs(self.B).sum(axis=1)
        bottom = np.abs(self.C).sum(axis=1)
        return float(max(top.max(initial=0.0), bottom.max(initial=0.0)))


@dataclass(frozen=True)
class RationalTerm:
    """One summand ``p(s)/d(s) * L U^*`` of a partial-fraction problem.

    ``p`` and ``d`` are scalar polynomial coefficients (ascending); ``d`` is
    monic and ``deg p < deg d``.
    """

    p: np.ndarray
    d: np.ndarray
    L: np.ndarray
    U: np.ndarray


@dataclass(frozen=True)
class PartialFractionREP:
    """``R(s) = P(s) + sum_j p_j(s)/d_j(s) L_j U_j^*``."""

    terms: tuple
    P: tuple = ()

    def eval(self, s):
        n = self.terms[0].L.shape[0]
        out = np.zeros((n, n), complex)
        for i in range(len(self.P) - 1, -1, -1):
            out = out * s + np.asarray(self.P[i], complex)
        for t in self.terms:
            ratio = np.polynomial.polynomial.polyval(s, t.p) / np.polynomial.polynomial.polyval(s, t.d)
            out = out + ratio * (np.asarray(t.L, complex) @ np.asarray(t.U, complex).conj().T)
        return out


def _trim(c):
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    nz = np.flatnonzero(c != 0)
    return c[: nz[-1] + 1] if nz.size else c[:1] * 0


def realize(pf):
    """State-space realization of a partial-fraction rational problem.

    Each term ``p/d * L U^*`` with ``deg d = kj`` and ``rank = rj`` becomes
    ``rj`` copies of the controllable companion form of ``d``: exactly
    ``kj * rj`` states, so the total state dimension is ``sum_j rj kj``.
    """
    if not pf.terms:
        raise ValueError("realize needs at least one rational term")
    n = np.asarray(pf.terms[0].L).shape[0]
    A_blocks, B_rows, C_cols = [], [], []
    for idx, t in enumerate(pf.terms):
        d = _trim(t.d)
        p = _trim(t.p)
        kj = len(d) - 1
        if kj < 1:
            raise ValueError(f"term {idx}: denominator must have degree >= 1")
        if d[-1] != 1:
            raise ValueError(f"term {idx}: denominator must be monic (leading coefficient {d[-1]})")
        if len(p) > kj and np.any(p[kj:] != 0):
            raise ValueError(f"term {idx}: numerator degree must be below denominator degree {kj}")
        L = np.atleast_2d(np.asarray(t.L, dtype=complex))
        U = np.atleast_2d(np.asarray(t.U, dtype=complex))
        if L.shape[0] != n or U.shape != L.shape:
            raise ValueError(f"term {idx}: L and U must both be {n} x r")
        rj = L.shape[1]
        Ac = np.zeros((kj, kj), complex)
        Ac[:-1, 1:] = np.eye(kj - 1)
        Ac[-1, :] = -d[:kj]
        bc = np.zeros((kj, 1), complex)
        bc[-1, 0] = 1.0
        cc = np.zeros((1, kj), complex)
        cc[0, : len(p)] = p[:kj]
        Ir = np.eye(rj)
        A_blocks.append(sp.kron(sp.identity(rj), sp.csc_matrix(Ac)))
        B_rows.append(np.kron(Ir, bc) @ U.conj().T)
        C_cols.append(L @ np.kron(Ir, cc))
    A = sp.block_diag(A_blocks, format="csc")
    return StateSpaceREP(A=A, B=np.vstack(B_rows), C=np.hstack(C_cols), P=tuple(pf.P))


def _resolvent_factor(sys, s, counter=None):
    try:
        return factorize(s * speye(sys.k) - sys.A, shift=s, counter=counter)
    except SingularMatrixError as exc:
        raise PoleError(s, "s is an eigenvalue of A") from exc


def eval_R(sys, s):
    """Dense ``R(s) = P(s) + C (sI - A)^{-1} B``."""
    F = _resolvent_factor(sys, s)
    return sys.eval_P(s) + sys.C @ F.solve(sys.B)


def eval_R_derivs(sys, s, up_to):
    """``[R(s), R'(s), ..., R^{(up_to)}(s)]`` in closed form.

    Uses ``d^j/ds^j (sI - A)^{-1} = (-1)^j j! (sI - A)^{-(j+1)}``.
    """
    F = _resolvent_factor(sys, s)
    X = F.solve(sys.B)
    out = []
    for j in range(up_to + 1):
        out.append((-1) ** j * factorial(j) * (sys.C @ X) + sys.eval_P(s, j))
        X = F.solve(X)
    return out


@dataclass(frozen=True)
class Linearization:
    """The pencil ``Acal - s Bcal`` of size ``k + n d``.

    Layout for ``z = [x; s^{d-1} v; ...; v]``::

        Acal = [[A, 0 ... 0, B], [C, P_{d-1} ... P_0], [0, -I, 0 ...], ...]
        Bcal = diag(I, -P_d, -I, ..., -I)
    """

    Acal: sp.csc_matrix
    Bcal: sp.csc_matrix
    k: int
    n: int
    d: int
    denominator_norm: float = field(default=0.0)


def build_linearization(sys):
    """Linearization of ``sys`` with ``F = I``."""
    k, n = sys.k, sys.n
    P = sys.lin_coeffs
    d = len(P) - 1
    nd = n * d
    top = [sys.A] + [None] * (d - 1) + [sp.csc_matrix(sys.B)]
    rows = [top]
    rows.append([sp.csc_matrix(sys.C)] + [sp.csc_matrix(P[d - 1 - i]) for i in range(d)])
    for i in range(d - 1):
        row = [None] * (d + 1)
        row[1 + i] = -speye(n)
        rows.append(row)
    Acal = sp.bmat(rows, format="csc", dtype=complex)
    lower = [sp.csc_matrix(-P[d])] + [-speye(n)] * (d - 1)
    Bcal = sp.block_diag([speye(k)] + lower, format="csc")
    Acal.eliminate_zeros()
    Bcal.eliminate_zeros()
    assert Acal.shape == (k + nd, k + nd)
    return Linearization(Acal=as_csc(Acal), Bcal=as_csc(Bcal), k=k, n=n, d=d, denominator_norm=sys.blocks_inf_norm)


def embed_reduced(v_reduced, V, nd):
    """``diag(V, I_{nd}) v`` for a reduced vector of length ``r + nd``."""
    r = V.shape[1]
    v_reduced = np.asarray(v_reduced, dtype=complex)
    if v_reduced.shape[0] != r + nd:
        raise ValueError(f"reduced vector has length {v_reduced.shape[0]}, expected {r + nd}")
    return np.concatenate([V @ v_reduced[:r], v_reduced[r:]])


def residual_rational(sys, lin, lam, v_reduced, V):
    """Relative residual of a Ritz pair of the projected pencil.

    ``||L(lam) diag(V, I) v||_inf / ||v||_inf`` divided by
    ``|lam| + ||[[A, B], [C, 0]]||_inf``; ``v`` is the reduced vector.
    """
    v_reduced = np.asarray(v_reduced, dtype=complex)
    vn = np.max(np.abs(v_reduced)) if v_reduced.size else 0.0
    if vn == 0.0:
        raise ValueError("residual of a zero vector is undefined")
    z = embed_reduced(v_reduced, V, lin.n * lin.d)
    res = lin.Acal @ z - lam * (lin.Bcal @ z)
    num = np.max(np.abs(res)) / vn
    return float(num / (abs(lam) + lin.denominator_norm))


def densify_linearization(lin):
    return lin.Acal.toarray(), lin.Bcal.toarray()
