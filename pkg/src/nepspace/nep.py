"""Split-form nonlinear eigenvalue problems ``T(s) = sum_j f_j(s) T_j``.

The scalar functions carry closed-form derivatives of every order, so the
derivative chains of ``A(s)^{-1} B(s)`` used for Hermite interpolation are
exact.
"""

from dataclasses import dataclass, field
from functools import cached_property
from math import comb, factorial

import numpy as np
import numpy.polynomial.polynomial as npoly
import scipy.sparse as sp

from .dense import EPS, inf_norm
from .errors import PoleError, SingularMatrixError
from .sparse import as_csc, factorize

KINDS = ("monomial", "constant", "exponential", "sqrt", "rational")


@dataclass(frozen=True)
class ScalarFn:
    """A scalar function of ``s`` times ``coef``.

    kinds
        ``monomial``: ``coef * s**power``;
        ``constant``: ``coef``;
        ``exponential``: ``coef * exp(alpha s)``;
        ``sqrt``: ``coef * 1j * sqrt(s - shift)`` on the principal branch;
        ``rational``: ``coef * num(s) / den(s)`` with ascending coefficients
        and a monic ``den``.
    """

    kind: str
    coef: complex = 1.0
    power: int = 0
    alpha: complex = 0.0
    shift: complex = 0.0
    num: tuple = ()
    den: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scalar function kind '{self.kind}'")
        if self.kind == "monomial" and (int(self.power) != self.power or self.power < 0):
            raise ValueError("monomial power must be a nonnegative integer")
        if self.kind == "rational":
            den = np.trim_zeros(np.asarray(self.den, complex), "b")
            if den.size < 2:
                raise ValueError("rational denominator must have degree >= 1")
            if den[-1] != 1:
                raise ValueError("rational denominator must be monic")
            object.__setattr__(self, "den", tuple(complex(c) for c in den))
            object.__setattr__(self, "num", tuple(complex(c) for c in self.num) or (0j,))

    @classmethod
    def monomial(cls, power, coef=1.0):
        return cls("monomial", coef=coef, power=int(power))

    @classmethod
    def constant(cls, coef=1.0):
        return cls("constant", coef=coef)

    @classmethod
    def exponential(cls, alpha, coef=1.0):
        return cls("exponential", coef=coef, alpha=alpha)

    @classmethod
    def sqrt_branch(cls, shift, coef=1.0):
        return cls("sqrt", coef=coef, shift=shift)

    @classmethod
    def rational(cls, num, den, coef=1.0):
        return cls("rational", coef=coef, num=tuple(num), den=tuple(den))

    @property
    def is_polynomial(self):
        return self.kind in ("monomial", "constant")

    @property
    def degree(self):
        """Polynomial degree (only for polynomial kinds)."""
        return self.power if self.kind == "monomial" else 0

    def __call__(self, s):
        return fn_derivs(self, s, 0)[0]


def _taylor(c, s, up_to):
    """Taylor coefficients of the polynomial ``c`` about ``s``."""
    out = np.zeros(up_to + 1, complex)
    for j in range(up_to + 1):
        out[j] = npoly.polyval(s, npoly.polyder(c, j)) / factorial(j) if j < len(c) else 0.0
    return out


def fn_derivs(f, s, up_to):
    """``[f(s), f'(s), ..., f^{(up_to)}(s)]`` in closed form."""
    s = complex(s)
    c = complex(f.coef)
    out = np.zeros(up_to + 1, complex)
    if f.kind == "constant":
        out[0] = c
    elif f.kind == "monomial":
        p = f.power
        for j in range(min(p, up_to) + 1):
            out[j] = c * factorial(p) / factorial(p - j) * s ** (p - j)
    elif f.kind == "exponential":
        a = complex(f.alpha)
        e = np.exp(a * s)
        for j in range(up_to + 1):
            out[j] = c * a**j * e
    elif f.kind == "sqrt":
        z = s - complex(f.shift)
        if z == 0:
            raise PoleError(s, "branch point of the square root")
        w = np.sqrt(z)  # principal branch
        # d^j/ds^j z^{1/2} = (1/2)(1/2 - 1)...(1/2 - j + 1) z^{1/2 - j}
        fall = 1.0
        for j in range(up_to + 1):
            out[j] = c * 1j * fall * w / z**j
            fall *= 0.5 - j
    else:
        num = np.asarray(f.num, complex)
        den = np.asarray(f.den, complex)
        dval = npoly.polyval(s, den)
        scale = npoly.polyval(abs(s), np.abs(den))
        if abs(dval) <= 10 * EPS * scale:
            raise PoleError(s, "zero of the rational denominator")
        a = _taylor(num, s, up_to)
        b = _taylor(den, s, up_to)
        # series division a = b * t
        t = np.zeros(up_to + 1, complex)
        for j in range(up_to + 1):
            t[j] = (a[j] - np.dot(b[1:j + 1], t[j - 1::-1][:j])) / b[0]
        out = c * t * np.array([factorial(j) for j in range(up_to + 1)], dtype=float)
    return [complex(x) for x in out]


@dataclass(frozen=True)
class SplitNEP:
    """``T(s) = sum_j f_j(s) T_j`` with sparse ``n x n`` coefficients."""

    terms: tuple

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a split-form problem needs at least one term")
        norm = []
        n = None
        for i, (f, T) in enumerate(self.terms):
            if not isinstance(f, ScalarFn):
                raise TypeError(f"term {i}: expected a ScalarFn")
            T = as_csc(T)
            if T.shape[0] != T.shape[1]:
                raise ValueError(f"term {i}: coefficient must be square, got {T.shape}")
            if n is None:
                n = T.shape[0]
            elif T.shape[0] != n:
                raise ValueError(f"term {i}: size {T.shape[0]} differs from {n}")
            norm.append((f, T))
        object.__setattr__(self, "terms", tuple(norm))

    @property
    def n(self):
        return self.terms[0][1].shape[0]

    @cached_property
    def term_norms(self):
        return np.array([inf_norm(T) for _, T in self.terms])

    @property
    def is_polynomial(self):
        return all(f.is_polynomial for f, _ in self.terms)

    def fvals(self, s, up_to=0):
        """``(kappa, up_to + 1)`` array of scalar derivatives at ``s``."""
        return np.array([fn_derivs(f, s, up_to) for f, _ in self.terms])

    def eval(self, s, deriv=0, dense=True):
        fv = self.fvals(s, deriv)[:, deriv]
        out = sp.csc_matrix((self.n, self.n), dtype=complex)
        for c, (_, T) in zip(fv, self.terms):
            if c != 0:
                out = out + c * T
        return out.toarray() if dense else as_csc(out)

    def apply(self, s, x):
        fv = self.fvals(s)[:, 0]
        return sum(c * (T @ x) for c, (_, T) in zip(fv, self.terms))

    def poly_coeffs(self):
        """Ascending dense coefficients of a polynomial problem."""
        if not self.is_polynomial:
            raise ValueError("problem is not a matrix polynomial")
        d = max(f.degree for f, _ in self.terms)
        P = [np.zeros((self.n, self.n), complex) for _ in range(d + 1)]
        for f, T in self.terms:
            P[f.degree] += complex(f.coef) * T.toarray()
        return P

    def permuted(self, perm):
        perm = np.asarray(perm)
        return SplitNEP(tuple((f, T[perm][:, perm]) for f, T in self.terms))


@dataclass(frozen=True)
class PartitionedNEP:
    """``T(s) = [[A(s), B(s)], [C(s), D(s)]]`` with a trailing ``m x m`` block.

    If ``perm`` is given, rows and columns of every coefficient are permuted
    first (``T_j[perm][:, perm]``); ``nep`` then refers to the permuted problem.
    """

    parent: SplitNEP
    m: int = 2
    perm: np.ndarray = None
    nep: SplitNEP = field(init=False, repr=False)

    def __post_init__(self):
        n = self.parent.n
        if not (1 <= self.m < n):
            raise ValueError(f"partition size m={self.m} must satisfy 1 <= m < n={n}")
        nep = self.parent
        if self.perm is not None:
            perm = np.asarray(self.perm, dtype=int)
            if sorted(perm.tolist()) != list(range(n)):
                raise ValueError("perm is not a permutation of range(n)")
            object.__setattr__(self, "perm", perm)
            nep = nep.permuted(perm)
        object.__setattr__(self, "nep", nep)

    @property
    def n(self):
        return self.nep.n

    @property
    def k(self):
        return self.n - self.m

    @cached_property
    def blocks(self):
        """Per-term ``(A_j sparse, B_j, C_j, D_j dense)``."""
        k = self.k
        out = []
        for _, T in self.nep.terms:
            out.append((
                as_csc(T[:k, :k]),
                T[:k, k:].toarray(),
                T[k:, :k].toarray(),
                T[k:, k:].toarray(),
            ))
        return out

    @property
    def fns(self):
        return [f for f, _ in self.nep.terms]


@dataclass
class BlockDerivs:
    """``A[i]``, ``B[i]``, ``C[i]``, ``D[i]`` hold the ``i``-th derivatives at ``s``."""

    s: complex
    A: list
    B: list
    C: list
    D: list


def eval_blocks(p, s, up_to):
    """Derivatives of the partition blocks at ``s`` up to order ``up_to``."""
    fv = p.nep.fvals(s, up_to)
    k, m = p.k, p.m
    A, B, C, D = [], [], [], []
    for i in range(up_to + 1):
        Ai = sp.csc_matrix((k, k), dtype=complex)
        Bi = np.zeros((k, m), complex)
        Ci = np.zeros((m, k), complex)
        Di = np.zeros((m, m), complex)
        for c, (Aj, Bj, Cj, Dj) in zip(fv[:, i], p.blocks):
            if c == 0:
                continue
            Ai = Ai + c * Aj
            Bi += c * Bj
            Ci += c * Cj
            Di += c * Dj
        A.append(as_csc(Ai))
        B.append(Bi)
        C.append(Ci)
        D.append(Di)
    return BlockDerivs(complex(s), A, B, C, D)


def solve_chain(p, s, q, adjoint=True, counter=None):
    """Derivative chains of ``X(s) = A(s)^{-1} B(s)`` and ``Y(s) = (C(s) A(s)^{-1})^H``.

    Returns ``(X, Y)`` with ``X[j]`` the ``j``-th derivative, ``j < q``; ``Y`` is
    None when ``adjoint`` is false.  One factorization of ``A(s)`` serves both
    chains through the Leibniz recurrence
    ``X^{(j)} = A^{-1} (B^{(j)} - sum_{i=1..j} binom(j, i) A^{(i)} X^{(j-i)})``.
    """
    if q < 1:
        raise ValueError("q must be positive")
    bd = eval_blocks(p, s, q - 1)
    try:
        F = factorize(bd.A[0], shift=s, counter=counter)
    except SingularMatrixError as exc:
        raise PoleError(s, "A(s) is singular") from exc
    X = []
    for j in range(q):
        rhs = bd.B[j].copy()
        for i in range(1, j + 1):
            rhs -= comb(j, i) * (bd.A[i] @ X[j - i])
        X.append(F.solve(rhs))
    if not adjoint:
        return X, None
    Y = []
    for j in range(q):
        rhs = bd.C[j].conj().T.copy()
        for i in range(1, j + 1):
            rhs -= comb(j, i) * (bd.A[i].conj().T @ Y[j - i])
        Y.append(F.solve(rhs, adjoint=True))
    return X, Y


def embed_split(v_reduced, V):
    """``diag(V, I_m) v``."""
    r = V.shape[1]
    v_reduced = np.asarray(v_reduced, dtype=complex)
    return np.concatenate([V @ v_reduced[:r], v_reduced[r:]])


def residual_split(nep, lam, v_reduced, V, m=None, embedded_norm=False):
    """Relative residual of a reduced eigenpair of a split-form problem.

    ``||T(lam) diag(V, I_m) v||_inf / ||v||_inf`` divided by
    ``sum_j |f_j(lam)| ||T_j||_inf``.  By default ``||v||_inf`` is the norm
    of the reduced vector; ``embedded_norm=True`` uses the embedded one.
    """
    v_reduced = np.asarray(v_reduced, dtype=complex)
    if m is not None and v_reduced.shape[0] != V.shape[1] + m:
        raise ValueError(f"reduced vector has length {v_reduced.shape[0]}, expected {V.shape[1] + m}")
    x = embed_split(v_reduced, V)
    vn = np.max(np.abs(x if embedded_norm else v_reduced), initial=0.0)
    if vn == 0.0:
        raise ValueError("residual of a zero vector is undefined")
    fv = nep.fvals(lam)[:, 0]
    res = sum(c * (T @ x) for c, (_, T) in zip(fv, nep.terms))
    denom = float(np.dot(np.abs(fv), nep.term_norms))
    return float(np.max(np.abs(res)) / vn / denom)
