from math import comb

import numpy as np
import numpy.polynomial.polynomial as npoly
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from nepspace.dense import inf_norm, orthonormal_extend, pencil_eigs, sigma_min
from nepspace.generators import generate_quadratic
from nepspace.nep import PartitionedNEP, ScalarFn, SplitNEP, eval_blocks, residual_split, solve_chain
from nepspace.nep_solver import ReducedSplitNEP, assemble_reduced, expand_nep, solve_nep, solve_reduced
from nepspace.oracle import oracle_nep, oracle_scalar_root
from nepspace.rational import StateSpaceREP
from nepspace.rep_solver import expand_two_sided, solve_rep

from conftest import crandn, linear_split, random_split, same_values


def schur_derivs(p, s, up_to):
    """Derivatives of ``C(s) A(s)^{-1} B(s) - D(s)`` via the exact chains."""
    X, _ = solve_chain(p, s, up_to + 1, adjoint=False)
    bd = eval_blocks(p, s, up_to)
    return [sum(comb(j, i) * (bd.C[i] @ X[j - i]) for i in range(j + 1)) - bd.D[j] for j in range(up_to + 1)]


def reduced_as_partition(red):
    """The reduced problem as a PartitionedNEP with the same scalar functions."""
    terms = tuple((f, sp.csc_matrix(red.term_matrix(j))) for j, f in enumerate(red.fns))
    return PartitionedNEP(SplitNEP(terms), m=red.m)


def span_distance(X, Y):
    Qx = np.linalg.qr(X)[0]
    Qy = np.linalg.qr(Y)[0]
    return np.linalg.norm(Qy - Qx @ (Qx.conj().T @ Qy), 2)


def pencil_as_split(A, B, C, D):
    """``[[A - sI, B], [C, D]]``: its Schur complement is ``D + C (sI - A)^{-1} B``."""
    k, n = B.shape
    T2 = np.zeros((k + n, k + n))
    T2[:k, :k] = np.eye(k)
    return linear_split(np.block([[A, B], [C, D]]), T2)


# -- expansion ----------------------------------------------------------------

def test_expand_nep_matches_power_chain(rng):
    k, n = 30, 2
    A, B, C, D = rng.standard_normal((k, k)), rng.standard_normal((k, n)), rng.standard_normal((n, k)), np.zeros((n, n))
    p = PartitionedNEP(pencil_as_split(A, B, C, D), m=n)
    sys = StateSpaceREP(A=sp.csc_matrix(A), B=B, C=C)
    mu = 0.3 + 0.2j
    Vd, Wd = expand_nep(p, mu, 2)
    Vr, Wr = expand_two_sided(sys, mu, 2)
    assert span_distance(Vd, Vr) <= 1e-10
    assert span_distance(Wd, Wr) <= 1e-10
    assert expand_nep(p, mu, 3, mode="one-sided")[1] is None


def test_expand_nep_constant_b(rng):
    nep = random_split(rng, 8)
    # keep only the constant function on the B block
    terms = []
    for j, (f, T) in enumerate(nep.terms):
        T = T.tolil()
        if j:
            T[:6, 6:] = 0
        terms.append((f, T.tocsc()))
    p = PartitionedNEP(SplitNEP(tuple(terms)), m=2)
    Vd, _ = expand_nep(p, 0.2, 2)
    bd = eval_blocks(p, 0.2, 1)
    X0 = np.linalg.solve(bd.A[0].toarray(), bd.B[0])
    assert np.allclose(Vd[:, 2:], np.linalg.solve(bd.A[0].toarray(), -(bd.A[1] @ X0)))


@given(st.integers(0, 2**32 - 1), st.integers(8, 50), st.integers(1, 3))
def test_interpolation_invariant(seed, n, m):
    rng = np.random.default_rng(seed)
    p = PartitionedNEP(random_split(rng, n), m=m)
    mu = complex(0.4 * rng.standard_normal(), 0.4 * rng.standard_normal())
    Vd, Wd = expand_nep(p, mu, 2)
    V = orthonormal_extend(np.zeros((p.k, 0), complex), Vd)
    W = orthonormal_extend(np.zeros((p.k, 0), complex), Wd)
    r = min(V.shape[1], W.shape[1])
    red = assemble_reduced(p, V[:, :r], W[:, :r])
    full = schur_derivs(p, mu, 3)
    mine = schur_derivs(reduced_as_partition(red), mu, 3)
    scale = np.abs(full[0]).max()
    assert np.abs(full[0] - mine[0]).max() <= 1e-8 * scale
    for j in (1, 2, 3):
        assert np.abs(full[j] - mine[j]).max() <= 1e-7 * max(scale, np.abs(full[j]).max())


def test_interpolation_matches_differences(rng):
    p = PartitionedNEP(random_split(rng, 20), m=2)
    mu = 0.1 - 0.2j
    Vd, Wd = expand_nep(p, mu, 2)
    red = assemble_reduced(p, np.linalg.qr(Vd)[0], np.linalg.qr(Wd)[0])
    rp = reduced_as_partition(red)
    h = 1e-5
    fd = (schur_derivs(p, mu + h, 0)[0] - schur_derivs(p, mu - h, 0)[0]) / (2 * h)
    fd_red = (schur_derivs(rp, mu + h, 0)[0] - schur_derivs(rp, mu - h, 0)[0]) / (2 * h)
    assert np.abs(fd - fd_red).max() <= 1e-6 * np.abs(fd).max()


# -- reduced problem -----------------------------------------------------------

def test_assemble_identity_is_full(rng):
    nep = random_split(rng, 7)
    p = PartitionedNEP(nep, m=2)
    red = assemble_reduced(p, np.eye(5))
    for s in (0.0, 0.3 - 0.1j):
        assert np.allclose(red.eval(s), nep.eval(s), rtol=0, atol=1e-14)
        assert np.allclose(red.eval(s, 2), nep.eval(s, 2), rtol=0, atol=1e-14)


def test_assemble_constant_term(rng):
    T = rng.standard_normal((6, 6))
    p = PartitionedNEP(SplitNEP(((ScalarFn.constant(2.0), sp.csc_matrix(T)),)), m=1)
    V = np.linalg.qr(rng.standard_normal((5, 3)))[0]
    W = np.linalg.qr(rng.standard_normal((5, 3)))[0]
    red = assemble_reduced(p, V, W)
    ref = 2 * np.block([[W.T @ T[:5, :5] @ V, W.T @ T[:5, 5:]], [T[5:, :5] @ V, T[5:, 5:]]])
    assert np.allclose(red.eval(0.7), ref)


def test_incremental_equals_one_shot(rng):
    p = PartitionedNEP(random_split(rng, 12), m=2)
    V = np.linalg.qr(crandn(rng, 10, 6))[0]
    W = np.linalg.qr(crandn(rng, 10, 6))[0]
    red = ReducedSplitNEP(p)
    for a, b in ((0, 2), (2, 5), (5, 6)):
        red.grow(W[:, :a], V[:, a:b], W[:, a:b])
    ref = assemble_reduced(p, V, W)
    assert np.allclose(red.eval(0.2 + 0.1j), ref.eval(0.2 + 0.1j), atol=1e-13)


def test_full_projection_keeps_eigenvalues(rng):
    nep = generate_quadratic(20, 0.2, seed=2)
    p = PartitionedNEP(nep, m=2)
    Q = np.linalg.qr(crandn(rng, 18, 18))[0]
    got = solve_reduced(assemble_reduced(p, Q), 0.0, 4)
    assert same_values([lam for lam, _ in got], oracle_nep(nep, 0.0, 4), 1e-9)


def det_scan_roots(P):
    """Roots of ``det(P0 + s P1 + s^2 P2)`` for 2 x 2 coefficients, by expanding the determinant."""
    entry = [[np.array([P[d][i, j] for d in range(3)]) for j in range(2)] for i in range(2)]
    det = npoly.polysub(npoly.polymul(entry[0][0], entry[1][1]), npoly.polymul(entry[0][1], entry[1][0]))
    return npoly.polyroots(det)


def test_solve_reduced_quadratic_companion(rng):
    P = [rng.standard_normal((3, 3)) for _ in range(3)]
    nep = SplitNEP(tuple((ScalarFn.monomial(d), sp.csc_matrix(P[d])) for d in range(3)))
    # one basis column and m = 1: the reduced problem is a 2 x 2 quadratic
    V = np.linalg.qr(rng.standard_normal((2, 1)))[0]
    red = assemble_reduced(PartitionedNEP(nep, m=1), V)
    coeffs = red.poly_coeffs()
    assert coeffs[0].shape == (2, 2)
    got = [lam for lam, _ in solve_reduced(red, 0.0, 4)]
    assert same_values(got, det_scan_roots(coeffs), 1e-9)


def test_solve_reduced_scalar_quadratic():
    nep = SplitNEP((
        (ScalarFn.constant(), sp.csc_matrix([[1.0, 0.0], [0.0, -1.0]])),
        (ScalarFn.monomial(2), sp.csc_matrix([[0.0, 0.0], [0.0, 1.0]])),
    ))
    red = assemble_reduced(PartitionedNEP(nep, m=1), np.zeros((1, 0)))
    got = solve_reduced(red, 0.9, 1)
    assert got[0][0] == pytest.approx(1.0, abs=1e-14)


def test_solve_reduced_scalar_delay():
    nep = SplitNEP((
        (ScalarFn.constant(), sp.csc_matrix([[1.0, 0.0], [0.0, 0.3]])),
        (ScalarFn.monomial(1, -1.0), sp.csc_matrix([[0.0, 0.0], [0.0, 1.0]])),
        (ScalarFn.exponential(-2.0, 0.1), sp.csc_matrix([[0.0, 0.0], [0.0, 1.0]])),
    ))
    red = assemble_reduced(PartitionedNEP(nep, m=1), np.zeros((1, 0)))
    root = oracle_scalar_root(lambda s: -s + 0.3 + 0.1 * np.exp(-2 * s), lambda s: -1 - 0.2 * np.exp(-2 * s), 0.3)
    got = solve_reduced(red, 0.3, 1, radius=0.5)
    assert abs(got[0][0] - root) <= 1e-10


# -- driver ---------------------------------------------------------------------

def test_solve_nep_linear_pencil(rng):
    T1 = rng.standard_normal((40, 40))
    nep = linear_split(T1, np.eye(40))
    ev = pencil_eigs(T1, np.eye(40)).values
    tau = ev[np.argmin(np.abs(ev.imag))].real + 0.05
    rep = solve_nep(nep, tau, 1, tol=1e-10)
    assert rep.converged
    assert np.min(np.abs(ev - rep.eigenvalues[0])) <= 1e-8


def test_solve_nep_2x2_delay():
    F = np.array([[0.0, 0.5], [0.5, 0.0]])
    G = 0.1 * np.eye(2)
    nep = SplitNEP((
        (ScalarFn.constant(), sp.csc_matrix(F)),
        (ScalarFn.monomial(1, -1.0), sp.identity(2, format="csc")),
        (ScalarFn.exponential(-2.0), sp.csc_matrix(G)),
    ))

    def det(s):
        return np.linalg.det(F - s * np.eye(2) + np.exp(-2 * s) * G)

    def ddet(s):
        g = -s + 0.1 * np.exp(-2 * s)
        return 2 * g * (-1 - 0.2 * np.exp(-2 * s))

    roots = [oracle_scalar_root(det, ddet, g) for g in (-0.3, 0.5)]
    ref = min(roots, key=abs)
    rep = solve_nep(nep, 0.0, 1, m=1)
    assert rep.converged
    assert abs(rep.eigenvalues[0] - ref) <= 1e-8


def test_solve_nep_quadratic():
    nep = generate_quadratic(120, 0.05, seed=4)
    tau = 0.5j
    rep = solve_nep(nep, tau, 5, tol=1e-10)
    assert rep.converged
    assert same_values(rep.eigenvalues, oracle_nep(nep, tau, 5), 1e-8)


@pytest.mark.parametrize("strategy", ["ALL", "BR", "WR"])
@pytest.mark.parametrize("mode", ["two-sided", "one-sided"])
def test_returned_pairs_pass_filter_and_residual(strategy, mode):
    nep = generate_quadratic(80, 0.05, seed=9)
    rep = solve_nep(nep, 0.2 + 0.4j, 3, strategy, mode=mode, tol=1e-9)
    assert rep.converged
    p = PartitionedNEP(nep, m=2)
    red = assemble_reduced(p, rep.V, rep.W)
    for e in rep.estimates:
        Ar = red.eval_A(e.lam)
        assert sigma_min(Ar) > 1e-8 * inf_norm(Ar)
        assert residual_split(nep, e.lam, e.v_reduced, rep.V, m=2) < 1e-9
    # the lifted vector is an approximate eigenvector of the full problem
    x = rep.estimates[0].v_full
    T = nep.eval(rep.estimates[0].lam)
    assert np.abs(T @ x).max() <= 1e-7 * inf_norm(T) * np.abs(x).max()


def test_linear_pencil_agrees_with_rational_solver(rng):
    k, n = 60, 2
    A = rng.standard_normal((k, k))
    B, C = rng.standard_normal((k, n)), rng.standard_normal((n, k))
    D = rng.standard_normal((n, n))
    sys = StateSpaceREP(A=sp.csc_matrix(A), B=B, C=C, P=(D,))
    nep = pencil_as_split(A, B, C, D)
    tau = 0.3 + 0.1j
    a = solve_rep(sys, tau, 2, tol=1e-12, seed=5)
    b = solve_nep(nep, tau, 2, m=n, tol=1e-12, seed=5)
    assert a.converged and b.converged
    assert a.iterations[0].points == b.iterations[0].points
    assert same_values(a.eigenvalues, b.eigenvalues, 1e-10)


def test_permutation_is_recorded_and_undone(rng):
    nep = generate_quadratic(60, 0.1, seed=1)
    perm = rng.permutation(60)
    ref = solve_nep(nep, 0.3j, 1, tol=1e-10)
    rep = solve_nep(nep, 0.3j, 1, tol=1e-10, perm=perm)
    assert np.array_equal(rep.permutation, perm)
    assert ref.permutation is None
    assert abs(rep.eigenvalues[0] - ref.eigenvalues[0]) <= 1e-8
    x = rep.estimates[0].v_full
    T = nep.eval(rep.estimates[0].lam)
    assert np.abs(T @ x).max() <= 1e-7 * inf_norm(T) * np.abs(x).max()


def test_pole_retry_nep():
    k = 10
    A = np.diag(np.arange(1.0, k + 1))
    rng = np.random.default_rng(3)
    nep = pencil_as_split(A, rng.standard_normal((k, 2)), rng.standard_normal((2, k)), np.eye(2))
    rep = solve_nep(nep, 3.0, 1, init_points=[3.0])
    assert rep.iterations[0].pole_shifts
    assert rep.converged


def test_embedded_norm_flag():
    nep = generate_quadratic(50, 0.1, seed=6)
    a = solve_nep(nep, 0.1j, 1, tol=1e-10)
    b = solve_nep(nep, 0.1j, 1, tol=1e-10, embedded_norm=True)
    assert a.converged and b.converged
    assert abs(a.eigenvalues[0] - b.eigenvalues[0]) <= 1e-8
    e = b.estimates[0]
    assert residual_split(nep, e.lam, e.v_reduced, b.V, m=2, embedded_norm=True) == pytest.approx(e.residual)


def test_solve_nep_rejects_bad_partition():
    with pytest.raises(ValueError):
        solve_nep(generate_quadratic(5, 0.5), 0.0, 1, m=5)
