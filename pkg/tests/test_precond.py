import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_spd
from efie_hybrid.precond import (PIVOT_GUARD, Preconditioner, SingularPivotError, apply_precond,
                                 condition_estimate, ilut, ilut_realified, interleaved_order)


def _dense_lu(F):
    return F.lower().toarray() @ F.U.toarray()


def _ilut_ikj(A, tau, p=None):
    """Textbook row-wise IKJ ILUT(p, tau) on a dense work row; returns dense L, U."""
    n = A.shape[0]
    p = n if p is None else p
    dt = complex if np.iscomplexobj(A) else float
    L, U = np.eye(n, dtype=dt), np.zeros((n, n), dtype=dt)

    def keep(w, thr):
        w = np.where(np.abs(w) >= thr, w, 0.0)
        if np.count_nonzero(w) > p:
            w[np.argsort(np.abs(w))[:-p]] = 0.0
        return w

    for i in range(n):
        w = A[i].astype(dt)
        norm = np.linalg.norm(w)
        drop = tau * norm
        for k in range(i):
            if w[k] == 0.0:
                continue
            w[k] /= U[k, k]
            if abs(w[k]) < drop:
                w[k] = 0.0
                continue
            w[k + 1:] -= w[k] * U[k, k + 1:]
        thr = max(drop, 1e-300)
        L[i, :i] += keep(w[:i], thr)
        U[i, i + 1:] = keep(w[i + 1:], thr)
        piv = w[i]
        if abs(piv) < PIVOT_GUARD * norm:
            piv = (piv / abs(piv) if piv != 0 else 1.0) * PIVOT_GUARD * norm
        U[i, i] = piv
    return L, U


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(2, 24),
       tau=st.sampled_from([0.0, 1e-3, 3e-2, 0.2]), p=st.sampled_from([None, 1, 3, 8]))
def test_ilut_matches_row_wise_reference(seed, n, tau, p):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + n * np.eye(n) * rng.uniform(0.2, 1.0)
    if seed % 2:
        A = A + 1j * rng.standard_normal((n, n))
    F = ilut(A, tau, max_fill=p)
    L, U = _ilut_ikj(A, tau, p)
    np.testing.assert_allclose(F.lower().toarray(), L, atol=1e-10)
    np.testing.assert_allclose(F.U.toarray(), U, atol=1e-10 * np.abs(U).max())


def test_identity_factors():
    for tau in (0.0, 1e-3, 0.5):
        F = ilut(np.eye(6), tau)
        np.testing.assert_array_equal(F.lower().toarray(), np.eye(6))
        np.testing.assert_array_equal(F.U.toarray(), np.eye(6))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_tau_zero_is_complete_lu(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((64, 64)) + 64 * np.eye(64)
    F = ilut(A, 0.0)
    assert np.abs(_dense_lu(F) - A).max() <= 1e-10 * np.abs(A).max()
    v = rng.standard_normal(64)
    np.testing.assert_allclose(A @ apply_precond(F, v), v, atol=1e-10)


def test_factor_structure():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((30, 30)) + 10 * np.eye(30)
    F = ilut(A, 1e-2)
    L, U = F.L.toarray(), F.U.toarray()
    assert np.all(np.triu(L) == 0)
    assert np.all(np.tril(U, -1) == 0)
    assert np.all(np.diag(U) != 0)
    # dropping leaves the product close to A
    assert np.abs(_dense_lu(F) - A).max() < 0.2 * np.abs(A).max()


def test_fill_cap():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((40, 40)) + 20 * np.eye(40)
    F = ilut(A, 0.0, max_fill=5)
    assert np.diff(F.L.indptr).max() <= 5
    assert np.diff(F.U.indptr).max() <= 6          # diagonal + 5


def test_zero_row_reports_pivot():
    A = np.eye(4)
    A[2] = 0
    with pytest.raises(SingularPivotError) as err:
        ilut(A, 1e-3)
    assert err.value.row == 2


def test_tiny_pivot_replaced():
    A = np.array([[1e-20, 1.0], [1.0, 1.0]])
    F = ilut(A, 0.0)
    assert F.pivots_replaced == 1
    assert abs(F.U.toarray()[0, 0]) == pytest.approx(1e-14)


def test_apply_identity_and_errors():
    v = np.arange(5.0)
    np.testing.assert_array_equal(apply_precond(None, v), v)
    np.testing.assert_array_equal(Preconditioner(None)(v), v)
    with pytest.raises(ValueError):
        apply_precond(ilut(np.eye(3), 0.0), v)


def test_preconditioner_matches_apply():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((20, 20)) + 8 * np.eye(20)
    for ordering in ("natural", "interleaved"):
        F = ilut(A, 1e-2, ordering=ordering)
        v = rng.standard_normal(20)
        np.testing.assert_allclose(Preconditioner(F)(v), apply_precond(F, v), rtol=1e-12)


def test_interleaved_order_and_exactness():
    np.testing.assert_array_equal(interleaved_order(6), [0, 3, 1, 4, 2, 5])
    with pytest.raises(ValueError):
        interleaved_order(5)
    rng = np.random.default_rng(5)
    A = rng.standard_normal((16, 16)) + 16 * np.eye(16)
    F = ilut(A, 0.0, ordering="interleaved")
    v = rng.standard_normal(16)
    np.testing.assert_allclose(A @ apply_precond(F, v), v, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_apply_is_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((24, 24)) + 12 * np.eye(24)
    F = ilut(A, 1e-2)
    u, v = rng.standard_normal(24), rng.standard_normal(24)
    lhs = apply_precond(F, a * u + b * v)
    rhs = a * apply_precond(F, u) + b * apply_precond(F, v)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(rhs).max()))


def test_richardson_with_ilut_converges():
    rng = np.random.default_rng(6)
    A = random_spd(16, rng, cond=50.0)
    F = ilut(A, 1e-2)
    b = rng.standard_normal(16)
    x = np.zeros(16)
    res = [np.linalg.norm(b)]
    for _ in range(10):
        x = x + apply_precond(F, b - A @ x)
        res.append(np.linalg.norm(b - A @ x))
    assert all(r1 < r0 for r0, r1 in zip(res, res[1:]))


def test_condition_trivial():
    I = lambda V: V
    assert condition_estimate(I, I, 5) == pytest.approx(1.0)
    D = np.diag([1.0, 10.0])
    assert condition_estimate(lambda V: D @ V, None, 2) == pytest.approx(10.0)
    assert condition_estimate(lambda V: np.zeros_like(V), None, 3) == float("inf")


def test_condition_power_iteration_within_ten_percent():
    rng = np.random.default_rng(7)
    Q, _ = np.linalg.qr(rng.standard_normal((32, 32)))
    M = (Q * np.arange(1.0, 33.0)) @ Q.T
    Minv = np.linalg.inv(M)
    exact = condition_estimate(lambda V: M @ V, None, 32)
    assert exact == pytest.approx(32.0)
    est = condition_estimate(lambda v: M @ v, lambda v: Minv @ v, 32, dense_limit=0)
    assert est == pytest.approx(32.0, rel=0.1)


def test_efie_preconditioning_reduces_condition(sphere1):
    A = sphere1.system.A
    P = Preconditioner(ilut(A, 1e-3, ordering="interleaved"))
    k_a = condition_estimate(lambda V: A @ V, None, len(A))
    k_p = condition_estimate(lambda V: P(A @ V), None, len(A))
    assert k_p < k_a / 3


def _realified(Z):
    return np.block([[Z.real, Z.imag], [Z.imag, -Z.real]])


def test_realified_complete_factorisation_is_exact():
    rng = np.random.default_rng(4)
    Z = rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7)) + 4 * np.eye(7)
    A = _realified(Z)
    F = ilut_realified(A, 0.0)
    assert F.realified and F.n == 7 and F.dim == 14
    P = Preconditioner(F)
    np.testing.assert_allclose(P(A), np.eye(14), atol=1e-12)
    np.testing.assert_allclose(apply_precond(F, A), np.eye(14), atol=1e-12)
    v = rng.standard_normal(14)
    np.testing.assert_allclose(F.matvec(v), A @ v, atol=1e-12)
    np.testing.assert_allclose(P(F.matvec(v)), v, atol=1e-12)
    assert "complex-block" in P.name


def test_realified_handles_imaginary_dominant_pivots():
    # Re z = 0 on the diagonal: real-arithmetic elimination meets zero pivots
    rng = np.random.default_rng(5)
    Z = 1j * (np.eye(6) * 5) + 0.3 * rng.standard_normal((6, 6))
    np.fill_diagonal(Z, 5j)
    A = _realified(Z)
    F = ilut_realified(A, 1e-3)
    assert F.pivots_replaced == 0
    M = Preconditioner(F)(A)
    s = np.linalg.svd(M, compute_uv=False)
    assert s[0] / s[-1] < 1.1
    assert ilut(A, 1e-3, ordering="natural").pivots_replaced > 0


def test_realified_errors_and_sparse_path():
    with pytest.raises(ValueError):
        ilut_realified(np.eye(5), 0.0)
    rng = np.random.default_rng(6)
    Z = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)) + 5 * np.eye(5)
    F = ilut_realified(_realified(Z), 1e-2)
    v = rng.standard_normal(10)
    with pytest.raises(ValueError):
        apply_precond(F, np.ones(5))
    # the dense packed path and the sparse triangular path agree
    from efie_hybrid import precond as pc
    dense = apply_precond(F, v)
    y = pc.spsolve_triangular(F.lower(), F.to_factor_space(v), lower=True, unit_diagonal=True)
    z = pc.spsolve_triangular(F.U, y, lower=False)
    np.testing.assert_allclose(F.from_factor_space(z), dense, atol=1e-12)
    np.testing.assert_allclose(Preconditioner(F)(v), dense, atol=1e-12)
