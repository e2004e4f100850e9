"""Threshold incomplete LU (ILUT) on dense matrices, and condition-number estimates."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy import sparse
from scipy.linalg import solve_triangular
from scipy.sparse.linalg import spsolve_triangular

log = logging.getLogger(__name__)

#: Pivots smaller than this times the row norm are replaced.
PIVOT_GUARD = 1e-14
#: Largest size whose condition number is computed by dense SVD.
DENSE_KAPPA_LIMIT = 4096


class SingularPivotError(ArithmeticError):
    def __init__(self, row: int):
        super().__init__(f"ILUT breakdown: structurally zero pivot in row {row}")
        self.row = row


@dataclass(frozen=True, eq=False)
class IluFactors:
    """P A P^T ~ L U for a symmetric permutation P given by ``perm``.

    L is unit lower triangular (stored without its diagonal), U is upper
    triangular with its diagonal.  ``perm`` is ``None`` for the natural order.

    With ``realified=True`` the factors are complex and approximate the block
    Z of A = [[Re Z, Im Z], [Im Z, -Re Z]] (see :func:`ilut_realified`); they
    then act on real vectors of length ``2 n``.
    """

    L: sparse.csr_matrix
    U: sparse.csr_matrix
    tau: float
    max_fill: int
    pivots_replaced: int = 0
    perm: np.ndarray | None = None
    realified: bool = False

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def dim(self) -> int:
        """Length of the real vectors the preconditioner acts on."""
        return 2 * self.n if self.realified else self.n

    def to_factor_space(self, v: np.ndarray) -> np.ndarray:
        if self.realified:
            return v[:self.n] + 1j * v[self.n:]
        return v[self.perm] if self.perm is not None else v

    def from_factor_space(self, z: np.ndarray) -> np.ndarray:
        """Map U^-1 L^-1 of a mapped vector back; the realified case applies D = diag(I, -I)."""
        if self.realified:
            return np.concatenate([z.real, -z.imag])
        if self.perm is None:
            return z
        out = np.empty_like(z)
        out[self.perm] = z
        return out

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """The preconditioner matrix itself applied to ``v`` (L U in original ordering)."""
        if self.realified:
            w = self.lower() @ (self.U @ (v[:self.n] - 1j * v[self.n:]))
            return np.concatenate([w.real, w.imag])
        w = self.lower() @ (self.U @ self.to_factor_space(v))
        if self.perm is None:
            return w
        out = np.empty_like(w)
        out[self.perm] = w
        return out

    @property
    def fill_ratio(self) -> float:
        """Stored entries relative to a dense n x n matrix."""
        return (self.L.nnz + self.U.nnz + self.n) / float(self.n * self.n)

    def lower(self) -> sparse.csr_matrix:
        return (self.L + sparse.identity(self.n, format="csr")).tocsr()


def _keep_largest(idx: np.ndarray, vals: np.ndarray, threshold: float, p: int):
    mask = np.abs(vals) >= threshold
    idx, vals = idx[mask], vals[mask]
    if len(vals) > p:
        top = np.argpartition(-np.abs(vals), p - 1)[:p]
        top.sort()
        idx, vals = idx[top], vals[top]
    return idx, vals


def interleaved_order(n: int) -> np.ndarray:
    """Permutation pairing unknown i with unknown i + n/2.

    For the real form [[Re Z, Im Z], [Im Z, -Re Z]] this places each 2x2 block
    [[Re z, Im z], [Im z, -Re z]] of one complex entry on the diagonal, so
    elimination works entry by entry on Z instead of on the (nearly singular)
    Re Z block first.
    """
    if n % 2:
        raise ValueError("interleaved ordering needs an even dimension")
    order = np.empty(n, dtype=np.int64)
    order[0::2] = np.arange(n // 2)
    order[1::2] = np.arange(n // 2) + n // 2
    return order


def ilut(A: np.ndarray, tau: float, max_fill: int | None = None,
         ordering: str = "natural") -> IluFactors:
    """ILUT(max_fill, tau) on a dense matrix.

    Row ``i`` drops multipliers below ``tau * ||a_i||_2`` as they appear;
    once eliminated, entries below the same threshold are dropped and at most
    ``max_fill`` of the largest are kept in each of the L and U parts
    (``None``: no cap).  ``tau = 0`` without a cap is the complete LU
    factorisation (no pivoting).

    The elimination is right-looking: step ``k`` finalises U row ``k`` and
    column ``k`` of the multipliers, then applies the rank-one update to the
    trailing rows that kept a multiplier.  Each entry sees the same updates
    in the same order as the row-wise IKJ formulation, so the factors agree
    with it up to rounding.

    ``ordering="interleaved"`` factors the symmetrically permuted matrix
    given by :func:`interleaved_order`; use it for realified EFIE systems.
    """
    A = np.asarray(A)
    A = A.astype(complex if np.iscomplexobj(A) else float)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise ValueError("ILUT needs a square matrix")
    if tau < 0:
        raise ValueError("drop tolerance must be non-negative")
    if ordering == "interleaved":
        perm = interleaved_order(n)
        W = A[np.ix_(perm, perm)]
    elif ordering == "natural":
        perm = None
        W = A.copy()
    else:
        raise ValueError(f"unknown ordering {ordering!r}")
    if max_fill is None:
        max_fill = n

    norms = np.linalg.norm(W, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise SingularPivotError(int(zero[0]))
    drops = tau * norms
    keep = np.maximum(drops, 1e-300)

    l_cols, l_rows, l_vals = [], [], []
    u_ptr, u_idx, u_val = [0], [], []
    replaced = 0
    for k in range(n):
        pivot = W[k, k]
        if abs(pivot) < PIVOT_GUARD * norms[k]:
            pivot = (pivot / abs(pivot) if pivot != 0 else 1.0) * PIVOT_GUARD * norms[k]
            replaced += 1
        ui, uv = _keep_largest(np.arange(k + 1, n), W[k, k + 1:], keep[k], max_fill)
        u_idx += [np.array([k]), ui]
        u_val += [np.array([pivot]), uv]
        u_ptr.append(u_ptr[-1] + 1 + len(ui))

        col = W[k + 1:, k] / pivot
        live = np.flatnonzero((col != 0.0) & (np.abs(col) >= drops[k + 1:]))
        if not live.size:
            continue
        rows = live + k + 1
        mult = col[live]
        l_rows.append(rows)
        l_cols.append(np.full(rows.size, k))
        l_vals.append(mult)
        if not ui.size:
            continue
        if 2 * ui.size > n - k - 1:
            u_dense = np.zeros(n - k - 1, dtype=W.dtype)
            u_dense[ui - k - 1] = uv
            W[rows, k + 1:] -= np.outer(mult, u_dense)
        else:
            W[np.ix_(rows, ui)] -= np.outer(mult, uv)

    if replaced:
        log.warning("ILUT replaced %d tiny pivots", replaced)
    if l_vals:
        r, c, v = np.concatenate(l_rows), np.concatenate(l_cols), np.concatenate(l_vals)
        ok = np.abs(v) >= keep[r]
        L = sparse.csr_matrix((v[ok], (r[ok], c[ok])), shape=(n, n))
    else:
        L = sparse.csr_matrix((n, n))
    if max_fill < n:
        L = _cap_rows(L, max_fill)
    U = sparse.csr_matrix((np.concatenate(u_val), np.concatenate(u_idx), np.array(u_ptr)),
                          shape=(n, n))
    return IluFactors(L, U, float(tau), int(max_fill), replaced, perm)


def ilut_realified(A: np.ndarray, tau: float, max_fill: int | None = None) -> IluFactors:
    """ILUT of a realified matrix through its complex block.

    A = [[Re Z, Im Z], [Im Z, -Re Z]] equals C(Z) D with the real form
    C(Z) = [[Re Z, -Im Z], [Im Z, Re Z]] and D = diag(I, -I).  Factoring Z
    with complex pivots gives P = C(L) C(U) D.  Real-arithmetic elimination
    of A pivots on Re z alone and breaks down where Re z is small against
    Im z; the complex pivot z does not.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2:
        raise ValueError("a realified matrix is square with even dimension")
    m = A.shape[0] // 2
    F = ilut(A[:m, :m] + 1j * A[m:, :m], tau, max_fill)
    return replace(F, realified=True)


def _cap_rows(M: sparse.csr_matrix, p: int) -> sparse.csr_matrix:
    """Keep the ``p`` largest-magnitude entries of every row."""
    ptr, idx, val = [0], [], []
    for i in range(M.shape[0]):
        a, b = M.indptr[i], M.indptr[i + 1]
        ci, cv = _keep_largest(M.indices[a:b], M.data[a:b], 0.0, p)
        idx.append(ci)
        val.append(cv)
        ptr.append(ptr[-1] + len(ci))
    return sparse.csr_matrix((np.concatenate(val), np.concatenate(idx), np.array(ptr)),
                             shape=M.shape)


def apply_precond(factors: IluFactors | None, v: np.ndarray) -> np.ndarray:
    """U^{-1} L^{-1} v; ``None`` stands for the identity preconditioner.

    ``v`` may be a vector or a matrix of column vectors.
    """
    v = np.asarray(v, dtype=float)
    if factors is None:
        return v.copy()
    if v.shape[0] != factors.dim:
        raise ValueError("dimension mismatch")
    w = factors.to_factor_space(v)
    if factors.n <= 2048:
        # dense triangular solves are faster than the sparse ones at this size
        y = solve_triangular(factors.lower().toarray(), w, lower=True, unit_diagonal=True,
                             check_finite=False)
        z = solve_triangular(factors.U.toarray(), y, lower=False, check_finite=False)
    else:
        y = spsolve_triangular(factors.lower(), w, lower=True, unit_diagonal=True)
        z = spsolve_triangular(factors.U, y, lower=False)
    return factors.from_factor_space(z)


class Preconditioner:
    """Cached application of an ILUT (or identity) preconditioner."""

    def __init__(self, factors: IluFactors | None):
        self.factors = factors
        self._packed = None
        if factors is not None:
            n = factors.n
            nnz = factors.L.nnz + factors.U.nnz
            if n <= 2048 or nnz > 0.25 * n * n:
                # LAPACK-style packing: unit-lower L below the diagonal, U on and above
                packed = factors.U.toarray()
                Lc = factors.L.tocoo()
                packed[Lc.row, Lc.col] = Lc.data
                self._packed = packed

    def __call__(self, v: np.ndarray) -> np.ndarray:
        if self.factors is None:
            return np.array(v, dtype=float)
        if self._packed is None:
            return apply_precond(self.factors, v)
        w = self.factors.to_factor_space(np.asarray(v, dtype=float))
        y = solve_triangular(self._packed, w, lower=True, unit_diagonal=True, check_finite=False)
        z = solve_triangular(self._packed, y, lower=False, check_finite=False)
        return self.factors.from_factor_space(z)

    @property
    def name(self) -> str:
        if self.factors is None:
            return "identity"
        if self.factors.realified:
            order = "complex-block"
        else:
            order = "natural" if self.factors.perm is None else "interleaved"
        return f"ilut(tau={self.factors.tau:g}, p={self.factors.max_fill}, {order})"


def condition_estimate(matrix_apply, inverse_apply, n: int, iterations: int = 50,
                       seed: int = 0, dense_limit: int = DENSE_KAPPA_LIMIT) -> float:
    """Estimate sigma_max / sigma_min of the operator ``matrix_apply``.

    Up to ``dense_limit`` the operator is formed from its action on the
    identity and its singular values computed exactly.  Beyond that, power iteration on the operator
    and on its inverse gives the ratio of extreme eigenvalue magnitudes.
    Returns ``inf`` for a singular operator.
    """
    if n <= dense_limit:
        M = np.asarray(matrix_apply(np.eye(n)), dtype=float)
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] <= s[0] * np.finfo(float).eps:
            return float("inf")
        return float(s[0] / s[-1])

    rng = np.random.default_rng(seed)

    def dominant(op):
        x = rng.standard_normal(n)
        x /= np.linalg.norm(x)
        lam = 0.0
        for _ in range(iterations):
            y = op(x)
            lam = np.linalg.norm(y)
            if not np.isfinite(lam) or lam == 0:
                return lam
            x = y / lam
        return lam

    big = dominant(matrix_apply)
    try:
        inv = dominant(inverse_apply)
    except (np.linalg.LinAlgError, ZeroDivisionError, FloatingPointError):
        return float("inf")
    if not np.isfinite(inv) or big == 0:
        return float("inf")
    return float(big * inv)
