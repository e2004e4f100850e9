"""Krylov (Arnoldi / FOM) projection of a large operator onto a small square system."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

#: A new Arnoldi vector shorter than this (relative to A v_j) ends the basis.
BREAKDOWN_TOL = 1e-13
#: A second Gram-Schmidt pass runs when the first loses more than this.
REORTH_TOL = 1e-8


def is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class SubspaceSystem:
    """Projected system C y = d with prolongation U.

    Attributes
    ----------
    C : (n_sub, n_sub) ndarray
        Galerkin projection U^T A U (upper Hessenberg).
    d : (n_sub,) ndarray
        ``alpha * e_1``.
    U : (N, n_sub) ndarray
        Orthonormal Krylov basis.
    alpha : float
        Norm of the residual the basis was seeded with.
    """

    C: np.ndarray
    d: np.ndarray
    U: np.ndarray
    alpha: float

    @property
    def n_sub(self) -> int:
        return self.C.shape[0]

    def prolong(self, y: np.ndarray) -> np.ndarray:
        return self.U @ y


def build_subspace(operator_apply, residual: np.ndarray, n_sub: int) -> SubspaceSystem:
    """Arnoldi with modified Gram-Schmidt, started from ``residual``.

    Parameters
    ----------
    operator_apply : callable
        ``v -> A v`` for vectors of length N.
    residual : ndarray
        Seed vector e; ``d = ||e|| e_1``.
    n_sub : int
        Requested dimension, a power of two not exceeding N.

    On breakdown (an invariant subspace of dimension ``k < n_sub`` was found)
    the returned system has dimension ``k``; the caller pads it if it needs a
    power of two.
    """
    e = np.asarray(residual, dtype=float)
    N = e.shape[0]
    if not is_pow2(n_sub):
        raise ValueError(f"subspace dimension must be a power of two, got {n_sub}")
    if n_sub > N:
        raise ValueError(f"subspace dimension {n_sub} exceeds system size {N}")
    alpha = float(np.linalg.norm(e))
    if alpha == 0.0:
        raise ValueError("cannot build a Krylov subspace from a zero residual")

    V = np.zeros((N, n_sub))
    H = np.zeros((n_sub + 1, n_sub))
    V[:, 0] = e / alpha
    k = n_sub
    for j in range(n_sub):
        w = np.array(operator_apply(V[:, j]), dtype=float)      # copy: the operator may alias
        w_norm = np.linalg.norm(w)
        for i in range(j + 1):
            h = V[:, i] @ w
            H[i, j] += h
            w -= h * V[:, i]
        if _lost_orth(V[:, :j + 1], w):
            for i in range(j + 1):
                h = V[:, i] @ w
                H[i, j] += h
                w -= h * V[:, i]
        beta = np.linalg.norm(w)
        H[j + 1, j] = beta
        if j + 1 == n_sub:
            break
        if beta <= BREAKDOWN_TOL * w_norm:
            k = j + 1
            log.debug("Arnoldi breakdown after %d steps", k)
            break
        V[:, j + 1] = w / beta
    C = H[:k, :k].copy()
    d = np.zeros(k)
    d[0] = alpha
    return SubspaceSystem(C, d, V[:, :k].copy(), alpha)


def _lost_orth(V: np.ndarray, w: np.ndarray) -> bool:
    nw = np.linalg.norm(w)
    if nw == 0:
        return False
    return bool(np.abs(V.T @ w).max() > REORTH_TOL * nw)


def recover_scale(C: np.ndarray, f: np.ndarray, z_hat: np.ndarray) -> float:
    """Signed least-squares scale ``argmin_a ||f - a C z_hat||``.

    The sign absorbs the unobservable global sign of a quantum state.
    """
    z_hat = np.asarray(z_hat, dtype=float)
    if abs(np.linalg.norm(z_hat) - 1.0) > 1e-8:
        raise ValueError("z_hat must be a unit vector")
    Cz = np.asarray(C, dtype=float) @ z_hat
    nrm2 = float(Cz @ Cz)
    if np.sqrt(nrm2) < 1e-14:
        raise ValueError("direction is annihilated by C; scale undefined")
    return float(Cz @ np.asarray(f, dtype=float)) / nrm2
