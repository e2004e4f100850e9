"""EFIE Galerkin system on RWG functions, and its real-valued symmetric form.

Time convention is exp(+jwt); the Green function is exp(-jkR)/(4 pi R).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.constants as const
from scipy import sparse

from .mesh import RwgBasisSet, TriangleMesh
from .quadrature import ORDERS, potential_integrals, triangle_points


@dataclass(frozen=True)
class BackgroundMedium:
    """Homogeneous background; free space by default."""

    permittivity: float = const.epsilon_0
    permeability: float = const.mu_0

    def __post_init__(self):
        if self.permittivity <= 0 or self.permeability <= 0:
            raise ValueError("permittivity and permeability must be positive")

    def omega(self, frequency: float) -> float:
        return 2 * np.pi * frequency

    def wavenumber(self, frequency: float) -> float:
        return self.omega(frequency) * np.sqrt(self.permittivity * self.permeability)

    @property
    def impedance(self) -> float:
        return float(np.sqrt(self.permeability / self.permittivity))


@dataclass(frozen=True)
class PlaneWave:
    """E(r) = amplitude * polarization * exp(-jk direction . r)."""

    frequency: float
    direction: tuple = (0.0, 0.0, 1.0)
    polarization: tuple = (1.0, 0.0, 0.0)
    amplitude: complex = 1.0

    def __post_init__(self):
        k = np.asarray(self.direction, dtype=float)
        e = np.asarray(self.polarization, dtype=float)
        if abs(np.linalg.norm(k) - 1) > 1e-9 or abs(np.linalg.norm(e) - 1) > 1e-9:
            raise ValueError("direction and polarization must be unit vectors")
        if abs(k @ e) > 1e-9:
            raise ValueError("polarization must be orthogonal to the propagation direction")
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")

    def field(self, points: np.ndarray, medium: BackgroundMedium) -> np.ndarray:
        k = medium.wavenumber(self.frequency)
        phase = np.exp(-1j * k * (np.asarray(points) @ np.asarray(self.direction)))
        return self.amplitude * phase[..., None] * np.asarray(self.polarization)


@dataclass(frozen=True, eq=False)
class ComplexSystem:
    """Z I = V with Z symmetric."""

    Z: np.ndarray
    V: np.ndarray
    I: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.V)


@dataclass(frozen=True, eq=False)
class RealSystem:
    """A x = b with A = [[Re Z, Im Z], [Im Z, -Re Z]] and b = [Re V; Im V]."""

    A: np.ndarray
    b: np.ndarray

    @property
    def n(self) -> int:
        return len(self.b)


def green(R, k: float):
    """Free-space scalar Green function exp(-jkR)/(4 pi R)."""
    R = np.asarray(R, dtype=float)
    if np.any(R <= 0):
        raise ValueError("Green function is singular at R = 0")
    out = np.exp(-1j * k * R) / (4 * np.pi * R)
    return out[()] if out.ndim == 0 else out


def _smooth_green(R, k):
    """(exp(-jkR) - 1)/(4 pi R), finite at R = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.expm1(-1j * k * R) / (4 * np.pi * R)
    return np.where(R > 0, g, -1j * k / (4 * np.pi))


def _local_blocks(S0, Sr, Srp, Srr, vt, vs, at, as_, omega, medium):
    """Combine kernel moments into 3x3 local interaction blocks.

    For test triangle p (local vertex i) and source triangle q (local vertex j)
    the moments are int int G [1, r, r', r.r'] and

        block[i, j] = jwmu/(4 Ap Aq) int int (r - v_i).(r' - v_j) G
                      + 1/(jwe Ap Aq) int int G

    which, times s_a l_a s_b l_b, is that triangle pair's share of Z[a, b].
    """
    vec = (Srr[..., None, None]
           - np.einsum("...x,...jx->...j", Sr, vs)[..., None, :]
           - np.einsum("...ix,...x->...i", vt, Srp)[..., :, None]
           + np.einsum("...ix,...jx->...ij", vt, vs) * S0[..., None, None])
    area = (at * as_)[..., None, None]
    return (1j * omega * medium.permeability / 4 * vec
            + S0[..., None, None] / (1j * omega * medium.permittivity)) / area


def _incidence(rwg: RwgBasisSet) -> sparse.csr_matrix:
    """(3 P, N_e) map from triangle-local functions to RWG coefficients."""
    p = rwg.mesh.n_triangles
    rows = np.arange(3 * p)
    edges = rwg.tri_edge.ravel()
    vals = rwg.tri_sign.ravel() * rwg.lengths[edges]
    return sparse.csr_matrix((vals, (rows, edges)), shape=(3 * p, rwg.n_edges))


def touching_pairs(mesh: TriangleMesh) -> np.ndarray:
    """Ordered triangle pairs (p, q) sharing at least one vertex, p == q included."""
    t = mesh.triangles
    vt = sparse.csr_matrix((np.ones(t.size), (t.ravel(), np.repeat(np.arange(len(t)), 3))),
                           shape=(mesh.n_vertices, len(t)))
    adj = (vt.T @ vt).tocoo()
    return np.stack([adj.row, adj.col], axis=1)


def _touching_blocks(mesh, pairs, k, omega, medium, order=7):
    """Local blocks for touching pairs using singularity extraction.

    The static 1/(4 pi R) part is integrated in closed form over the source
    triangle; the smooth remainder uses ``order``-point rules on both sides.
    """
    corners = mesh.vertices[mesh.triangles]
    p, q = pairs[:, 0], pairs[:, 1]
    rt, wt = triangle_points(corners[p], mesh.areas[p], order)
    rs, ws = triangle_points(corners[q], mesh.areas[q], order)

    i0, i1, rho = potential_integrals(rt, corners[q][:, None, :, :])
    j0 = i0 / (4 * np.pi)
    j1 = (i1 + rho * i0[..., None]) / (4 * np.pi)
    S0 = np.einsum("km,km->k", wt, j0).astype(complex)
    Sr = np.einsum("km,km,kmx->kx", wt, j0, rt).astype(complex)
    Srp = np.einsum("km,kmx->kx", wt, j1).astype(complex)
    Srr = np.einsum("km,kmx,kmx->k", wt, rt, j1).astype(complex)

    R = np.linalg.norm(rt[:, :, None, :] - rs[:, None, :, :], axis=-1)
    K = wt[:, :, None] * ws[:, None, :] * _smooth_green(R, k)
    S0 += K.sum(axis=(1, 2))
    Sr += np.einsum("kmn,kmx->kx", K, rt)
    Srp += np.einsum("kmn,knx->kx", K, rs)
    Srr += np.einsum("kmn,kmx,knx->k", K, rt, rs)
    return _local_blocks(S0, Sr, Srp, Srr, corners[p], corners[q],
                         mesh.areas[p], mesh.areas[q], omega, medium)


def assemble_impedance(mesh: TriangleMesh, rwg: RwgBasisSet, medium: BackgroundMedium,
                       frequency: float, quadrature_order: int = 4,
                       block_size: int | None = None) -> np.ndarray:
    """Dense EFIE impedance matrix Z (ohms), shape ``(N_e, N_e)``.

    Non-touching triangle pairs use ``quadrature_order`` points on both
    triangles.  Pairs sharing a vertex use 7 points plus closed-form
    integration of the static part of G.  Rows are assembled in independent
    blocks of test triangles.
    """
    if frequency <= 0:
        raise ValueError("frequency must be positive")
    if quadrature_order not in ORDERS:
        raise ValueError(f"quadrature_order must be one of {ORDERS}")
    omega = medium.omega(frequency)
    k = medium.wavenumber(frequency)
    ntri = mesh.n_triangles
    corners = mesh.vertices[mesh.triangles]
    areas = mesh.areas
    pts, wts = triangle_points(corners, areas, quadrature_order)
    M = _incidence(rwg)
    MT = M.T.tocsr()

    pairs = touching_pairs(mesh)
    near = _touching_blocks(mesh, pairs, k, omega, medium)

    q = pts.shape[1]
    if block_size is None:
        block_size = max(1, int(4e6 // (ntri * q * q)))
    Z = np.zeros((rwg.n_edges, rwg.n_edges), dtype=complex)
    for start in range(0, ntri, block_size):
        stop = min(start + block_size, ntri)
        rt, wt = pts[start:stop], wts[start:stop]
        diff = rt[:, None, :, None, :] - pts[None, :, None, :, :]
        R = np.sqrt(np.einsum("bpmnx,bpmnx->bpmn", diff, diff))
        # touching pairs are overwritten below; keep R finite there
        R = np.where(R > 0, R, 1.0)
        K = wt[:, None, :, None] * wts[None, :, None, :] * np.exp(-1j * k * R) / (4 * np.pi * R)
        S0 = K.sum(axis=(2, 3))
        Sr = np.einsum("bpmn,bmx->bpx", K, rt)
        Srp = np.einsum("bpmn,pnx->bpx", K, pts)
        Srr = np.einsum("bpmn,bmx,pnx->bp", K, rt, pts)
        blocks = _local_blocks(S0, Sr, Srp, Srr, corners[start:stop, None], corners[None],
                               areas[start:stop, None], areas[None], omega, medium)
        sel = (pairs[:, 0] >= start) & (pairs[:, 0] < stop)
        blocks[pairs[sel, 0] - start, pairs[sel, 1]] = near[sel]
        flat = blocks.transpose(0, 2, 1, 3).reshape(3 * (stop - start), 3 * ntri)
        Z += MT[:, 3 * start:3 * stop] @ (M.T @ flat.T).T
    # extraction integrates the static part over the source side only, so the
    # touching blocks are not exactly reciprocal; average the two orderings
    return 0.5 * (Z + Z.T)


def assemble_excitation(rwg: RwgBasisSet, planewave: PlaneWave,
                        medium: BackgroundMedium = BackgroundMedium(),
                        quadrature_order: int = 7) -> np.ndarray:
    """V[a] = int f_a . E_inc dS."""
    mesh = rwg.mesh
    corners = mesh.vertices[mesh.triangles]
    pts, wts = triangle_points(corners, mesh.areas, quadrature_order)
    E = planewave.field(pts, medium)                               # (P, q, 3)
    # int_T (r - v_i) . E dS for each local vertex i
    local = (np.einsum("tq,tqx,tqx->t", wts, pts, E)[:, None]
             - np.einsum("tix,tqx,tq->ti", corners, E, wts))
    local = local / (2 * mesh.areas[:, None])
    return _incidence(rwg).T @ local.ravel()


def assemble_system(mesh: TriangleMesh, rwg: RwgBasisSet, planewave: PlaneWave,
                    medium: BackgroundMedium = BackgroundMedium(),
                    quadrature_order: int = 4) -> ComplexSystem:
    Z = assemble_impedance(mesh, rwg, medium, planewave.frequency, quadrature_order)
    V = assemble_excitation(rwg, planewave, medium)
    return ComplexSystem(Z, V)


def realify(sys: ComplexSystem, tol: float = 1e-10) -> RealSystem:
    """Real symmetric form of a complex symmetric system (size doubles)."""
    Z = np.asarray(sys.Z)
    scale = np.abs(Z).max() if Z.size else 0.0
    if np.abs(Z - Z.T).max(initial=0.0) > tol * max(scale, np.finfo(float).tiny):
        raise ValueError("impedance matrix is not symmetric")
    A = np.block([[Z.real, Z.imag], [Z.imag, -Z.real]])
    b = np.concatenate([np.real(sys.V), np.imag(sys.V)])
    return RealSystem(A, b)


def complexify_solution(x: np.ndarray, n_edges: int) -> np.ndarray:
    """Map x = [Re I; -Im I] back to the complex current coefficients."""
    x = np.asarray(x, dtype=float)
    if x.shape != (2 * n_edges,):
        raise ValueError(f"expected a vector of length {2 * n_edges}, got shape {x.shape}")
    return x[:n_edges] - 1j * x[n_edges:]
