"""Bistatic RCS from RWG currents, the PEC-sphere Mie series, and the RCS error metric."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import spherical_jn, spherical_yn

from .mesh import RwgBasisSet
from .mom import BackgroundMedium, _incidence
from .quadrature import triangle_points


@dataclass(frozen=True, eq=False)
class RcsSweep:
    """Bistatic RCS samples over theta at a fixed phi cut."""

    theta_deg: np.ndarray
    sigma: np.ndarray
    frequency: float
    phi_deg: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        th = np.asarray(self.theta_deg, dtype=float)
        sg = np.asarray(self.sigma, dtype=float)
        if th.shape != sg.shape or th.ndim != 1:
            raise ValueError("theta and sigma must be 1-D arrays of equal length")
        if np.any(np.diff(th) <= 0):
            raise ValueError("theta samples must be strictly increasing")
        if np.any(sg < 0):
            raise ValueError("RCS values must be non-negative")
        object.__setattr__(self, "theta_deg", th)
        object.__setattr__(self, "sigma", sg)

    @property
    def sigma_dbsm(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10 * np.log10(self.sigma)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# frequency_hz: {self.frequency:.9g}\n")
            fh.write(f"# phi_deg: {self.phi_deg:g}\n")
            fh.write("# error_scale: linear\n")
            for key, val in self.metadata.items():
                fh.write(f"# {key}: {val}\n")
            fh.write("theta_deg,sigma_m2,sigma_dbsm\n")
            for t, s, d in zip(self.theta_deg, self.sigma, self.sigma_dbsm):
                fh.write(f"{t:.6g},{s:.10e},{d:.6f}\n")

    @classmethod
    def from_csv(cls, path) -> "RcsSweep":
        meta, rows = {}, []
        with open(path) as fh:
            for line in fh:
                if line.startswith("#"):
                    key, _, val = line[1:].partition(":")
                    meta[key.strip()] = val.strip()
                elif line.strip() and not line.startswith("theta_deg"):
                    rows.append([float(x) for x in line.split(",")[:2]])
        rows = np.array(rows)
        freq = float(meta.pop("frequency_hz"))
        phi = float(meta.pop("phi_deg", 0.0))
        meta.pop("error_scale", None)
        return cls(rows[:, 0], rows[:, 1], freq, phi, meta)


def default_angles() -> np.ndarray:
    """0..180 degrees in 1 degree steps."""
    return np.linspace(0.0, 180.0, 181)


def far_field(currents: np.ndarray, rwg: RwgBasisSet, medium: BackgroundMedium,
              frequency: float, theta_deg, phi_deg=0.0, quadrature_order: int = 4) -> np.ndarray:
    """r-normalised scattered far field, shape ``(n_angles, 3)``.

    E_far = -jwmu/(4 pi) int [J - (J.rhat) rhat] exp(jk rhat.r') dS'
    """
    currents = np.asarray(currents, dtype=complex)
    if currents.shape != (rwg.n_edges,):
        raise ValueError(f"expected {rwg.n_edges} current coefficients, got {currents.shape}")
    mesh = rwg.mesh
    th = np.deg2rad(np.atleast_1d(np.asarray(theta_deg, dtype=float)))
    ph = np.deg2rad(np.broadcast_to(np.asarray(phi_deg, dtype=float), th.shape))
    rhat = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)

    corners = mesh.vertices[mesh.triangles]
    pts, wts = triangle_points(corners, mesh.areas, quadrature_order)
    # coefficient of (r - v_i) on each triangle for each local vertex
    coef = (_incidence(rwg) @ currents).reshape(-1, 3) / (2 * mesh.areas[:, None])
    J = (np.einsum("ti,tqx->tqx", coef, pts)
         - np.einsum("ti,tix->tx", coef, corners)[:, None, :])          # (P, q, 3)

    k = medium.wavenumber(frequency)
    omega = medium.omega(frequency)
    phase = np.exp(1j * k * np.einsum("ax,tqx->atq", rhat, pts))
    radiation = np.einsum("atq,tq,tqx->ax", phase, wts, J)
    transverse = radiation - np.einsum("ax,ax->a", radiation, rhat)[:, None] * rhat
    return -1j * omega * medium.permeability / (4 * np.pi) * transverse


def radiated_rcs(currents, rwg: RwgBasisSet, medium: BackgroundMedium, frequency: float,
                 theta_deg=None, phi_deg=0.0, incident_amplitude: complex = 1.0,
                 quadrature_order: int = 4) -> RcsSweep:
    """Bistatic RCS sigma = 4 pi |E_far|^2 / |E_inc|^2 (m^2)."""
    theta = default_angles() if theta_deg is None else np.asarray(theta_deg, dtype=float)
    E = far_field(currents, rwg, medium, frequency, theta, phi_deg, quadrature_order)
    sigma = 4 * np.pi * np.sum(np.abs(E) ** 2, axis=1) / abs(incident_amplitude) ** 2
    return RcsSweep(theta, sigma, frequency, float(phi_deg))


def mie_terms(ka: float) -> int:
    """Series truncation ceil(ka + 4 ka^(1/3) + 2)."""
    return int(math.ceil(ka + 4 * ka ** (1 / 3) + 2))


def _angular(n_max: int, mu: np.ndarray):
    """pi_n = P_n^1(cos t)/sin t and tau_n = d P_n^1(cos t)/dt for n = 1..n_max."""
    pi = np.zeros((n_max + 1, mu.size))
    tau = np.zeros_like(pi)
    pi[1] = 1.0
    tau[1] = mu
    for n in range(2, n_max + 1):
        pi[n] = (2 * n - 1) / (n - 1) * mu * pi[n - 1] - n / (n - 1) * pi[n - 2]
        tau[n] = n * mu * pi[n] - (n + 1) * pi[n - 1]
    return pi[1:], tau[1:]


def mie_rcs(radius: float, medium: BackgroundMedium, frequency: float, theta_deg=None,
            n_terms: int | None = None, propagation: str = "+z") -> RcsSweep:
    """Exact bistatic RCS of a PEC sphere in the E-plane (phi = 0).

    The incident wave is x-polarised and travels along ``propagation``
    ("+z" for exp(-jkz), "-z" for exp(+jkz)); theta is measured from +z.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if propagation not in ("+z", "-z"):
        raise ValueError("propagation must be '+z' or '-z'")
    theta = default_angles() if theta_deg is None else np.asarray(theta_deg, dtype=float)
    k = medium.wavenumber(frequency)
    x = k * radius
    L = mie_terms(x) if n_terms is None else int(n_terms)
    n = np.arange(1, L + 1)

    # Riccati-Bessel psi = x j_n, xi = x h_n; PEC coefficients a_n = psi'/xi', b_n = psi/xi
    jn, djn = spherical_jn(n, x), spherical_jn(n, x, derivative=True)
    yn, dyn = spherical_yn(n, x), spherical_yn(n, x, derivative=True)
    psi, dpsi = x * jn, jn + x * djn
    xi, dxi = x * (jn + 1j * yn), (jn + 1j * yn) + x * (djn + 1j * dyn)
    a, b = dpsi / dxi, psi / xi

    scatter = np.deg2rad(theta if propagation == "+z" else 180.0 - theta)
    pi_n, tau_n = _angular(L, np.cos(scatter))
    c = ((2 * n + 1) / (n * (n + 1)))[:, None]
    S2 = np.sum(c * (a[:, None] * tau_n + b[:, None] * pi_n), axis=0)
    sigma = 4 * np.pi * np.abs(S2) ** 2 / k ** 2
    return RcsSweep(theta, sigma, frequency, 0.0,
                    {"reference": "mie", "radius_m": radius, "mie_terms": L})


def mie_backscatter(radius: float, medium: BackgroundMedium, frequency: float,
                    n_terms: int | None = None) -> float:
    """Monostatic PEC-sphere RCS from the closed backscatter series."""
    x = medium.wavenumber(frequency) * radius
    L = mie_terms(x) if n_terms is None else int(n_terms)
    n = np.arange(1, L + 1)
    jn, djn = spherical_jn(n, x), spherical_jn(n, x, derivative=True)
    yn, dyn = spherical_yn(n, x), spherical_yn(n, x, derivative=True)
    h, dh = jn + 1j * yn, djn + 1j * dyn
    a = (jn + x * djn) / (h + x * dh)
    b = jn / h
    lam = 2 * np.pi / medium.wavenumber(frequency)
    return float(lam ** 2 / (4 * np.pi) * abs(np.sum((-1.0) ** n * (2 * n + 1) * (a - b))) ** 2)


def rcs_relative_error(test: RcsSweep, ref: RcsSweep) -> float:
    """||sigma_test - sigma_ref||_2 / ||sigma_ref||_2 on linear (m^2) values."""
    if test.theta_deg.shape != ref.theta_deg.shape or not np.allclose(test.theta_deg,
                                                                       ref.theta_deg):
        raise ValueError("RCS sweeps are sampled on different theta grids")
    denom = np.linalg.norm(ref.sigma)
    if denom == 0:
        raise ValueError("reference RCS is identically zero")
    return float(np.linalg.norm(test.sigma - ref.sigma) / denom)


def triangle_current_magnitudes(currents, rwg: RwgBasisSet) -> np.ndarray:
    """|J| at each triangle centroid (A/m)."""
    mesh = rwg.mesh
    coef = (_incidence(rwg) @ np.asarray(currents, dtype=complex)).reshape(-1, 3)
    coef = coef / (2 * mesh.areas[:, None])
    corners = mesh.vertices[mesh.triangles]
    c = corners.mean(axis=1)
    J = coef.sum(axis=1)[:, None] * c - np.einsum("ti,tix->tx", coef, corners)
    return np.linalg.norm(J, axis=1)
