"""Triangle quadrature rules and closed-form 1/R potential integrals."""

from __future__ import annotations

import numpy as np

# Symmetric Gauss rules on the reference triangle (Dunavant).  Barycentric
# coordinates and weights normalised to sum to one.
_A7, _B7 = 0.059715871789770, 0.470142064105115
_C7, _D7 = 0.797426985353087, 0.101286507323456
_RULES = {
    1: (np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])),
    3: (np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
        np.full(3, 1 / 3)),
    4: (np.array([[1 / 3, 1 / 3, 1 / 3], [0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6]]),
        np.array([-27 / 48, 25 / 48, 25 / 48, 25 / 48])),
    7: (np.array([[1 / 3, 1 / 3, 1 / 3],
                  [_A7, _B7, _B7], [_B7, _A7, _B7], [_B7, _B7, _A7],
                  [_C7, _D7, _D7], [_D7, _C7, _D7], [_D7, _D7, _C7]]),
        np.array([0.225,
                  0.132394152788506, 0.132394152788506, 0.132394152788506,
                  0.125939180544827, 0.125939180544827, 0.125939180544827])),
}

ORDERS = tuple(_RULES)


def triangle_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric points ``(q, 3)`` and weights ``(q,)`` of an ``order``-point rule."""
    try:
        bary, w = _RULES[order]
    except KeyError:
        raise ValueError(f"quadrature order must be one of {ORDERS}, got {order}") from None
    return bary.copy(), w.copy()


def triangle_points(corners: np.ndarray, areas: np.ndarray, order: int):
    """Physical quadrature points and area-scaled weights.

    ``corners`` has shape ``(t, 3, 3)``; returns points ``(t, q, 3)`` and
    weights ``(t, q)`` such that ``sum(w * f(points))`` integrates ``f`` over
    each triangle.
    """
    bary, w = triangle_rule(order)
    pts = np.einsum("qi,tix->tqx", bary, corners)
    return pts, areas[:, None] * w[None, :]


def potential_integrals(obs: np.ndarray, corners: np.ndarray):
    """Closed-form integrals of 1/R over flat triangles.

    For observation points ``obs`` of shape ``(..., 3)`` and triangles
    ``corners`` of shape ``(..., 3, 3)`` (broadcast together), returns

    * ``i0 = int_T 1/|r - r'| dS'``
    * ``i1 = int_T (r' - rho)/|r - r'| dS'`` (vector, in the triangle plane)
    * ``rho``, the projection of ``r`` onto the triangle plane,

    so that ``int_T r'/R dS' = i1 + rho * i0``.  Valid for points on, near or
    far from the triangle, including its interior.
    """
    obs = np.asarray(obs, dtype=float)
    corners = np.asarray(corners, dtype=float)
    a = corners
    b = np.roll(corners, -1, axis=-2)           # edge k runs corner k -> corner k+1
    normal = np.cross(corners[..., 1, :] - corners[..., 0, :],
                      corners[..., 2, :] - corners[..., 0, :])
    normal /= np.linalg.norm(normal, axis=-1, keepdims=True)

    d = np.einsum("...x,...x->...", obs - corners[..., 0, :], normal)
    rho = obs - d[..., None] * normal
    absd = np.abs(d)[..., None]

    edge = b - a
    lhat = edge / np.linalg.norm(edge, axis=-1, keepdims=True)
    uhat = np.cross(lhat, normal[..., None, :])   # outward in-plane edge normal

    ra = a - rho[..., None, :]
    rb = b - rho[..., None, :]
    s_minus = np.einsum("...kx,...kx->...k", ra, lhat)
    s_plus = np.einsum("...kx,...kx->...k", rb, lhat)
    t0 = np.einsum("...kx,...kx->...k", ra, uhat)
    d2 = (np.asarray(d) ** 2)[..., None]
    r0sq = t0 ** 2 + d2
    r_minus = np.sqrt(s_minus ** 2 + r0sq)
    r_plus = np.sqrt(s_plus ** 2 + r0sq)

    scale = np.linalg.norm(edge, axis=-1)
    on_line = r0sq < (1e-12 * scale) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        # (R+ + s+)/(R- + s-) == (R- - s-)/(R+ - s+); use the form without cancellation
        forward = np.log((r_plus + s_plus) / (r_minus + s_minus))
        backward = np.log((r_minus - s_minus) / (r_plus - s_plus))
        f2 = np.where(s_plus > 0, forward, backward)
        f2 = np.where(on_line, 0.0, f2)
        beta = (np.arctan(t0 * s_plus / (r0sq + absd * r_plus))
                - np.arctan(t0 * s_minus / (r0sq + absd * r_minus)))
        beta = np.where(on_line, 0.0, beta)

    i0 = np.sum(t0 * f2 - absd * beta, axis=-1)
    i1 = 0.5 * np.einsum("...k,...kx->...x", r0sq * f2 + s_plus * r_plus - s_minus * r_minus,
                         uhat)
    return i0, i1, rho
