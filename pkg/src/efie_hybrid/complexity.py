"""Asymptotic cost models of the single and hybrid quantum linear solvers.

Values are in arbitrary units and only meaningful as curve shapes.  The
unspecified ``polylog(N)`` factor is taken as ``log(N)**2`` (natural log).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

KINDS = ("HHL-single", "VQLS-single", "hybrid-HHL", "hybrid-VQLS")
POLYLOG = "log(N)^2"


@dataclass(frozen=True)
class ComplexityParams:
    kappa: float = 5.0           # kappa of A (single) or of P^-1 A (hybrid)
    kappa_sub: float = 5.0
    n_sub: int = 32
    xi_ext: float = 1e-3
    xi_int: float = 1e-3
    xi_hhl: float = 1e-2
    xi_vqls: float = 1e-3

    def __post_init__(self):
        for name in ("kappa", "kappa_sub", "n_sub", "xi_ext", "xi_int", "xi_hhl", "xi_vqls"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("xi_ext", "xi_int", "xi_vqls"):
            if getattr(self, name) >= 1:
                raise ValueError(f"{name} must be below 1")


def _polylog(n: float) -> float:
    return math.log(n) ** 2


def exterior_steps(params: ComplexityParams) -> float:
    """kappa log(xi_ext) / (N_sub log(xi_int)), the modelled exterior step count."""
    return params.kappa * math.log(params.xi_ext) / (params.n_sub * math.log(params.xi_int))


def predict_complexity(kind: str, N: int, params: ComplexityParams = ComplexityParams()) -> float:
    """Evaluate one of the cost models at problem size ``N``.

    * ``HHL-single``: kappa^2 log N / xi_HHL
    * ``VQLS-single``: kappa polylog(N) log(1/xi_VQLS)
    * ``hybrid-HHL``: n_ext (N N_sub + kappa_sub^2 log N_sub / (xi_int^4 xi_HHL))
    * ``hybrid-VQLS``: n_ext (N N_sub + kappa_sub polylog(N_sub) log(1/xi_VQLS) / xi_int^4)

    with ``n_ext`` from :func:`exterior_steps`.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    p = params
    if kind == "HHL-single":
        return p.kappa ** 2 * math.log(N) / p.xi_hhl
    if kind == "VQLS-single":
        return p.kappa * _polylog(N) * math.log(1 / p.xi_vqls)
    n_ext = exterior_steps(p)
    if kind == "hybrid-HHL":
        inner = p.kappa_sub ** 2 * math.log(max(p.n_sub, 2)) / (p.xi_int ** 4 * p.xi_hhl)
    elif kind == "hybrid-VQLS":
        inner = p.kappa_sub * _polylog(max(p.n_sub, 2)) * math.log(1 / p.xi_vqls) / p.xi_int ** 4
    else:
        raise ValueError(f"kind must be one of {KINDS}")
    return n_ext * (N * p.n_sub + inner)


def normalized_curve(kind: str, sizes, params: ComplexityParams = ComplexityParams(),
                     anchor: float = 1.0):
    """Predictions over ``sizes`` scaled so the first equals ``anchor``."""
    vals = [predict_complexity(kind, int(n), params) for n in sizes]
    return [anchor * v / vals[0] for v in vals]
