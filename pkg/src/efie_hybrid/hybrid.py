"""Double-layer hybrid iteration: Krylov projection outside, quantum solves inside.

The exterior layer projects the preconditioned system onto an ``n_sub``
dimensional Krylov subspace; the interior layer solves the small projected
system repeatedly with a unit-norm inner solver (HHL, VQLS or a QR reference),
recovering each step's scale by least squares.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve, qr, solve_triangular

from .mom import RealSystem
from .precond import (DENSE_KAPPA_LIMIT, Preconditioner, condition_estimate, ilut,
                      ilut_realified)
from .qalgo import (HhlConfig, VqlsConfig, extract_classical, hermitian_dilation, hhl_solve,
                    n_qubits_for, pad_pow2, vqls_solve)
from .qsim import NOISELESS, NoiseModel
from .subspace import build_subspace, recover_scale

log = logging.getLogger(__name__)

INNER_SOLVERS = ("hhl", "vqls", "qr")
PRECONDITIONERS = ("identity", "ilut")


ILUT_ORDERINGS = ("auto", "complex", "natural", "interleaved")


class InnerSolverError(RuntimeError):
    def __init__(self, step: int, cause: Exception):
        super().__init__(f"inner solver failed at exterior step {step}: {cause}")
        self.step = step
        self.cause = cause


@dataclass(frozen=True)
class HybridConfig:
    """Settings of the double-layer iteration.

    With ``relative=True`` (default) the exterior residual is measured
    relative to ``||P^-1 b||`` and the interior one relative to ``||d||``;
    otherwise absolute norms are compared with the thresholds.
    ``ilut_ordering="auto"`` factors the complex block with complex pivots
    ("complex") when the matrix has the realified block structure, and the
    matrix as given ("natural") otherwise; "interleaved" is the real-arithmetic
    factorisation with real and imaginary unknowns paired.
    """

    xi_ext: float = 1e-3
    xi_int: float = 1e-3
    n_sub: int = 32
    max_ext: int = 200
    max_int: int = 50
    inner: str = "qr"
    precond: str = "ilut"
    ilut_tau: float = 1e-3
    ilut_fill: int | None = None
    ilut_ordering: str = "auto"
    hhl: HhlConfig = HhlConfig()
    vqls: VqlsConfig = VqlsConfig()
    noise: NoiseModel = NOISELESS
    seed: int = 0
    relative: bool = True
    estimate_condition: bool = True

    def __post_init__(self):
        if self.xi_ext <= 0 or self.xi_int <= 0:
            raise ValueError("convergence thresholds must be positive")
        if self.n_sub < 1 or self.n_sub & (self.n_sub - 1):
            raise ValueError("n_sub must be a power of two")
        if self.inner not in INNER_SOLVERS:
            raise ValueError(f"inner solver must be one of {INNER_SOLVERS}")
        if self.precond not in PRECONDITIONERS:
            raise ValueError(f"preconditioner must be one of {PRECONDITIONERS}")
        if self.max_ext < 1 or self.max_int < 1:
            raise ValueError("iteration caps must be positive")
        if self.ilut_ordering not in ILUT_ORDERINGS:
            raise ValueError(f"ILUT ordering must be one of {ILUT_ORDERINGS}")


@dataclass
class SolveReport:
    """Outcome and bookkeeping of one hybrid solve.

    ``alpha`` holds the exterior residual before the first and after every
    exterior step; ``beta[e]`` the interior residuals of step ``e`` (initial
    value first), both in the units compared against the thresholds.
    """

    converged: bool = False
    inner: str = "qr"
    precond: str = "identity"
    n_ext: int = 0
    interior_counts: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    beta: list = field(default_factory=list)
    kappa_tilde: float | None = None
    kappa_sub: list = field(default_factory=list)
    n_qubits: int = 0
    inner_unconverged: int = 0
    relative: bool = True
    final_residual: float = float("nan")
    t_precond: float = 0.0
    t_sub_build: float = 0.0
    t_iter_quantum: float = 0.0
    t_total: float = 0.0

    @property
    def n_int(self) -> int:
        """Global interior count sum_e (N_int^e + 1) - 1."""
        if not self.interior_counts:
            return 0
        return int(sum(c + 1 for c in self.interior_counts) - 1)

    @property
    def kappa_sub_mean(self) -> float:
        return float(np.mean(self.kappa_sub)) if self.kappa_sub else float("nan")

    def text(self) -> str:
        kt = "n/a" if self.kappa_tilde is None else f"{self.kappa_tilde:.6g}"
        lines = [
            f"converged: {str(self.converged).lower()}",
            f"inner_solver: {self.inner}",
            f"preconditioner: {self.precond}",
            f"residual_mode: {'relative' if self.relative else 'absolute'}",
            f"N_ext: {self.n_ext}",
            f"N_int: {self.n_int}",
            f"N_qubit: {self.n_qubits}",
            f"kappa_tilde: {kt}",
            f"kappa_sub_mean: {self.kappa_sub_mean:.6g}",
            f"final_alpha: {self.alpha[-1] if self.alpha else float('nan'):.6e}",
            f"final_residual_recomputed: {self.final_residual:.6e}",
            f"inner_unconverged: {self.inner_unconverged}",
            f"T_precond_s: {self.t_precond:.6f}",
            f"T_sub_build_s: {self.t_sub_build:.6f}",
            f"T_iter_quantum_s: {self.t_iter_quantum:.6f}",
            f"T_total_s: {self.t_total:.6f}",
        ]
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        """Residual trace with columns layer, step, residual."""
        with open(path, "w") as fh:
            fh.write("layer,step,residual\n")
            for e, a in enumerate(self.alpha):
                fh.write(f"exterior,{e},{a:.12e}\n")
            step = 0
            for hist in self.beta:
                for b in hist:
                    fh.write(f"interior,{step},{b:.12e}\n")
                    step += 1


@dataclass(frozen=True, eq=False)
class InnerSolution:
    direction: np.ndarray        # unit vector of length dim(C)
    n_qubits: int
    converged: bool = True


def is_realified(A: np.ndarray, tol: float = 1e-12) -> bool:
    """True if A = [[R, S], [S, -R]] blockwise."""
    n = A.shape[0]
    if n % 2:
        return False
    h = n // 2
    scale = max(np.abs(A).max(), np.finfo(float).tiny)
    return bool(np.abs(A[:h, :h] + A[h:, h:]).max() <= tol * scale
                and np.abs(A[:h, h:] - A[h:, :h]).max() <= tol * scale)


def build_preconditioner(A: np.ndarray, cfg: HybridConfig) -> Preconditioner:
    if cfg.precond == "identity":
        return Preconditioner(None)
    ordering = cfg.ilut_ordering
    if ordering == "auto":
        ordering = "complex" if is_realified(A) else "natural"
    if ordering == "complex":
        return Preconditioner(ilut_realified(A, cfg.ilut_tau, cfg.ilut_fill))
    return Preconditioner(ilut(A, cfg.ilut_tau, cfg.ilut_fill, ordering))


def inner_solve_dispatch(C: np.ndarray, f: np.ndarray, cfg: HybridConfig,
                         rng: np.random.Generator) -> InnerSolution:
    """Unit direction z with C z ~ f from the configured inner solver."""
    C = np.asarray(C, dtype=float)
    f = np.asarray(f, dtype=float)
    k = C.shape[0]
    if not np.any(f):
        raise ValueError("right-hand side is zero")
    if cfg.inner == "qr":
        Q, R = qr(C)
        z = solve_triangular(R, Q.T @ f)
        return InnerSolution(z / np.linalg.norm(z), 0)
    if cfg.inner == "hhl":
        H, g = hermitian_dilation(C, f)
        H, g = pad_pow2(H, g, min_dim=2)
        res = hhl_solve(H, g, cfg.hhl, cfg.noise, rng)
        w = extract_classical(res.state, H.shape[0])
        z = w[k:2 * k]
        nz = np.linalg.norm(z)
        if nz < 1e-12:
            raise ValueError("HHL output has no weight on the solution block")
        return InnerSolution(z / nz, res.n_qubits)
    Cp, fp = pad_pow2(C, f, min_dim=2)
    res = vqls_solve(Cp, fp, cfg.vqls, cfg.noise, rng)
    return InnerSolution(extract_classical(res.state, k), res.n_qubits, res.converged)


def qubit_count(cfg: HybridConfig, n_sub: int) -> int:
    """Register size used by the inner solver for an ``n_sub`` system."""
    if cfg.inner == "qr":
        return 0
    if cfg.inner == "vqls":
        return n_qubits_for(max(n_sub, 2))
    return 1 + cfg.hhl.clock_qubits + n_qubits_for(2 * n_sub)


def _effective_n_sub(n_sub: int, n: int) -> int:
    while n_sub > n:
        n_sub //= 2
    return max(n_sub, 1)


def hybrid_solve(system, cfg: HybridConfig = HybridConfig()):
    """Solve ``A x = b`` with the double-layer hybrid iteration.

    Parameters
    ----------
    system : RealSystem or tuple (A, b)
    cfg : HybridConfig

    Returns
    -------
    x : ndarray
        Best solution found (the last iterate).
    report : SolveReport
    """
    t_start = time.perf_counter()
    if isinstance(system, RealSystem):
        A, b = system.A, system.b
    else:
        A, b = system
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    N = b.shape[0]
    if A.shape != (N, N):
        raise ValueError("matrix and right-hand side sizes differ")
    rng = np.random.default_rng(cfg.seed)
    report = SolveReport(inner=cfg.inner, relative=cfg.relative)

    # Step 1: left preconditioning as an operator composition
    t0 = time.perf_counter()
    P = build_preconditioner(A, cfg)
    report.t_precond = time.perf_counter() - t0
    report.precond = P.name

    def op(v):
        return P(A @ v)

    b_t = P(b)
    b_norm = float(np.linalg.norm(b_t))

    # Steps 2-3
    x = np.zeros(N)
    e = b_t.copy()
    ref = b_norm if cfg.relative and b_norm > 0 else 1.0
    alpha = float(np.linalg.norm(e)) / ref
    report.alpha.append(alpha)
    n_sub = _effective_n_sub(cfg.n_sub, N)
    report.n_qubits = qubit_count(cfg, n_sub)
    if alpha <= cfg.xi_ext or b_norm == 0:
        report.converged = True
        report.final_residual = alpha
        report.t_total = time.perf_counter() - t_start
        return x, _finish(report, A, P, N, cfg)

    # Step 4: exterior loop
    for ext in range(cfg.max_ext):
        t0 = time.perf_counter()
        sub = build_subspace(op, e, n_sub)                               # 4.1
        report.t_sub_build += time.perf_counter() - t0
        C, d = sub.C, sub.d
        report.kappa_sub.append(float(np.linalg.cond(C)))

        t0 = time.perf_counter()
        y = np.zeros(sub.n_sub)                                           # 4.2
        f = d.copy()                                                      # 4.3
        d_ref = np.linalg.norm(d) if cfg.relative else 1.0
        betas = [float(np.linalg.norm(f)) / d_ref]
        count = 0
        for _ in range(cfg.max_int):                                      # 4.4
            try:
                sol = inner_solve_dispatch(C, f, cfg, rng)                # 4.4.1-4.4.2
                scale = recover_scale(C, f, sol.direction)                # 4.4.3
            except (ValueError, RuntimeError, ArithmeticError) as exc:
                raise InnerSolverError(ext, exc) from exc
            if not sol.converged:
                report.inner_unconverged += 1
            z = scale * sol.direction                                     # 4.4.4
            y += z                                                        # 4.4.5
            f = f - C @ z                                                 # 4.4.6
            count += 1
            betas.append(float(np.linalg.norm(f)) / d_ref)
            if betas[-1] <= cfg.xi_int:                                   # 4.4.7
                break
        report.t_iter_quantum += time.perf_counter() - t0
        report.beta.append(betas)
        report.interior_counts.append(count)

        x = x + sub.prolong(y)                                            # 4.5
        e = b_t - op(x)                                                   # 4.6
        alpha = float(np.linalg.norm(e)) / ref
        report.alpha.append(alpha)
        report.n_ext = ext + 1
        log.debug("exterior %d: alpha=%.3e, %d interior steps", ext, alpha, count)
        if alpha <= cfg.xi_ext:                                           # 4.7
            report.converged = True
            break

    report.final_residual = float(np.linalg.norm(b_t - op(x))) / ref
    report.t_total = time.perf_counter() - t_start
    return x, _finish(report, A, P, N, cfg)


def _finish(report: SolveReport, A, P, N, cfg) -> SolveReport:
    # diagnostics outside the timed region
    if cfg.estimate_condition:
        report.kappa_tilde = _kappa_tilde(A, P, N)
    return report


def _kappa_tilde(A: np.ndarray, P: Preconditioner, N: int) -> float:
    """Condition estimate of P^-1 A (exact SVD at desk scale)."""
    if N <= DENSE_KAPPA_LIMIT:
        return condition_estimate(lambda V: P(A @ V), None, N)
    lu = lu_factor(A)

    def inverse(v):
        # (P^-1 A)^-1 v = A^-1 P v; P v is recovered from the factors
        return lu_solve(lu, _precond_forward(P, v))

    return condition_estimate(lambda v: P(A @ v), inverse, N)


def _precond_forward(P: Preconditioner, v: np.ndarray) -> np.ndarray:
    """P v, the preconditioner matrix itself."""
    return v if P.factors is None else P.factors.matvec(v)
