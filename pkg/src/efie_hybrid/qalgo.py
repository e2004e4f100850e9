"""HHL and VQLS linear solvers on the statevector simulator.

Both return unit vectors (a quantum state carries no norm and no global sign);
the caller recovers the scale classically.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .qsim import (NOISELESS, Circuit, Gate, NoiseModel, Statevector, apply_cnot,
                   apply_ry_batch, noise_batch, qubit_probability)

log = logging.getLogger(__name__)


class PostselectionError(RuntimeError):
    """The HHL ancilla never read 1 within the allowed attempts."""


class PhaseWraparoundError(ValueError):
    """An eigenphase falls outside the clock register's signed range."""


def n_qubits_for(dim: int) -> int:
    """ceil(log2(dim)), at least 1."""
    return max(1, int(np.ceil(np.log2(max(dim, 1)))))


def hermitian_dilation(C: np.ndarray, f: np.ndarray):
    """Symmetric embedding H = [[0, C], [C^T, 0]], g = [f; 0].

    The lower half of the solution of ``H w = g`` solves ``C z = f``.
    """
    C = np.asarray(C)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("dilation needs a square matrix")
    n = C.shape[0]
    H = np.zeros((2 * n, 2 * n), dtype=C.dtype)
    H[:n, n:] = C
    H[n:, :n] = C.T
    g = np.concatenate([np.asarray(f), np.zeros(n, dtype=np.asarray(f).dtype)])
    return H, g


def pad_pow2(M: np.ndarray, v: np.ndarray, min_dim: int = 1):
    """Pad to the next power of two with an identity block and zero entries.

    The padded coordinates of the solution are exactly zero.
    """
    M = np.asarray(M)
    v = np.asarray(v)
    n = M.shape[0]
    if M.shape != (n, n) or v.shape != (n,):
        raise ValueError("expected a square matrix and a matching vector")
    target = max(min_dim, 1 << max(0, int(np.ceil(np.log2(max(n, 1))))))
    if target == n:
        return M, v
    Mp = np.eye(target, dtype=np.result_type(M, float))
    Mp[:n, :n] = M
    vp = np.zeros(target, dtype=np.result_type(v, float))
    vp[:n] = v
    return Mp, vp


def extract_classical(state: Statevector, dim: int) -> np.ndarray:
    """Real unit vector from the first ``dim`` amplitudes.

    A global phase is removed first (aligning the largest amplitude with the
    real axis up to sign), so negating the state negates the result.
    """
    if not 1 <= dim <= state.data.size:
        raise ValueError(f"dim must lie in [1, {state.data.size}]")
    a = state.data[:dim]
    k = int(np.argmax(np.abs(a)))
    if abs(a[k]) == 0:
        raise ValueError("state has no weight on the requested coordinates")
    # rotate by a phase in (-pi/2, pi/2] so that a global sign flip survives
    phase = a[k] / abs(a[k])
    if phase.real < 0:
        phase = -phase
    a = a / phase
    resid = np.abs(a.imag).max()
    if resid > 1e-6:
        warnings.warn(f"imaginary residue {resid:.2e} discarded in classical extraction",
                      RuntimeWarning, stacklevel=2)
    x = a.real
    nrm = np.linalg.norm(x)
    if nrm == 0:
        raise ValueError("extracted vector has zero norm")
    return x / nrm


# -- HHL -------------------------------------------------------------------

@dataclass(frozen=True)
class HhlConfig:
    """HHL settings.

    ``evolution_time`` and ``c_rot`` default to pi/(1.05 lambda_max) and
    0.9 lambda_min of the input matrix.
    """

    clock_qubits: int = 10
    evolution_time: float | None = None
    c_rot: float | None = None
    max_attempts: int = 10000

    def __post_init__(self):
        if self.clock_qubits < 1:
            raise ValueError("need at least one clock qubit")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be positive")


@dataclass(frozen=True, eq=False)
class HhlResult:
    state: Statevector           # input-output register
    n_qubits: int                # ancilla + clock + io
    attempts: int
    success_probability: float


def _qft_gates(qubits):
    """QFT on ``qubits`` (``qubits[0]`` least significant)."""
    m = len(qubits)
    gates = []
    for j in reversed(range(m)):
        gates.append(Gate("h", (qubits[j],)))
        for k in reversed(range(j)):
            gates.append(Gate("cphase", (qubits[j],), (qubits[k],), (np.pi / 2 ** (j - k),)))
    for i in range(m // 2):
        a, b = qubits[i], qubits[m - 1 - i]
        gates += [Gate("cnot", (b,), (a,)), Gate("cnot", (a,), (b,)), Gate("cnot", (b,), (a,))]
    return gates


def hhl_circuit(H: np.ndarray, cfg: HhlConfig):
    """Build the HHL circuit for Hermitian ``H``.

    Register layout (qubit 0 least significant): io ``0..n-1``, clock
    ``n..n+m-1``, ancilla ``n+m``.  Returns ``(circuit, n_io, eigenvalues)``.
    """
    H = np.asarray(H)
    dim = H.shape[0]
    if H.shape != (dim, dim) or dim < 2 or dim & (dim - 1):
        raise ValueError("HHL needs a square matrix of power-of-two size >= 2")
    scale = max(np.abs(H).max(), np.finfo(float).tiny)
    if np.abs(H - H.conj().T).max() > 1e-10 * scale:
        raise ValueError("HHL needs a Hermitian matrix")
    n = n_qubits_for(dim)
    m = cfg.clock_qubits
    lam, V = np.linalg.eigh(H)
    lam_abs = np.abs(lam)
    if lam_abs.min() <= 1e-14 * lam_abs.max():
        raise ValueError("matrix is singular")
    t = cfg.evolution_time if cfg.evolution_time is not None else np.pi / (1.05 * lam_abs.max())
    if lam_abs.max() * t / (2 * np.pi) >= 0.5:
        raise PhaseWraparoundError(
            f"|lambda| t / 2pi = {lam_abs.max() * t / (2 * np.pi):.3f} >= 1/2 for the signed clock")
    c_rot = cfg.c_rot if cfg.c_rot is not None else 0.9 * lam_abs.min()

    io = tuple(range(n))
    clock = tuple(range(n, n + m))
    anc = n + m
    qpe = Circuit(n + m + 1)
    qpe.extend(Gate("h", (c,)) for c in clock)
    for k, c in enumerate(clock):
        U = (V * np.exp(1j * lam * t * 2 ** k)) @ V.conj().T
        qpe.append(Gate("unitary", io, (c,), matrix=U))
    qpe.extend(Circuit(n + m + 1, _qft_gates(clock)).inverse().gates)

    # clock value c encodes lambda t/(2 pi) ~ c/2^m, read as a signed integer
    cvals = np.arange(2 ** m)
    signed = np.where(cvals >= 2 ** (m - 1), cvals - 2 ** m, cvals)
    lam_tilde = 2 * np.pi * signed / (t * 2 ** m)
    with np.errstate(divide="ignore"):
        ratio = np.where(signed == 0, 0.0, c_rot / lam_tilde)
    angles = 2 * np.arcsin(np.clip(ratio, -1.0, 1.0))

    circ = Circuit(n + m + 1)
    circ.extend(qpe.gates)
    circ.append(Gate("ucry", (anc,), clock, tuple(angles)))
    circ.extend(qpe.inverse().gates)
    return circ, n, lam


def hhl_solve(H: np.ndarray, g: np.ndarray, cfg: HhlConfig = HhlConfig(),
              noise: NoiseModel = NOISELESS, rng: np.random.Generator | None = None) -> HhlResult:
    """Approximate ``H^{-1} g / ||H^{-1} g||`` with HHL.

    ``|g>`` is loaded by direct amplitude encoding.  The ancilla is measured
    until it reads 1; the io register is then read in the clock-zero
    subspace.  Without noise every attempt sees the same state, so repeated
    attempts only redraw the measurement.
    """
    rng = np.random.default_rng() if rng is None else rng
    circ, n, _ = hhl_circuit(H, cfg)
    m = cfg.clock_qubits
    total = n + m + 1
    g = np.asarray(g, dtype=complex)
    if g.shape != (2 ** n,):
        raise ValueError("right-hand side does not match the matrix size")
    start = np.zeros(2 ** total, dtype=complex)
    start[:2 ** n] = g / np.linalg.norm(g)
    start = Statevector(start, check=False)

    anc = n + m
    out = None
    p1 = 0.0
    for attempt in range(1, cfg.max_attempts + 1):
        if out is None or noise.active:
            out = circ.run(start, noise, rng)
            p1 = qubit_probability(out, anc)
        if rng.random() < p1:
            sel = out.data[(1 << anc): (1 << anc) + 2 ** n]
            nrm = np.linalg.norm(sel)
            if nrm < 1e-12:
                # all weight outside the clock-zero subspace: treat as failed
                continue
            return HhlResult(Statevector(sel / nrm, check=False), total, attempt, p1)
    raise PostselectionError(
        f"ancilla did not read 1 in {cfg.max_attempts} attempts (p = {p1:.2e})")


# -- VQLS ------------------------------------------------------------------

@dataclass(frozen=True)
class VqlsConfig:
    """VQLS settings.

    ``max_iter`` bounds gradient steps over all restarts together.  A run
    stagnates when its best cost improves by less than ``stall_tol``
    (relative) over ``stall_window`` steps; it is then restarted from random
    angles, at most ``restarts`` times.  With noise, each cost is averaged
    over ``trajectories`` noise samples.  ``shots`` switches the cost to
    sampled estimates.

    ``optimizer``: ``"gd"`` is plain gradient descent, ``"adam"`` rescales
    steps by running gradient moments.  ``"auto"`` uses gd without noise and
    adam with it, since noise shrinks the cost landscape and with it the gd
    step; under noise ``"auto"`` also stops at a stall instead of restarting.
    """

    layers: int = 1
    threshold: float = 1e-3
    max_iter: int = 500
    learning_rate: float = 0.1
    seed: int = 0
    restarts: int = 5
    stall_window: int = 25
    stall_tol: float = 1e-3
    trajectories: int = 16
    shots: int | None = None
    optimizer: str = "auto"

    def __post_init__(self):
        if self.optimizer not in ("auto", "gd", "adam"):
            raise ValueError("optimizer must be 'auto', 'gd' or 'adam'")
        if self.threshold <= 0:
            raise ValueError("cost threshold must be positive")
        if self.layers < 0 or self.max_iter < 1 or self.learning_rate <= 0:
            raise ValueError("invalid VQLS settings")


@dataclass(frozen=True, eq=False)
class VqlsResult:
    state: Statevector
    costs: np.ndarray            # cost at every gradient step
    grad_norms: np.ndarray
    converged: bool
    params: np.ndarray
    n_qubits: int
    restarts: int
    final_cost: float            # noiseless cost of ``state``

    def __iter__(self):
        # unpack as (state, cost history)
        return iter((self.state, self.costs))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iteration,cost,gradient_norm\n")
            for i, (c, g) in enumerate(zip(self.costs, self.grad_norms)):
                fh.write(f"{i},{c:.12e},{g:.12e}\n")


def n_params(n_qubits: int, layers: int) -> int:
    return (layers + 1) * n_qubits


def ansatz_states(theta: np.ndarray, n_qubits: int, layers: int, noise: NoiseModel = NOISELESS,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Hardware-efficient ansatz states for a batch of parameter rows.

    Each layer is RY on every qubit followed by a CNOT chain (i controls
    i+1); a final RY layer closes the circuit.  Returns ``(B, 2**n)``.
    """
    theta = np.atleast_2d(theta)
    B = theta.shape[0]
    q = n_qubits
    psi = np.zeros((B, 2 ** q), dtype=complex if noise.active else float)
    psi[:, 0] = 1.0
    noisy_ry = noise.applies_to("ry")
    noisy_cx = noise.applies_to("cnot")
    for layer in range(layers + 1):
        for i in range(q):
            psi = apply_ry_batch(psi, q, i, theta[:, layer * q + i])
            if noisy_ry:
                psi = noise_batch(psi, q, i, noise.p, rng)
        if layer == layers:
            break
        for i in range(q - 1):
            psi = apply_cnot(psi, q, i, i + 1)
            if noisy_cx:
                psi = noise_batch(psi, q, i + 1, noise.p, rng)
    return psi


def ansatz_circuit(theta: np.ndarray, n_qubits: int, layers: int) -> Circuit:
    """The same ansatz as an explicit gate list (for traces and cross-checks)."""
    q = n_qubits
    circ = Circuit(q)
    for layer in range(layers + 1):
        circ.extend(Gate("ry", (i,), params=(float(theta[layer * q + i]),)) for i in range(q))
        if layer < layers:
            circ.extend(Gate("cnot", (i + 1,), (i,)) for i in range(q - 1))
    return circ


class _GlobalCost:
    """1 - |<f|C x>|^2 / <x|C^T C|x> with exact parameter-shift gradients.

    Numerator N = |<f|Cx>|^2 and denominator D = <x|C^T C|x> are expectation
    values, so each has an exact two-point shift rule; the gradient of the
    ratio follows from the quotient rule.
    """

    def __init__(self, C, f, n_qubits, layers, noise, rng, cfg):
        self.C = np.asarray(C, dtype=float)
        self.f = np.asarray(f, dtype=float) / np.linalg.norm(f)
        self.q = n_qubits
        self.layers = layers
        self.noise = noise
        self.rng = rng
        self.traj = cfg.trajectories if noise.active else 1
        self.shots = cfg.shots
        self.c2 = np.linalg.norm(self.C, 2) ** 2

    def _nd(self, thetas: np.ndarray):
        B = thetas.shape[0]
        rows = np.repeat(thetas, self.traj, axis=0)
        psi = ansatz_states(rows, self.q, self.layers, self.noise, self.rng)
        y = psi @ self.C.T
        num = np.abs(y @ self.f) ** 2
        den = np.einsum("bi,bi->b", y.conj(), y).real
        num = num.reshape(B, self.traj).mean(axis=1)
        den = den.reshape(B, self.traj).mean(axis=1)
        if self.shots:
            # projective-measurement estimates of the normalised quantities
            num = self.rng.binomial(self.shots, np.clip(num / self.c2, 0, 1)) / self.shots * self.c2
            den = self.rng.binomial(self.shots, np.clip(den / self.c2, 0, 1)) / self.shots * self.c2
        return num, den

    def value_and_grad(self, theta: np.ndarray):
        P = theta.size
        shifts = np.concatenate([np.eye(P), -np.eye(P)]) * (np.pi / 2)
        batch = np.vstack([theta[None, :], theta[None, :] + shifts])
        num, den = self._nd(batch)
        n0, d0 = num[0], den[0]
        dn = 0.5 * (num[1:P + 1] - num[P + 1:])
        dd = 0.5 * (den[1:P + 1] - den[P + 1:])
        if d0 <= 0:
            return 1.0, np.zeros(P)
        cost = 1.0 - n0 / d0
        grad = -(dn * d0 - n0 * dd) / d0 ** 2
        return float(cost), grad


def _exact_cost(C, f_hat, x):
    y = C @ x
    ny = np.linalg.norm(y)
    if ny == 0:
        return 1.0
    return float(1.0 - abs(np.vdot(f_hat, y)) ** 2 / ny ** 2)


def vqls_solve(C: np.ndarray, f: np.ndarray, cfg: VqlsConfig = VqlsConfig(),
               noise: NoiseModel = NOISELESS, rng: np.random.Generator | None = None,
               init: np.ndarray | None = None) -> VqlsResult:
    """Train the ansatz so that ``C|x>`` is parallel to ``|f>``.

    Gradient descent (or Adam) on the global cost.  Returns the best state seen
    (by its training cost) and the per-step cost trace.  With noise, training
    sees noisy costs; the returned state is the ideal ansatz at the trained
    angles.
    """
    C = np.asarray(C, dtype=float)
    f = np.asarray(f, dtype=float)
    dim = C.shape[0]
    if C.shape != (dim, dim) or dim < 2 or dim & (dim - 1):
        raise ValueError("VQLS needs a square matrix of power-of-two size >= 2")
    if f.shape != (dim,) or not np.any(f):
        raise ValueError("right-hand side must be a nonzero vector of matching size")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    q = n_qubits_for(dim)
    P = n_params(q, cfg.layers)
    cost_fn = _GlobalCost(C, f, q, cfg.layers, noise, rng, cfg)

    theta = rng.uniform(-np.pi, np.pi, P) if init is None else np.asarray(init, float).copy()
    costs, gnorms = [], []
    best_cost, best_theta = np.inf, theta.copy()
    run_best, run_best_at = np.inf, 0
    restarts = 0
    max_restarts = cfg.restarts
    optimizer = cfg.optimizer
    if optimizer == "auto":
        optimizer = "adam" if noise.active else "gd"
        if noise.active:
            max_restarts = 0
    converged = False
    m1 = np.zeros(P)
    m2 = np.zeros(P)
    t_adam = 0
    for it in range(cfg.max_iter):
        cost, grad = cost_fn.value_and_grad(theta)
        costs.append(cost)
        gnorms.append(float(np.linalg.norm(grad)))
        if cost < best_cost:
            best_cost, best_theta = cost, theta.copy()
        if cost <= cfg.threshold:
            converged = True
            break
        if cost < run_best * (1 - cfg.stall_tol):
            run_best, run_best_at = cost, it
        elif it - run_best_at >= cfg.stall_window:
            if restarts >= max_restarts:
                break
            restarts += 1
            theta = rng.uniform(-np.pi, np.pi, P)
            run_best, run_best_at = np.inf, it
            m1[:] = 0.0
            m2[:] = 0.0
            t_adam = 0
            continue
        if optimizer == "gd":
            theta = theta - cfg.learning_rate * grad
        else:
            t_adam += 1
            m1 = 0.9 * m1 + 0.1 * grad
            m2 = 0.999 * m2 + 0.001 * grad ** 2
            step = (m1 / (1 - 0.9 ** t_adam)) / (np.sqrt(m2 / (1 - 0.999 ** t_adam)) + 1e-8)
            theta = theta - cfg.learning_rate * step

    x = ansatz_states(best_theta, q, cfg.layers)[0]
    state = Statevector(x.astype(complex), check=False)
    final = _exact_cost(C, cost_fn.f, x)
    if noise.active:
        # the noisy estimate can never reach the threshold; judge the ideal state
        converged = final <= cfg.threshold
    if not converged:
        log.debug("VQLS stopped unconverged at cost %.3e", final)
    return VqlsResult(state, np.array(costs), np.array(gnorms), converged, best_theta, q,
                      restarts, final)
