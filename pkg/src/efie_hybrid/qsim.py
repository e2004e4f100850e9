"""Statevector simulator: gates, controlled unitaries, Pauli noise and measurement.

Qubit 0 is the least-significant bit of the basis-state index.  Kernels work on
arrays of shape ``(2**n,)`` or ``(batch, 2**n)``; the batched form lets a
variational solver evaluate many parameter sets in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_QUBITS = 24
UNITARY_TOL = 1e-10
NORM_TOL = 1e-10

GATE_KINDS = ("ry", "h", "x", "cnot", "cz", "cphase", "unitary", "ucry")
# multiplexed RY is an RY for noise purposes
_NOISE_FAMILY = {"ucry": "ry"}

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"x": _X, "y": _Y, "z": _Z}


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


@dataclass(frozen=True, eq=False)
class Gate:
    """One gate.

    ``kind`` is one of ``GATE_KINDS``.  ``params`` holds the rotation angle
    for ``ry``/``cphase``.  ``matrix`` is the dense unitary for ``unitary``
    (acting on ``targets``, ``targets[0]`` least significant), applied only
    where all ``controls`` are 1.  ``ucry`` applies RY(angles[c]) to its single
    target, c being the integer read from ``controls`` (``controls[0]`` least
    significant).
    """

    kind: str
    targets: tuple
    controls: tuple = ()
    params: tuple = ()
    matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        qubits = self.targets + self.controls
        if len(set(qubits)) != len(qubits):
            raise ValueError("gate qubits must be distinct (controls disjoint from targets)")
        if min(qubits, default=0) < 0:
            raise ValueError("negative qubit index")
        expect = {"ry": (1, 0), "h": (1, 0), "x": (1, 0), "cnot": (1, 1), "cz": (1, 1),
                  "cphase": (1, 1)}
        if self.kind in expect:
            nt, nc = expect[self.kind]
            if len(self.targets) != nt or len(self.controls) != nc:
                raise ValueError(f"{self.kind} takes {nt} target(s) and {nc} control(s)")
        if self.kind == "unitary":
            M = np.asarray(self.matrix, dtype=complex)
            dim = 2 ** len(self.targets)
            if M.shape != (dim, dim):
                raise ValueError(f"unitary on {len(self.targets)} qubits must be {dim}x{dim}")
            if np.abs(M.conj().T @ M - np.eye(dim)).max() > UNITARY_TOL:
                raise ValueError("controlled-unitary matrix is not unitary")
            object.__setattr__(self, "matrix", M)
        if self.kind == "ucry":
            if len(self.targets) != 1:
                raise ValueError("ucry takes one target")
            angles = np.asarray(self.params, dtype=float).ravel()
            if angles.size != 2 ** len(self.controls):
                raise ValueError("ucry needs one angle per control value")
            object.__setattr__(self, "params", tuple(angles))

    @property
    def qubits(self) -> tuple:
        return self.targets + self.controls

    @property
    def noise_family(self) -> str:
        return _NOISE_FAMILY.get(self.kind, self.kind)

    def trace_line(self) -> str:
        params = " ".join(f"{p:.6g}" for p in self.params[:8])
        if len(self.params) > 8:
            params += " ..."
        return f"{self.kind} {list(self.targets)} {list(self.controls)} {params}".rstrip()


def ry(q: int, theta: float) -> Gate:
    return Gate("ry", (q,), params=(float(theta),))


def cnot(control: int, target: int) -> Gate:
    return Gate("cnot", (target,), (control,))


@dataclass(frozen=True)
class NoiseModel:
    """Stochastic Pauli (trajectory depolarizing) noise after selected gate kinds."""

    p: float = 0.0
    kinds: frozenset = frozenset({"ry", "cnot"})
    seed: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("noise probability must lie in [0, 1]")
        object.__setattr__(self, "kinds", frozenset(k.lower() for k in self.kinds))

    @property
    def active(self) -> bool:
        return self.p > 0.0

    def applies_to(self, kind: str) -> bool:
        return self.active and _NOISE_FAMILY.get(kind, kind) in self.kinds


NOISELESS = NoiseModel(0.0)


class Statevector:
    """Normalised amplitude vector of an ``n``-qubit register."""

    def __init__(self, amplitudes, check: bool = True):
        a = np.array(amplitudes, dtype=complex)
        if a.ndim != 1:
            raise ValueError("amplitudes must be a 1-D array")
        n = int(round(np.log2(a.size))) if a.size else -1
        if n < 1 or 2 ** n != a.size:
            raise ValueError(f"length {a.size} is not a power of two >= 2")
        if n > MAX_QUBITS:
            raise ValueError(f"{n} qubits exceeds the simulator capacity of {MAX_QUBITS}")
        if check and abs(np.vdot(a, a).real - 1.0) > NORM_TOL:
            raise ValueError("amplitudes are not normalised")
        self.data = a
        self.n_qubits = n

    @classmethod
    def zero(cls, n_qubits: int) -> "Statevector":
        if not 1 <= n_qubits <= MAX_QUBITS:
            raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}]")
        a = np.zeros(2 ** n_qubits, dtype=complex)
        a[0] = 1.0
        return cls(a, check=False)

    @classmethod
    def from_vector(cls, v) -> "Statevector":
        """Amplitude-encode ``v`` (normalised here)."""
        v = np.asarray(v, dtype=complex)
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise ValueError("cannot encode a zero vector")
        return cls(v / nrm, check=False)

    def copy(self) -> "Statevector":
        return Statevector(self.data.copy(), check=False)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.data, self.data).real))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.data) ** 2

    def __repr__(self):
        return f"Statevector(n_qubits={self.n_qubits})"


# -- kernels on raw arrays -------------------------------------------------

def _tensor(psi: np.ndarray, n: int) -> np.ndarray:
    return psi.reshape(psi.shape[:-1] + (2,) * n)


def _axis(q: int, n: int, batch: int) -> int:
    return batch + n - 1 - q


def _controlled_view(t: np.ndarray, controls, n: int, batch: int):
    idx = [slice(None)] * t.ndim
    for c in controls:
        idx[_axis(c, n, batch)] = 1
    return tuple(idx)


def apply_matrix(psi: np.ndarray, n: int, M: np.ndarray, targets, controls=()) -> np.ndarray:
    """Apply a dense 2^k x 2^k matrix to ``targets`` (in place where possible)."""
    batch = psi.ndim - 1
    t = _tensor(psi, n)
    k = len(targets)
    if controls:
        # axes of the controlled sub-tensor: control axes removed
        sub_idx = _controlled_view(t, controls, n, batch)
        sub = t[sub_idx]
        removed = sorted(_axis(c, n, batch) for c in controls)

        def sub_axis(q):
            a = _axis(q, n, batch)
            return a - sum(1 for r in removed if r < a)

        axes = [sub_axis(q) for q in reversed(targets)]
    else:
        sub_idx = None
        sub = t
        axes = [_axis(q, n, batch) for q in reversed(targets)]
    moved = np.moveaxis(sub, axes, list(range(sub.ndim - k, sub.ndim)))
    shape = moved.shape
    out = (moved.reshape(-1, 2 ** k) @ M.T).reshape(shape)
    out = np.moveaxis(out, list(range(sub.ndim - k, sub.ndim)), axes)
    if sub_idx is None:
        t = out
    else:
        t = t.copy() if not t.flags.writeable else t
        t[sub_idx] = out
    return t.reshape(psi.shape)


def apply_ry_batch(psi: np.ndarray, n: int, q: int, theta) -> np.ndarray:
    """RY with one angle per batch row (``psi`` shape ``(B, 2**n)``)."""
    B = psi.shape[0]
    c = np.cos(np.asarray(theta) / 2).reshape(B, 1, 1, 1)
    s = np.sin(np.asarray(theta) / 2).reshape(B, 1, 1, 1)
    v = psi.reshape(B, 2 ** (n - 1 - q), 2, 2 ** q)
    a0, a1 = v[:, :, 0:1, :], v[:, :, 1:2, :]
    return np.concatenate([c * a0 - s * a1, s * a0 + c * a1], axis=2).reshape(psi.shape)


def apply_cnot(psi: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    """Permutation form of CNOT; works for any leading batch shape."""
    idx = np.arange(2 ** n)
    perm = np.where((idx >> control) & 1, idx ^ (1 << target), idx)
    return psi[..., perm]


def _apply_ucry(psi: np.ndarray, n: int, target: int, controls, angles) -> np.ndarray:
    idx = np.arange(2 ** n)
    cval = np.zeros(2 ** n, dtype=np.int64)
    for bit, c in enumerate(controls):
        cval |= ((idx >> c) & 1) << bit
    theta = np.asarray(angles)[cval]
    low = ((idx >> target) & 1) == 0
    i0 = idx[low]
    i1 = i0 | (1 << target)
    c, s = np.cos(theta[i0] / 2), np.sin(theta[i0] / 2)
    out = psi.copy()
    a0, a1 = psi[..., i0], psi[..., i1]
    out[..., i0] = c * a0 - s * a1
    out[..., i1] = s * a0 + c * a1
    return out


def apply_gate_array(psi: np.ndarray, n: int, gate: Gate) -> np.ndarray:
    if max(gate.qubits) >= n:
        raise IndexError(f"gate {gate.kind} addresses qubit {max(gate.qubits)} of a "
                         f"{n}-qubit register")
    k = gate.kind
    if k == "ry":
        return apply_matrix(psi, n, ry_matrix(gate.params[0]), gate.targets)
    if k == "h":
        return apply_matrix(psi, n, _H, gate.targets)
    if k == "x":
        return apply_matrix(psi, n, _X, gate.targets)
    if k == "cnot":
        return apply_cnot(psi, n, gate.controls[0], gate.targets[0])
    if k in ("cz", "cphase"):
        phi = np.pi if k == "cz" else gate.params[0]
        idx = np.arange(2 ** n)
        both = ((idx >> gate.controls[0]) & 1) & ((idx >> gate.targets[0]) & 1)
        out = psi.copy()
        out[..., both == 1] *= np.exp(1j * phi)
        return out
    if k == "unitary":
        return apply_matrix(psi, n, gate.matrix, gate.targets, gate.controls)
    if k == "ucry":
        return _apply_ucry(psi, n, gate.targets[0], gate.controls, gate.params)
    raise AssertionError(k)


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    """Return the state after ``gate`` (the input is not modified)."""
    out = apply_gate_array(state.data.copy(), state.n_qubits, gate)
    return Statevector(out, check=False)


def apply_pauli(psi: np.ndarray, n: int, q: int, which: str) -> np.ndarray:
    return apply_matrix(psi, n, PAULIS[which], (q,))


def apply_noise(state: Statevector, noise: NoiseModel, gate_kind: str, targets,
                rng: np.random.Generator) -> Statevector:
    """With probability p, a uniformly drawn X, Y or Z on each target qubit."""
    if not noise.applies_to(gate_kind):
        return state
    psi = state.data
    for q in targets:
        if rng.random() < noise.p:
            psi = apply_pauli(psi, state.n_qubits, q, "xyz"[rng.integers(3)])
    return Statevector(psi, check=False) if psi is not state.data else state


def noise_batch(psi: np.ndarray, n: int, q: int, p: float, rng: np.random.Generator):
    """Independent Pauli noise on qubit ``q`` for every batch row."""
    B = psi.shape[0]
    hit = rng.random(B) < p
    if not hit.any():
        return psi
    which = rng.integers(3, size=B)
    out = psi.copy()
    for w, name in enumerate("xyz"):
        rows = hit & (which == w)
        if rows.any():
            out[rows] = apply_pauli(psi[rows], n, q, name)
    return out


def measure_qubit(state: Statevector, qubit: int, rng: np.random.Generator):
    """Projective Z measurement; returns ``(bit, collapsed state)``."""
    n = state.n_qubits
    if not 0 <= qubit < n:
        raise IndexError("qubit index out of range")
    mask = ((np.arange(2 ** n) >> qubit) & 1).astype(bool)
    p1 = float(np.sum(np.abs(state.data[mask]) ** 2))
    bit = int(rng.random() < p1)
    keep = mask if bit else ~mask
    out = np.where(keep, state.data, 0)
    prob = p1 if bit else 1.0 - p1
    return bit, Statevector(out / np.sqrt(prob), check=False)


def qubit_probability(state: Statevector, qubit: int) -> float:
    """Probability of reading 1 on ``qubit``."""
    mask = ((np.arange(2 ** state.n_qubits) >> qubit) & 1).astype(bool)
    return float(np.sum(np.abs(state.data[mask]) ** 2))


def inner_product(a: Statevector, b: Statevector) -> complex:
    """<a|b>."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("states have different qubit counts")
    return complex(np.vdot(a.data, b.data))


class Circuit:
    """Ordered gate list on a fixed register, with optional noise and trace."""

    def __init__(self, n_qubits: int, gates=None):
        if not 1 <= n_qubits <= MAX_QUBITS:
            raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}]")
        self.n_qubits = n_qubits
        self.gates: list[Gate] = []
        for g in gates or ():
            self.append(g)

    def append(self, gate: Gate) -> "Circuit":
        if max(gate.qubits) >= self.n_qubits:
            raise IndexError(f"qubit {max(gate.qubits)} out of range for {self.n_qubits} qubits")
        self.gates.append(gate)
        return self

    def extend(self, gates) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def __len__(self):
        return len(self.gates)

    def run(self, state: Statevector | None = None, noise: NoiseModel = NOISELESS,
            rng: np.random.Generator | None = None) -> Statevector:
        if state is None:
            state = Statevector.zero(self.n_qubits)
        if state.n_qubits != self.n_qubits:
            raise ValueError("state and circuit sizes differ")
        if noise.active and rng is None:
            rng = np.random.default_rng(noise.seed)
        psi = state.data.copy()
        n = self.n_qubits
        for g in self.gates:
            psi = apply_gate_array(psi, n, g)
            if noise.applies_to(g.kind):
                for q in g.targets:
                    if rng.random() < noise.p:
                        psi = apply_pauli(psi, n, q, "xyz"[rng.integers(3)])
        return Statevector(psi, check=False)

    def inverse(self) -> "Circuit":
        """Adjoint circuit (gates reversed and inverted)."""
        inv = Circuit(self.n_qubits)
        for g in reversed(self.gates):
            if g.kind in ("h", "x", "cnot", "cz"):
                inv.append(g)
            elif g.kind == "ry":
                inv.append(Gate("ry", g.targets, params=(-g.params[0],)))
            elif g.kind == "cphase":
                inv.append(Gate("cphase", g.targets, g.controls, (-g.params[0],)))
            elif g.kind == "ucry":
                inv.append(Gate("ucry", g.targets, g.controls, tuple(-np.asarray(g.params))))
            else:
                inv.append(Gate("unitary", g.targets, g.controls, matrix=g.matrix.conj().T))
        return inv

    def trace(self) -> str:
        """One ``gate-name targets controls params`` line per gate."""
        return "\n".join(g.trace_line() for g in self.gates)
