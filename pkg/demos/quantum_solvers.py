"""
HHL and VQLS on the statevector simulator
=========================================

The two inner solvers on toy systems: accuracy against numpy, the effect of
clock resolution on HHL, and VQLS training with and without gate noise.
"""

import numpy as np

from efie_hybrid import HhlConfig, NoiseModel, VqlsConfig, hhl_solve, vqls_solve
from efie_hybrid.qalgo import extract_classical, hermitian_dilation


def fidelity(a, b):
    return abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))


rng = np.random.default_rng(1)

# a 4x4 Hermitian matrix with eigenvalues in [0.25, 1]
Q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
H = (Q * np.array([0.25, 0.4, 0.7, 1.0])) @ Q.conj().T
g = rng.standard_normal(4)
x = np.linalg.solve(H, g)

# more clock qubits resolve the eigenphases better
for m in (4, 6, 8, 10, 12):
    res = hhl_solve(H, g, HhlConfig(clock_qubits=m), rng=np.random.default_rng(0))
    print(f"HHL m={m:2d}: {res.n_qubits} qubits, fidelity {fidelity(res.state.data, x):.6f}, "
          f"success probability {res.success_probability:.3f}")

# a non-Hermitian block goes through the dilation [[0, C], [C^T, 0]]
C = rng.standard_normal((2, 2)) + 2 * np.eye(2)
f = rng.standard_normal(2)
Hd, gd = hermitian_dilation(C, f)
res = hhl_solve(Hd, gd, HhlConfig(clock_qubits=10), rng=rng)
print("dilated HHL fidelity:", fidelity(res.state.data[2:], np.linalg.solve(C, f)))

# VQLS learns the direction of C^-1 f; three qubits need three ansatz layers
C = np.eye(8) + rng.standard_normal((8, 8)) / 6
f = rng.standard_normal(8)
exact = np.linalg.solve(C, f)
clean = vqls_solve(C, f, VqlsConfig(seed=0, layers=3), rng=np.random.default_rng(0))
print(f"\nVQLS noiseless: {len(clean.costs)} steps, final cost {clean.final_cost:.2e}, "
      f"fidelity {fidelity(extract_classical(clean.state, 8), exact):.5f}")

# Pauli errors after every RY and CNOT flatten the cost; the rough direction
# found here is still useful inside the hybrid, whose outer residual check
# keeps correcting it
noisy = vqls_solve(C, f, VqlsConfig(seed=0, layers=3), NoiseModel(0.2, seed=0),
                   rng=np.random.default_rng(0))
print(f"VQLS p=0.2:     {len(noisy.costs)} steps, final cost {noisy.final_cost:.2e}, "
      f"fidelity {fidelity(extract_classical(noisy.state, 8), exact):.5f}")
