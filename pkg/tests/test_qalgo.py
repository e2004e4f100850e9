import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import fidelity
from efie_hybrid.qalgo import (HhlConfig, PhaseWraparoundError, PostselectionError, VqlsConfig,
                               _GlobalCost, _exact_cost, ansatz_circuit, ansatz_states,
                               extract_classical, hermitian_dilation, hhl_solve, n_params,
                               n_qubits_for, pad_pow2, vqls_solve)
from efie_hybrid.qsim import NOISELESS, NoiseModel, Statevector


def random_hermitian(rng, n=4, lo=0.25, hi=1.0):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = rng.uniform(lo, hi, n) * rng.choice([-1, 1], n)
    return (Q * lam) @ Q.T


# -- dilation and padding -----------------------------------------------------

def test_dilation_identity():
    H, g = hermitian_dilation(np.eye(3), np.eye(3)[0])
    w = np.linalg.solve(H, g)
    np.testing.assert_allclose(w, np.concatenate([np.zeros(3), np.eye(3)[0]]), atol=1e-15)


def test_dilation_spectrum_spd():
    rng = np.random.default_rng(0)
    B = rng.standard_normal((5, 5))
    C = B @ B.T + np.eye(5)
    H, _ = hermitian_dilation(C, np.ones(5))
    ev = np.sort(np.linalg.eigvalsh(H))
    sv = np.sort(np.linalg.svd(C, compute_uv=False))
    np.testing.assert_allclose(ev, np.concatenate([-sv[::-1], sv]), rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_dilation_lower_block_solves(seed):
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((4, 4)) + 3 * np.eye(4)
    f = rng.standard_normal(4)
    H, g = hermitian_dilation(C, f)
    assert np.array_equal(H, H.T)
    w = np.linalg.solve(H, g)
    assert np.abs(w[:4]).max() < 1e-10 * np.abs(w).max()
    np.testing.assert_allclose(C @ w[4:], f, atol=1e-10)


def test_pad_examples():
    M, v = pad_pow2(np.arange(9.0).reshape(3, 3), np.ones(3))
    assert M.shape == (4, 4) and M[3, 3] == 1 and v[3] == 0
    assert np.all(M[3, :3] == 0) and np.all(M[:3, 3] == 0)
    M4 = np.eye(4)
    M2, v2 = pad_pow2(M4, np.ones(4))
    assert M2 is M4
    assert pad_pow2(np.eye(1), np.ones(1), min_dim=2)[0].shape == (2, 2)


def test_pad_solution_unchanged():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((5, 5)) + 4 * np.eye(5)
    v = rng.standard_normal(5)
    Mp, vp = pad_pow2(M, v)
    x = np.linalg.solve(Mp, vp)
    np.testing.assert_allclose(x[:5], np.linalg.solve(M, v), atol=1e-12)
    assert np.all(x[5:] == 0)


def test_qubit_count_helper():
    assert [n_qubits_for(d) for d in (1, 2, 3, 4, 5, 32, 33)] == [1, 1, 2, 2, 3, 5, 6]


# -- classical extraction -----------------------------------------------------

def test_extract_zero_state():
    np.testing.assert_array_equal(extract_classical(Statevector.zero(2), 4), [1, 0, 0, 0])


def test_extract_sign_and_phase():
    v = np.array([0.6, -0.8, 0, 0])
    s = Statevector(v * np.exp(0.3j))
    a = extract_classical(s, 2)
    b = extract_classical(Statevector(-s.data), 2)
    np.testing.assert_allclose(np.abs(a), [0.6, 0.8])
    np.testing.assert_allclose(a, -b)


def test_extract_warns_on_imaginary_residue():
    s = Statevector(np.array([1, 1j]) / 2 ** 0.5)
    with pytest.warns(RuntimeWarning):
        extract_classical(s, 2)
    with pytest.raises(ValueError):
        extract_classical(Statevector(np.eye(4)[3]), 2)


# -- HHL ------------------------------------------------------------------------

@pytest.mark.parametrize("m", [2, 5, 8])
def test_hhl_identity(m):
    res = hhl_solve(np.eye(2), np.array([1.0, 0.0]), HhlConfig(clock_qubits=m),
                    rng=np.random.default_rng(0))
    np.testing.assert_allclose(np.abs(res.state.data), [1, 0], atol=1e-12)


def test_hhl_diagonal_closed_form():
    H = np.diag([1.0, 0.5])
    res = hhl_solve(H, np.array([1.0, 1.0]) / 2 ** 0.5, HhlConfig(clock_qubits=8),
                    rng=np.random.default_rng(1))
    assert fidelity(res.state.data, np.array([1.0, 2.0]) / 5 ** 0.5) >= 0.999
    assert res.n_qubits == 1 + 8 + 1


def test_hhl_random_4x4():
    rng = np.random.default_rng(2)
    H = random_hermitian(rng)
    g = rng.standard_normal(4)
    res = hhl_solve(H, g, HhlConfig(clock_qubits=10), rng=rng)
    assert fidelity(res.state.data, np.linalg.solve(H, g)) >= 0.99
    assert abs(res.state.norm - 1) < 1e-8
    assert res.n_qubits == 1 + 10 + 2


def test_hhl_dilated_upper_block_small():
    rng = np.random.default_rng(3)
    C = rng.standard_normal((2, 2)) + 2 * np.eye(2)
    f = rng.standard_normal(2)
    H, g = hermitian_dilation(C, f)
    res = hhl_solve(H, g, HhlConfig(clock_qubits=10), rng=rng)
    v = res.state.data
    assert np.linalg.norm(v[:2]) < 1e-2
    assert fidelity(v[2:], np.linalg.solve(C, f)) > 0.99


def test_hhl_errors():
    with pytest.raises(PhaseWraparoundError):
        hhl_solve(np.diag([1.0, 0.5]), np.ones(2), HhlConfig(evolution_time=10.0))
    with pytest.raises(PostselectionError):
        hhl_solve(np.diag([1.0, 0.5]), np.ones(2), HhlConfig(clock_qubits=4, c_rot=1e-6,
                                                           max_attempts=3),
                  rng=np.random.default_rng(0))
    with pytest.raises(ValueError):
        hhl_solve(np.array([[1.0, 2.0], [0.0, 1.0]]), np.ones(2))
    with pytest.raises(ValueError):
        HhlConfig(clock_qubits=0)


def test_hhl_noisy_runs_and_is_unit():
    rng = np.random.default_rng(4)
    H = random_hermitian(rng, 2)
    res = hhl_solve(H, np.ones(2), HhlConfig(clock_qubits=4), NoiseModel(0.05), rng)
    assert abs(res.state.norm - 1) < 1e-8


# -- VQLS -----------------------------------------------------------------------

def test_ansatz_batch_matches_circuit():
    rng = np.random.default_rng(5)
    for q, layers in ((1, 0), (3, 1), (4, 2)):
        th = rng.uniform(-np.pi, np.pi, n_params(q, layers))
        a = ansatz_states(th, q, layers)[0]
        b = ansatz_circuit(th, q, layers).run().data
        np.testing.assert_allclose(a, b, atol=1e-14)


def test_parameter_shift_gradient_matches_finite_difference():
    rng = np.random.default_rng(6)
    q, layers = 3, 1
    C = rng.standard_normal((8, 8)) + 3 * np.eye(8)
    f = rng.standard_normal(8)
    cost = _GlobalCost(C, f, q, layers, NOISELESS, rng, VqlsConfig())
    th = rng.uniform(-np.pi, np.pi, n_params(q, layers))
    val, grad = cost.value_and_grad(th)
    fh = f / np.linalg.norm(f)
    assert val == pytest.approx(_exact_cost(C, fh, ansatz_states(th, q, layers)[0]), abs=1e-14)
    h = 1e-6
    fd = np.array([(_exact_cost(C, fh, ansatz_states(th + h * e, q, layers)[0])
                    - _exact_cost(C, fh, ansatz_states(th - h * e, q, layers)[0])) / (2 * h)
                   for e in np.eye(th.size)])
    np.testing.assert_allclose(grad, fd, atol=1e-7)


def test_vqls_identity():
    f = np.array([0.3, -0.5, 0.2, 0.7])
    res = vqls_solve(np.eye(4), f, VqlsConfig(seed=0))
    assert res.converged
    assert fidelity(extract_classical(res.state, 4), f) >= np.sqrt(1 - 1e-3) - 1e-12


def test_vqls_qubit_count_for_32():
    rng = np.random.default_rng(7)
    C = rng.standard_normal((32, 32)) / 8 + np.eye(32)
    res = vqls_solve(C, rng.standard_normal(32), VqlsConfig(max_iter=20), rng=rng)
    assert res.n_qubits == 5
    assert res.state.n_qubits == 5


def test_vqls_unconverged_flag_and_trace(tmp_path):
    rng = np.random.default_rng(8)
    C = rng.standard_normal((8, 8)) + 0.5 * np.eye(8)
    res = vqls_solve(C, rng.standard_normal(8), VqlsConfig(max_iter=3, threshold=1e-12), rng=rng)
    assert not res.converged
    assert len(res.costs) == 3
    assert res.final_cost <= res.costs.max() + 1e-12
    state, costs = res
    assert abs(state.norm - 1) < 1e-8
    res.to_csv(tmp_path / "trace.csv")
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert lines[0] == "iteration,cost,gradient_norm" and len(lines) == 4


def test_vqls_validation():
    with pytest.raises(ValueError):
        vqls_solve(np.eye(3), np.ones(3))
    with pytest.raises(ValueError):
        vqls_solve(np.eye(4), np.zeros(4))
    with pytest.raises(ValueError):
        VqlsConfig(threshold=0)
    with pytest.raises(ValueError):
        VqlsConfig(optimizer="sgd")


def test_vqls_deterministic():
    rng = np.random.default_rng(9)
    C = rng.standard_normal((4, 4)) + 2 * np.eye(4)
    f = rng.standard_normal(4)
    a = vqls_solve(C, f, VqlsConfig(seed=3), NoiseModel(0.1), np.random.default_rng(1))
    b = vqls_solve(C, f, VqlsConfig(seed=3), NoiseModel(0.1), np.random.default_rng(1))
    np.testing.assert_array_equal(a.params, b.params)


def test_vqls_noisy_training_still_improves():
    rng = np.random.default_rng(10)
    C = rng.standard_normal((8, 8)) / 4 + np.eye(8)
    f = rng.standard_normal(8)
    init = rng.uniform(-np.pi, np.pi, n_params(3, 1))
    fh = f / np.linalg.norm(f)
    start = _exact_cost(C, fh, ansatz_states(init, 3, 1)[0])
    res = vqls_solve(C, f, VqlsConfig(max_iter=100), NoiseModel(0.2), rng, init=init)
    assert res.final_cost < start


def test_vqls_shot_mode_runs():
    rng = np.random.default_rng(11)
    res = vqls_solve(np.eye(4), np.ones(4), VqlsConfig(shots=2000, max_iter=30), rng=rng)
    assert abs(res.state.norm - 1) < 1e-8


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_cost_invariant_under_state_sign(seed):
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((4, 4)) + 2 * np.eye(4)
    fh = rng.standard_normal(4)
    fh /= np.linalg.norm(fh)
    x = ansatz_states(rng.uniform(-3, 3, 4), 2, 1)[0]
    assert _exact_cost(C, fh, x) == pytest.approx(_exact_cost(C, fh, -x), abs=1e-15)
