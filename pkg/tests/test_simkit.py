import math

import numpy as np
import pytest

from channelcut.channels import I2, KET0, KET1, X, Z, ChannelMix, apply
from channelcut.config import Settings
from channelcut.errors import DimensionError, ValidationError
from channelcut.gates import cnot
from channelcut.matcore import haar_unitary
from channelcut.qpd import QuasiDecomposition, decompose_unitary, reconstruct
from channelcut.selection import NotUnitaryError
from channelcut.simkit import (
    Circuit,
    Cnot,
    DensityMatrix,
    EmptyDecompositionError,
    NoiseModel,
    OneQubit,
    circuit_unitary,
    controlled_gate,
    depolarize,
    fidelity,
    mc_expectation,
    mc_state,
    postselect,
    project_psd,
    run,
    trace_leading,
)

HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
ZZ = np.kron(Z, Z)


def _bell_prep() -> Circuit:
    return Circuit(2, (OneQubit(0, HADAMARD, "H"), Cnot(0, 1)))


def test_run_prepares_bell_state():
    out = run(_bell_prep(), DensityMatrix.zeros(2))
    expected = np.zeros((4, 4))
    expected[np.ix_([0, 3], [0, 3])] = 0.5
    np.testing.assert_allclose(out.mat, expected, atol=1e-12)


def test_run_checks_qubit_count():
    with pytest.raises(DimensionError):
        run(_bell_prep(), DensityMatrix.zeros(3))


def test_depolarize_keeps_trace_and_mixes():
    rho = DensityMatrix.zeros(2)
    out = depolarize(rho, 1, 0.3)
    assert out.trace == pytest.approx(1.0)
    assert out.mat[1, 1].real == pytest.approx(0.15)
    full = depolarize(rho, 0, 1.0)
    np.testing.assert_allclose(trace_leading(full, 1).mat, KET0, atol=1e-12)
    with pytest.raises(ValidationError):
        depolarize(rho, 0, 1.5)


def test_noisy_run_keeps_state_valid():
    noise = NoiseModel(p_local=0.01, p_cnot=0.05)
    out = run(_bell_prep(), DensityMatrix.zeros(2), noise)
    out.check_state()
    assert out.trace == pytest.approx(1.0)
    assert fidelity(out, run(_bell_prep(), DensityMatrix.zeros(2))) < 1.0


def test_postselect_returns_branch_and_probability():
    rho = run(_bell_prep(), DensityMatrix.zeros(2))
    branch, probability = postselect(rho, np.kron(KET1, I2))
    assert probability == pytest.approx(0.5)
    np.testing.assert_allclose(trace_leading(branch.normalized(), 1).mat, KET1, atol=1e-12)
    with pytest.raises(ValidationError):
        postselect(rho, np.diag([0.5, 1, 1, 1]))


def test_fidelity_examples():
    zero, one = DensityMatrix.pure([1, 0]), DensityMatrix.pure([0, 1])
    plus = DensityMatrix.pure([1, 1])
    assert fidelity(zero, zero) == pytest.approx(1.0)
    assert fidelity(zero, one) == pytest.approx(0.0, abs=1e-12)
    assert fidelity(zero, plus) == pytest.approx(0.5)
    assert fidelity(DensityMatrix(I2 / 2), zero) == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        fidelity(DensityMatrix(I2), zero)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_controlled_gate_matches_controlled_matrix(seed):
    w = haar_unitary(2, np.random.default_rng(seed))
    down = circuit_unitary(Circuit(2, tuple(controlled_gate(0, 1, w))))
    np.testing.assert_allclose(down, np.kron(KET0, I2) + np.kron(KET1, w), atol=1e-10)
    up = circuit_unitary(Circuit(2, tuple(controlled_gate(1, 0, w))))
    np.testing.assert_allclose(up, np.kron(I2, KET0) + np.kron(w, KET1), atol=1e-10)


def test_controlled_identity_is_two_bare_cnots():
    gates = controlled_gate(0, 1, I2)
    assert all(isinstance(g, Cnot) for g in gates)
    assert len(gates) == 2
    with pytest.raises(NotUnitaryError):
        controlled_gate(0, 1, np.diag([1.0, 0.5]))


def test_circuit_inverse_depth_and_cnot_count():
    circuit = Circuit(3, (OneQubit(0, HADAMARD, "H"), Cnot(0, 1), OneQubit(2, X, "X"), Cnot(1, 2)))
    assert circuit.cnot_count() == 2
    assert circuit.depth() == 3
    product = circuit_unitary(circuit.inverse()) @ circuit_unitary(circuit)
    np.testing.assert_allclose(product, np.eye(8), atol=1e-12)


def test_circuit_validation():
    with pytest.raises(DimensionError):
        Circuit(2, (Cnot(0, 2),))
    with pytest.raises(ValidationError):
        Cnot(1, 1)
    with pytest.raises(NotUnitaryError):
        OneQubit(0, np.diag([1.0, 2.0]))


def test_identity_decomposition_has_no_variance():
    d = decompose_unitary(I2)
    est = mc_expectation(d, None, DensityMatrix.zeros(1), Z, 500, seed=7)
    assert est.value == pytest.approx(1.0)
    assert est.std_error == pytest.approx(0.0, abs=1e-12)
    assert est.gamma == pytest.approx(1.0)


def test_cnot_zz_estimate_is_within_error_bars():
    d = decompose_unitary(cnot())
    rho0 = DensityMatrix.pure(np.kron([1, 1], [1, 0]))
    est = mc_expectation(d, None, rho0, ZZ, 20000, seed=11)
    assert abs(est.value - 1.0) < 5 * est.std_error
    assert 0 < est.std_error < est.gamma / np.sqrt(20000)


def test_estimator_is_unbiased_over_seeds():
    d = decompose_unitary(cnot())
    rho0 = DensityMatrix.pure(np.kron([1, 1], [1, 0]))
    values = [mc_expectation(d, None, rho0, ZZ, 10_000, seed=s).value for s in range(20)]
    spread = np.std(values, ddof=1) / np.sqrt(len(values))
    assert abs(np.mean(values) - 1.0) < 5 * spread


def test_std_error_shrinks_with_sample_count():
    d = decompose_unitary(cnot())
    rho0 = DensityMatrix.pure(np.kron([1, 1], [1, 0]))
    small = mc_expectation(d, None, rho0, ZZ, 4000, seed=3).std_error
    large = mc_expectation(d, None, rho0, ZZ, 16000, seed=3).std_error
    assert small / large == pytest.approx(2.0, rel=0.2)


@pytest.mark.parametrize("n_samples", [1_000, 10_000, 100_000])
def test_std_error_tracks_gamma_over_root_n(n_samples):
    d = decompose_unitary(cnot())
    est = mc_expectation(d, None, DensityMatrix.zeros(2), ZZ, n_samples, seed=8)
    assert 0.5 <= est.std_error * np.sqrt(n_samples) / est.gamma <= 2.0
    assert abs(est.value - 1.0) < 5 * est.std_error


def test_sampling_is_deterministic_per_seed_and_thread_count():
    d = decompose_unitary(cnot())
    rho0 = DensityMatrix.pure(np.kron([1, 1], [1, 0]))
    threaded = Settings(threads=4)
    first = mc_expectation(d, None, rho0, ZZ, 3001, seed=5, settings=threaded)
    second = mc_expectation(d, None, rho0, ZZ, 3001, seed=5, settings=threaded)
    assert first.value == second.value
    assert first.n_samples == 3001
    again = mc_state(d, None, rho0, 3001, 5, settings=threaded)
    assert np.array_equal(mc_state(d, None, rho0, 3001, 5, settings=threaded).mat, again.mat)


def test_exact_state_matches_reconstructed_channel():
    rng = np.random.default_rng(21)
    psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    rho0 = DensityMatrix.pure(psi)
    d = decompose_unitary(haar_unitary(4, rng))
    out = mc_state(d, None, rho0, 1, 0, exact=True)
    np.testing.assert_allclose(out.mat, apply(reconstruct(d), rho0.mat), atol=1e-10)


def test_sampled_state_converges_to_exact():
    d = decompose_unitary(cnot())
    rho0 = DensityMatrix.pure(np.kron([1, 1], [1, 0]))
    exact = mc_state(d, None, rho0, 1, 0, exact=True)
    sampled = mc_state(d, None, rho0, 40000, 9)
    assert np.linalg.norm(sampled.mat - exact.mat) < 0.5
    clean, negativity = project_psd(sampled)
    clean.check_state()
    assert negativity >= 0.0
    assert fidelity(clean, exact) > 0.8


def test_project_psd_clips_negative_part():
    state, negativity = project_psd(DensityMatrix(np.diag([1.2, -0.2])))
    assert negativity == pytest.approx(0.2)
    np.testing.assert_allclose(state.mat, np.diag([1.0, 0.0]), atol=1e-12)
    with pytest.raises(ValidationError):
        project_psd(DensityMatrix(-np.eye(2)))


def test_project_psd_of_a_valid_state_reports_positive_zero():
    _, negativity = project_psd(DensityMatrix.zeros(1))
    assert negativity == 0.0
    assert math.copysign(1.0, negativity) == 1.0


def test_empty_decomposition_is_rejected():
    empty = QuasiDecomposition(n_qubits=1, terms=(), gamma=0.0, residual=0.0)
    with pytest.raises(EmptyDecompositionError):
        mc_expectation(empty, None, DensityMatrix.zeros(1), Z, 10, seed=0)


def test_term_width_must_match_state():
    d = decompose_unitary(cnot())
    with pytest.raises(DimensionError):
        mc_state(d, None, DensityMatrix.zeros(3), 1, 0, exact=True)


def test_apply_of_unitary_mix_agrees_with_run():
    rho = DensityMatrix.zeros(2)
    via_mix = apply(ChannelMix.unitary(circuit_unitary(_bell_prep())), rho.mat)
    np.testing.assert_allclose(via_mix, run(_bell_prep(), rho).mat, atol=1e-12)
