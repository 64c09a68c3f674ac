import numpy as np
import pytest

from channelcut.channels import KET1, X, Z, ChannelMix
from channelcut.hhl import (
    ConstantTooLargeError,
    EigenvalueNotEncodableError,
    HhlProblem,
    SingularSystemError,
    build_hhl,
    encoded_weights,
    rotation_angles,
    rotation_constant,
    run_study,
    solve_reference,
)
from channelcut.matcore import kron_all
from channelcut.qpd import decompose, normalize
from channelcut.selection import corollary2, decompose_effective
from channelcut.simkit import DensityMatrix, NoiseModel, NOISELESS, circuit_unitary, mc_expectation, mc_state

V_TILDE = np.array([[3, 1], [1, 3]]) / 4


@pytest.fixture(scope="module")
def built():
    problem = HhlProblem.default_problem()
    u, circuit = build_hhl(problem)
    return problem, u, circuit


def test_default_problem_encodes_single_bits():
    problem = HhlProblem.default_problem()
    eigvals, weights = encoded_weights(problem)
    np.testing.assert_allclose(eigvals, [2 / 3, 4 / 3])
    assert weights.tolist() == [2, 4]
    assert rotation_constant(problem) == pytest.approx(2 / 3)
    assert rotation_angles(problem)[0] == pytest.approx(2 * np.arcsin(0.5))
    assert rotation_angles(problem)[1] == pytest.approx(np.pi)


def test_circuit_realizes_matrix(built):
    problem, u, circuit = built
    assert circuit.n == problem.n == 5
    assert circuit.cnot_count() == 36
    assert np.linalg.norm(circuit_unitary(circuit) - u) < 1e-8


def test_selected_block_and_decomposition(built):
    problem, u, _ = built
    eff = corollary2(u, problem.m)
    assert eff.n_tilde == 1
    np.testing.assert_allclose(eff.v_tilde, V_TILDE, atol=1e-9)
    d = decompose_effective(eff)
    assert d.gamma == pytest.approx(1.25)
    assert d.rescale == pytest.approx(1.0)
    found = d.as_label_map()
    assert set(found) == {("I",), ("X",), ("piX",)}
    assert found[("I",)] == pytest.approx(3 / 8)
    assert found[("X",)] == pytest.approx(-1 / 8)
    assert found[("piX",)] == pytest.approx(3 / 4)


def test_flipped_block_gives_swapped_coefficients():
    d = normalize(decompose(ChannelMix.unitary(X @ V_TILDE)))
    assert d.gamma == pytest.approx(1.25)
    found = d.as_label_map()
    assert found[("I",)] == pytest.approx(-1 / 8)
    assert found[("X",)] == pytest.approx(3 / 8)
    assert found[("piX",)] == pytest.approx(3 / 4)


def test_reference_solution():
    np.testing.assert_allclose(solve_reference(HhlProblem.default_problem()), [9 / 8, 3 / 8])
    with pytest.raises(SingularSystemError):
        solve_reference(HhlProblem(a=np.ones((2, 2)), b=[1, 0], m=2, t=np.pi / 2))


def test_identity_system_gives_identity_block():
    problem = HhlProblem(a=np.eye(2), b=[1, 1], m=2, t=np.pi / 2)
    u, _ = build_hhl(problem)
    np.testing.assert_allclose(corollary2(u, problem.m).v_tilde, np.eye(2), atol=1e-9)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"m": 1, "t": np.pi / 2},  # half a register step
        {},  # weight 3 needs two bits
    ],
)
def test_unencodable_eigenvalues(kwargs):
    problem = HhlProblem(a=np.eye(2), b=[1, 0], **kwargs)
    with pytest.raises(EigenvalueNotEncodableError):
        build_hhl(problem)


def test_rotation_constant_bound():
    problem = HhlProblem(a=HhlProblem.default_problem().a, b=[1, 0], c_rot=1.0)
    with pytest.raises(ConstantTooLargeError):
        rotation_constant(problem)
    smaller = HhlProblem(a=HhlProblem.default_problem().a, b=[1, 0], c_rot=1 / 3)
    assert rotation_constant(smaller) == pytest.approx(1 / 3)


def test_problem_validation():
    with pytest.raises(ValueError):
        HhlProblem(a=np.array([[1, 1], [0, 1]]), b=[1, 0])
    with pytest.raises(ValueError):
        HhlProblem(a=np.eye(2), b=[0, 0])
    with pytest.raises(ValueError):
        HhlProblem(a=np.eye(2), b=[1, 0], t=0.0)


def test_wrapped_terms_reproduce_flagged_output(built):
    problem, u, _ = built
    eff = corollary2(u, problem.m)
    d = decompose_effective(eff)
    b = np.outer(problem.b, problem.b.conj())
    rho0 = DensityMatrix(kron_all([np.diag([1.0, 0.0])] * 4 + [b]))
    out = mc_state(d, eff, rho0, 1, 0, exact=True)
    assert out.trace == pytest.approx(0.625)
    flag = kron_all([KET1, np.eye(16)])
    assert np.trace(flag @ out.mat).real == pytest.approx(0.625)
    work_z = kron_all([np.eye(16), Z])
    assert np.trace(work_z @ out.mat).real == pytest.approx(0.5)


def test_wrapped_expectation_estimates_working_qubit_z(built):
    problem, u, _ = built
    eff = corollary2(u, problem.m)
    d = decompose_effective(eff)
    b = np.outer(problem.b, problem.b.conj())
    rho0 = DensityMatrix(kron_all([np.diag([1.0, 0.0])] * 4 + [b]))
    est = mc_expectation(d, eff, rho0, kron_all([np.eye(16), Z]), 20000, seed=17)
    assert est.gamma == pytest.approx(1.25)
    assert est.std_error > 0
    assert abs(est.value - 0.5) < 5 * est.std_error + 1e-12


def test_noiseless_study():
    report = run_study(HhlProblem.default_problem(), [NOISELESS], n_samples=4000, seed=2024)
    assert report.gamma == pytest.approx(1.25)
    assert report.cnot_count == 36
    assert report.post_selection_probability == pytest.approx(0.625)
    row = report.rows[0]
    assert row.without_decomposition >= 0.999
    assert row.with_decomposition >= 0.999
    assert row.success_probability == pytest.approx(0.625)
    np.testing.assert_allclose(np.array(report.solution), [9 / 8, 3 / 8])


@pytest.mark.slow
def test_noisy_study_prefers_decomposition():
    noise = [NoiseModel(0.001, 0.005), NoiseModel(0.001, 0.01)]
    report = run_study(HhlProblem.default_problem(), noise, n_samples=10000, seed=2024)
    light, heavy = report.rows
    assert heavy.without_decomposition < light.without_decomposition < 1.0
    for row in report.rows:
        assert row.with_decomposition >= 0.99
        assert row.with_decomposition > row.without_decomposition
        assert row.negativity >= 0.0
    assert heavy.with_decomposition - heavy.without_decomposition >= 0.05
