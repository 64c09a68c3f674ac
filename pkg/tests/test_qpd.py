import numpy as np
import pytest

from channelcut.channels import ChannelMix, choi
from channelcut.config import Settings
from channelcut.errors import DimensionError, ValidationError
from channelcut.gates import cnot, qft, toffoli
from channelcut.matcore import haar_unitary
from channelcut.qpd import (
    NonPositiveSumError,
    ResidualTooLargeError,
    decompose,
    decompose_unitary,
    decomposition_from_labels,
    gamma_of,
    normalize,
    reconstruct,
    single_qubit_matrix,
)

CNOT_TERMS = [
    (-0.5, "I RX"), (0.5, "I X"), (1.0, "I piX"), (-0.5, "RZ I"),
    (1.0, "RZ RX"), (-0.5, "RZ X"), (0.5, "Z I"), (-0.5, "Z RX"),
    (1.0, "Z X"), (-1.0, "Z piX"), (1.0, "piZ I"), (-1.0, "piZ X"),
]

TOFFOLI_TERMS = [
    (3 / 4, "I RZ RX"), (3 / 4, "RZ I RX"), (1 / 2, "I piZ RX"), (1 / 2, "piZ I RX"),
    (-1 / 2, "I Z RX"), (-1 / 2, "Z I RX"), (-3 / 4, "I I RX"), (1 / 2, "I RZ piX"),
    (1 / 2, "RZ I piX"), (1 / 2, "RZ piZ I"), (1 / 2, "piZ RZ I"), (-1 / 2, "I RZ X"),
    (-1 / 2, "RZ I X"), (-1 / 2, "RZ Z I"), (-1 / 2, "Z RZ I"), (-3 / 4, "I RZ I"),
    (-3 / 4, "RZ I I"), (3 / 4, "RZ RZ I"), (-1, "I piZ piX"), (-1, "piZ I piX"),
    (1, "I I piX"), (1, "I piZ I"), (1, "piZ I I"), (-1, "piZ piZ I"),
    (-1 / 2, "I piZ X"), (-1 / 2, "piZ I X"), (5 / 8, "I Z X"), (5 / 8, "Z I X"),
    (3 / 8, "I I X"), (-1 / 2, "I Z piX"), (-1 / 2, "Z I piX"), (-1 / 2, "Z piZ I"),
    (-1 / 2, "piZ Z I"), (3 / 8, "I Z I"), (3 / 8, "Z I I"), (5 / 8, "Z Z I"),
    (3 / 8, "I I I"), (-1, "RZ piZ RX"), (-1, "piZ RZ RX"), (1 / 4, "RZ Z RX"),
    (1 / 4, "Z RZ RX"), (1 / 2, "Z piZ RX"), (1 / 2, "piZ Z RX"), (-1 / 4, "Z Z RX"),
    (-1, "RZ RZ piX"), (1 / 2, "RZ piZ X"), (1 / 2, "piZ RZ X"), (-1 / 4, "RZ Z X"),
    (-1 / 4, "Z RZ X"), (1 / 4, "RZ RZ X"), (1 / 2, "RZ Z piX"), (1 / 2, "Z RZ piX"),
    (1, "piZ piZ X"), (-1, "Z piZ X"), (-1, "piZ Z X"), (5 / 8, "Z Z X"),
    (1, "Z piZ piX"), (1, "piZ Z piX"), (-1, "Z Z piX"),
]


def _label_map(terms):
    return {tuple(labels.split()): coeff for coeff, labels in terms}


def test_one_qubit_basis_is_independent():
    assert np.linalg.matrix_rank(single_qubit_matrix()) == 16


def test_cnot_matches_printed_decomposition():
    d = decompose_unitary(cnot())
    assert d.gamma == pytest.approx(9.0, abs=1e-9)
    assert d.nonzero_count == 12
    found = d.as_label_map()
    expected = _label_map(CNOT_TERMS)
    assert set(found) == set(expected)
    for labels, coeff in expected.items():
        assert found[labels] == pytest.approx(coeff, abs=1e-9)


def test_cnot_dense_path_agrees():
    factored = decompose_unitary(cnot())
    dense = decompose_unitary(cnot(), method="dense")
    assert dense.as_label_map().keys() == factored.as_label_map().keys()
    for labels, coeff in factored.as_label_map().items():
        assert dense.as_label_map()[labels] == pytest.approx(coeff, abs=1e-9)


@pytest.mark.parametrize("n, seed", [(1, 5), (1, 6), (2, 7), (2, 8)])
def test_dense_path_agrees_on_random_unitaries(n, seed):
    u = haar_unitary(2 ** n, np.random.default_rng(seed))
    factored = decompose_unitary(u).as_label_map()
    dense = decompose_unitary(u, method="dense").as_label_map()
    for labels in factored.keys() | dense.keys():
        assert dense.get(labels, 0.0) == pytest.approx(factored.get(labels, 0.0), abs=1e-9)


def test_toffoli_overhead_and_printed_terms():
    d = decompose_unitary(toffoli())
    assert d.gamma == pytest.approx(37.0, abs=1e-6)
    printed = decomposition_from_labels((coeff, labels.split()) for coeff, labels in TOFFOLI_TERMS)
    assert printed.gamma == pytest.approx(37.0)
    residual = np.linalg.norm(choi(reconstruct(printed), 3) - choi(ChannelMix.unitary(toffoli()), 3))
    assert residual < 1e-9


def test_qft3_overhead_and_term_count():
    d = decompose_unitary(qft(3))
    assert d.gamma == pytest.approx(261.43, abs=0.01)
    assert d.nonzero_count == 1524
    residual = np.linalg.norm(choi(reconstruct(d), 3) - choi(ChannelMix.unitary(qft(3)), 3))
    assert residual < 1e-7


@pytest.mark.parametrize("seed", range(20))
def test_random_unitary_reconstructs(seed):
    n = 1 + seed % 3
    u = haar_unitary(2 ** n, np.random.default_rng(40 + seed))
    d = decompose_unitary(u)
    assert d.residual < 1e-8
    assert d.gamma == pytest.approx(gamma_of(d.coefficients))
    target = choi(ChannelMix.unitary(u), n)
    np.testing.assert_allclose(choi(reconstruct(d), n), target, atol=1e-9)


def test_zero_qubit_target():
    d = decompose(ChannelMix.unitary(np.array([[0.5]])))
    assert d.n_qubits == 0
    assert d.terms == ((pytest.approx(0.25), ()),)


def test_normalize_sums_to_one_and_keeps_channel():
    v = np.array([[3, 1], [1, 3]]) / 8
    raw = decompose(ChannelMix.unitary(v))
    norm = normalize(raw)
    assert norm.coefficient_sum == pytest.approx(1.0)
    assert norm.rescale == pytest.approx(raw.coefficient_sum)
    np.testing.assert_allclose(choi(reconstruct(norm), 1), choi(ChannelMix.unitary(v), 1), atol=1e-12)


def test_normalize_rejects_non_positive_sum():
    raw = decompose(ChannelMix.unitary(np.zeros((2, 2))))
    with pytest.raises(NonPositiveSumError):
        normalize(raw)
    with pytest.raises(NonPositiveSumError):
        normalize(decompose_unitary(cnot()), raw_sum=-1.0)


def test_decompose_limits_and_method():
    with pytest.raises(DimensionError):
        decompose_unitary(np.eye(16))
    with pytest.raises(DimensionError):
        decompose_unitary(toffoli(), method="dense")
    with pytest.raises(ValidationError):
        decompose_unitary(cnot(), method="guess")


def test_tight_residual_tolerance_is_enforced():
    strict = Settings(residual_tol=1e-300)
    with pytest.raises(ResidualTooLargeError):
        decompose_unitary(haar_unitary(4, np.random.default_rng(2)), strict)


def test_labels_must_share_width():
    with pytest.raises(ValidationError):
        decomposition_from_labels([(1.0, ["I"]), (1.0, ["I", "X"])])
