"""Quasiprobability decomposition over tensor products of the one-qubit basis.

The Choi matrix of a product term [V_1 (x) ... (x) V_n], with its indices
regrouped qubit by qubit, is the Kronecker product of the one-qubit Choi
vectors. The n-qubit system is therefore ``(M (x) ... (x) M) c = y`` with the
16x16 one-qubit matrix ``M``, and is solved mode by mode with ``M^-1``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .channels import BASIS_LABELS, ChannelMix, ChannelTerm, basis16, basis_index, choi, qubit_count, tensor_term
from .config import DEFAULT_SETTINGS, Settings
from .errors import DimensionError, SolverError, ValidationError
from .matcore import RankDeficientError, kron_all, lstsq_real

_log = logging.getLogger(__name__)

BASIS_SIZE = 16


class ResidualTooLargeError(SolverError):
    """Raised when the solved coefficients do not reproduce the target."""


class NonPositiveSumError(SolverError):
    """Raised when the raw coefficient sum cannot be used to normalize."""


@dataclass(frozen=True)
class QuasiDecomposition:
    """Coefficients over basis products; indices are 1-based table rows."""

    n_qubits: int
    terms: tuple[tuple[float, tuple[int, ...]], ...]
    gamma: float
    residual: float
    rescale: float = 1.0

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([coeff for coeff, _ in self.terms], dtype=np.float64)

    @property
    def coefficient_sum(self) -> float:
        return float(np.sum(self.coefficients))

    @property
    def nonzero_count(self) -> int:
        return len(self.terms)

    def labels(self, indices: Sequence[int]) -> tuple[str, ...]:
        return tuple(BASIS_LABELS[i - 1] for i in indices)

    def as_label_map(self) -> dict[tuple[str, ...], float]:
        return {self.labels(indices): coeff for coeff, indices in self.terms}


def gamma_of(coeffs: Iterable[float]) -> float:
    return float(np.sum(np.abs(np.fromiter(coeffs, dtype=np.float64))))


@lru_cache(maxsize=1)
def single_qubit_matrix() -> np.ndarray:
    """Column k is the row-major flattened Choi matrix of basis element k."""

    columns = [choi(ChannelMix(((1.0, term),))).reshape(-1) for term in basis16()]
    return np.column_stack(columns)


@lru_cache(maxsize=1)
def _single_qubit_inverse() -> np.ndarray:
    m = single_qubit_matrix()
    if abs(np.linalg.det(m)) < 1e-12:
        raise RankDeficientError("one-qubit basis Choi vectors are linearly dependent")
    return np.linalg.inv(m)


def local_choi_vector(choi_mat: np.ndarray, n: int) -> np.ndarray:
    """Regroup Choi indices from (in..., out..., in'..., out'...) to per-qubit blocks."""

    tensor = choi_mat.reshape((2,) * (4 * n))
    order = [axis for q in range(n) for axis in (q, n + q, 2 * n + q, 3 * n + q)]
    return tensor.transpose(order).reshape(-1)


def _apply_modes(mat: np.ndarray, vec: np.ndarray, n: int) -> np.ndarray:
    coeffs = vec.reshape((BASIS_SIZE,) * n)
    for axis in range(n):
        coeffs = np.moveaxis(np.tensordot(mat, coeffs, axes=([1], [axis])), 0, axis)
    return coeffs.reshape(-1)


def solve_factored(choi_mat: np.ndarray, n: int) -> np.ndarray:
    """Complex coefficients from the mode-wise inverse of the one-qubit matrix."""

    return _apply_modes(_single_qubit_inverse(), local_choi_vector(choi_mat, n), n)


def solve_dense(choi_mat: np.ndarray, n: int, settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
    """Real coefficients from one least-squares solve over all 16^n product terms."""

    if n > settings.dense_max_qubits:
        raise DimensionError(f"dense solve is limited to {settings.dense_max_qubits} qubits, got {n}")
    basis = basis16()
    columns = []
    for combo in itertools.product(range(BASIS_SIZE), repeat=n):
        if combo:
            op = tensor_term([basis[k] for k in combo], settings).op
        else:
            op = np.ones((1, 1), dtype=np.complex128)
        columns.append(choi(ChannelMix(((1.0, ChannelTerm(op)),))).reshape(-1))
    m = np.column_stack(columns)
    y = choi_mat.reshape(-1)
    coeffs, residual = lstsq_real(np.vstack([m.real, m.imag]), np.concatenate([y.real, y.imag]))
    _log.debug("dense solve over %d terms, residual %.3e", m.shape[1], residual)
    return coeffs


def _build(n: int, coeffs: np.ndarray, residual: float, settings: Settings) -> QuasiDecomposition:
    keep = np.flatnonzero(np.abs(coeffs) >= settings.prune_tol)
    shape = (BASIS_SIZE,) * n
    terms = []
    for flat in keep:
        indices = tuple(int(i) + 1 for i in np.unravel_index(flat, shape)) if n else ()
        terms.append((float(coeffs[flat]), indices))
    gamma = gamma_of(coeff for coeff, _ in terms)
    _log.debug("decomposition: %d of %d terms kept, gamma %.6f", len(terms), BASIS_SIZE ** n, gamma)
    return QuasiDecomposition(n_qubits=n, terms=tuple(terms), gamma=gamma, residual=residual)


def decompose(
    target: ChannelMix,
    settings: Settings = DEFAULT_SETTINGS,
    method: str = "factored",
) -> QuasiDecomposition:
    n = qubit_count(target)
    if n > settings.max_decompose_qubits:
        raise DimensionError(f"target has {n} qubits, the maximum is {settings.max_decompose_qubits}")
    choi_mat = choi(target, n)

    if method == "factored":
        raw = solve_factored(choi_mat, n)
        worst_imag = float(np.max(np.abs(raw.imag))) if raw.size else 0.0
        if worst_imag > settings.imag_tol:
            raise ResidualTooLargeError(f"coefficients have imaginary parts up to {worst_imag:.3e}")
        coeffs = raw.real.copy()
    elif method == "dense":
        coeffs = solve_dense(choi_mat, n, settings)
    else:
        raise ValidationError(f"unknown solve method {method!r}")

    rebuilt = _apply_modes(single_qubit_matrix(), coeffs.astype(np.complex128), n)
    residual = float(np.linalg.norm(rebuilt - local_choi_vector(choi_mat, n)))
    if residual > settings.residual_tol:
        raise ResidualTooLargeError(f"Choi residual {residual:.3e} exceeds {settings.residual_tol:.1e}")
    return _build(n, coeffs, residual, settings)


def decompose_unitary(u, settings: Settings = DEFAULT_SETTINGS, method: str = "factored") -> QuasiDecomposition:
    return decompose(ChannelMix.unitary(u), settings, method)


def normalize(
    d: QuasiDecomposition,
    raw_sum: float | None = None,
    settings: Settings = DEFAULT_SETTINGS,
) -> QuasiDecomposition:
    """Divide by the coefficient sum c' so the coefficients add up to one.

    The reconstructed channel is multiplied back by c', which keeps the channel
    unchanged while the basis operators stay canonical.
    """

    c_prime = d.coefficient_sum if raw_sum is None else float(raw_sum)
    if not c_prime > settings.normalize_floor:
        raise NonPositiveSumError(f"coefficient sum {c_prime:.3e} is not positive")
    terms = tuple((coeff / c_prime, indices) for coeff, indices in d.terms)
    _log.debug("normalized by c'=%.12g", c_prime)
    return replace(
        d,
        terms=terms,
        gamma=gamma_of(coeff for coeff, _ in terms),
        rescale=d.rescale * c_prime,
    )


def term_operator(indices: Sequence[int], rescale: float = 1.0, settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
    basis = basis16()
    return np.sqrt(rescale) * kron_all((basis[i - 1].op for i in indices), settings)


def reconstruct(d: QuasiDecomposition, settings: Settings = DEFAULT_SETTINGS) -> ChannelMix:
    terms = []
    for coeff, indices in d.terms:
        label = " ".join(d.labels(indices))
        terms.append((coeff, ChannelTerm(term_operator(indices, d.rescale, settings), label)))
    return ChannelMix(tuple(terms))


def decomposition_from_labels(
    entries: Iterable[tuple[float, Sequence[str]]],
    settings: Settings = DEFAULT_SETTINGS,
) -> QuasiDecomposition:
    """Build a decomposition from ``(coefficient, per-qubit labels)`` pairs.

    The residual is measured against nothing and left at zero.
    """

    terms: list[tuple[float, tuple[int, ...]]] = []
    widths = set()
    for coeff, labels in entries:
        indices = tuple(basis_index(label) + 1 for label in labels)
        widths.add(len(indices))
        terms.append((float(coeff), indices))
    if len(widths) != 1:
        raise ValidationError(f"terms act on differing qubit counts {sorted(widths)}")
    n = widths.pop()
    if n > settings.max_decompose_qubits:
        raise DimensionError(f"{n}-qubit terms exceed the configured maximum")
    return QuasiDecomposition(
        n_qubits=n,
        terms=tuple(terms),
        gamma=gamma_of(coeff for coeff, _ in terms),
        residual=0.0,
    )
