"""Operator-sum channels, the 16-element one-qubit basis and Choi matrices."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .config import DEFAULT_SETTINGS, Settings
from .errors import DimensionError, ValidationError
from .matcore import as_matrix, dagger, kron, kron_all, vectorize

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
KET0 = np.array([[1, 0], [0, 0]], dtype=np.complex128)
KET1 = np.array([[0, 0], [0, 1]], dtype=np.complex128)

_SQ2 = 1 / np.sqrt(2)

# Row order of the basis table; labels double as file-format tokens.
BASIS_LABELS: tuple[str, ...] = (
    "I", "X", "Y", "Z",
    "RX", "RY", "RZ",
    "RYZ", "RZX", "RXY",
    "piX", "piY", "piZ",
    "piYZ", "piZX", "piXY",
)


@dataclass(frozen=True, eq=False)
class ChannelTerm:
    """The completely positive map rho -> V rho V^dagger."""

    op: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        op = as_matrix(self.op, "channel operator").copy()
        if op.shape[0] != op.shape[1]:
            raise DimensionError(f"channel operator must be square, got {op.shape}")
        op.setflags(write=False)
        object.__setattr__(self, "op", op)

    @property
    def dim(self) -> int:
        return self.op.shape[0]


@dataclass(frozen=True, eq=False)
class ChannelMix:
    """Real linear combination sum_i c_i [V_i]."""

    terms: tuple[tuple[float, ChannelTerm], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        cleaned: list[tuple[float, ChannelTerm]] = []
        for coeff, term in self.terms:
            value = float(coeff)
            if not np.isfinite(value):
                raise ValidationError(f"non-finite coefficient {coeff!r}")
            cleaned.append((value, term))
        dims = {term.dim for _, term in cleaned}
        if len(dims) > 1:
            raise DimensionError(f"mixed operator dimensions {sorted(dims)}")
        object.__setattr__(self, "terms", tuple(cleaned))

    @classmethod
    def unitary(cls, op, label: str = "") -> "ChannelMix":
        return cls(((1.0, ChannelTerm(op, label)),))

    @property
    def dim(self) -> int:
        if not self.terms:
            raise ValidationError("empty channel mix has no dimension")
        return self.terms[0][1].dim

    def __add__(self, other: "ChannelMix") -> "ChannelMix":
        return ChannelMix(self.terms + other.terms)

    def scaled(self, factor: float) -> "ChannelMix":
        return ChannelMix(tuple((coeff * factor, term) for coeff, term in self.terms))


@lru_cache(maxsize=1)
def basis16() -> tuple[ChannelTerm, ...]:
    ops = (
        I2, X, Y, Z,
        _SQ2 * (I2 + 1j * X), _SQ2 * (I2 + 1j * Y), _SQ2 * (I2 + 1j * Z),
        _SQ2 * (Y + Z), _SQ2 * (Z + X), _SQ2 * (X + Y),
        (I2 + X) / 2, (I2 + Y) / 2, (I2 + Z) / 2,
        (Y + 1j * Z) / 2, (Z + 1j * X) / 2, (X + 1j * Y) / 2,
    )
    return tuple(ChannelTerm(op, label) for op, label in zip(ops, BASIS_LABELS))


def basis_index(label: str) -> int:
    """Zero-based position of ``label`` in the basis table."""

    try:
        return BASIS_LABELS.index(label)
    except ValueError as exc:
        raise ValidationError(f"unknown basis label {label!r}") from exc


def tensor_term(parts: Sequence[ChannelTerm], settings: Settings = DEFAULT_SETTINGS) -> ChannelTerm:
    """[V_1 (x) ... (x) V_k]; the first part acts on the most significant qubit."""

    if not parts:
        raise ValidationError("tensor_term needs at least one part")
    op = kron_all((part.op for part in parts), settings)
    return ChannelTerm(op, "".join(part.label for part in parts))


def _qubits_of(dim: int) -> int:
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


def choi(mix: ChannelMix, n: int | None = None) -> np.ndarray:
    """Choi matrix sum_i c_i |V_i>><<V_i|."""

    dim = mix.dim
    if n is not None and dim != 2 ** n:
        raise DimensionError(f"operators are {dim}-dimensional, expected {2 ** n}")
    out = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    for coeff, term in mix.terms:
        v = vectorize(term.op)
        out += coeff * np.outer(v, v.conj())
    return out


def choi_by_action(mix: ChannelMix, n: int | None = None) -> np.ndarray:
    """Choi matrix sum_ij E_ij (x) A(E_ij), evaluated through ``apply``."""

    dim = mix.dim
    if n is not None and dim != 2 ** n:
        raise DimensionError(f"operators are {dim}-dimensional, expected {2 ** n}")
    out = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    for i in range(dim):
        for j in range(dim):
            e_ij = np.zeros((dim, dim), dtype=np.complex128)
            e_ij[i, j] = 1.0
            out += np.kron(e_ij, apply(mix, e_ij))
    return out


def apply(mix: ChannelMix, rho) -> np.ndarray:
    rho = as_matrix(rho, "rho")
    if rho.shape != (mix.dim, mix.dim):
        raise DimensionError(f"state of shape {rho.shape} does not match channel dimension {mix.dim}")
    out = np.zeros_like(rho)
    for coeff, term in mix.terms:
        out += coeff * (term.op @ rho @ dagger(term.op))
    return out


def compose(first: ChannelMix, second: ChannelMix) -> ChannelMix:
    """The channel ``second o first``: apply ``first``, then ``second``."""

    if first.dim != second.dim:
        raise DimensionError(f"cannot compose {first.dim}- and {second.dim}-dimensional channels")
    terms = []
    for c2, t2 in second.terms:
        for c1, t1 in first.terms:
            label = f"{t2.label}*{t1.label}" if t1.label and t2.label else ""
            terms.append((c1 * c2, ChannelTerm(t2.op @ t1.op, label)))
    return ChannelMix(tuple(terms))


def embed(op, qubit: int, n: int, settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
    """Lift a one-qubit operator to ``n`` qubits, acting on ``qubit``."""

    if not 0 <= qubit < n:
        raise DimensionError(f"qubit {qubit} outside 0..{n - 1}")
    return kron(kron(np.eye(2 ** qubit), op, settings), np.eye(2 ** (n - qubit - 1)), settings)


def qubit_count(mix: ChannelMix) -> int:
    return _qubits_of(mix.dim)
