"""Pre- and post-selected channels and their effective operators.

For projectors ``P_in`` and ``P_out`` diagonalized as
``P_in = O_in^dagger D_in O_in`` and ``P_out = O_out D_out O_out^dagger``, the
selected operator factors as

    P_out U P_in = O_out (|0><0|^(n - n~) (x) V~) O_in

where ``V~`` is the ``r_out x r_in`` block of ``O_out^dagger U O_in^dagger``
zero-padded to ``2^n~`` rows and columns.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .channels import KET0, KET1, X, ChannelMix, ChannelTerm
from .config import DEFAULT_SETTINGS, Settings
from .errors import DimensionError, SolverError, ValidationError
from .matcore import as_matrix, dagger, eig_projector, is_unitary, kron_all
from .qpd import NonPositiveSumError, QuasiDecomposition, decompose, normalize, term_operator

_log = logging.getLogger(__name__)

GRID_CONVENTIONS = ("covering", "exact")


class NotUnitaryError(ValidationError):
    """Raised when a gate matrix is not unitary within tolerance."""


class EmptySelectionError(ValidationError):
    """Raised when a selection projector has rank zero."""


class SelectionIdentityError(SolverError):
    """Raised when the factored form does not reproduce P_out U P_in."""


@dataclass(frozen=True, eq=False)
class Selection:
    p_in: np.ndarray
    p_out: np.ndarray
    r_in: int
    r_out: int
    o_in: np.ndarray
    o_out: np.ndarray

    @property
    def dim(self) -> int:
        return self.p_in.shape[0]


@dataclass(frozen=True, eq=False)
class EffectiveChannel:
    """The block ``v_tilde`` with the frame that places it back on ``n`` qubits.

    The first ``n - n_tilde`` qubits carry ``|0><0|`` inside the frame.
    """

    n: int
    n_tilde: int
    v_tilde: np.ndarray
    o_in: np.ndarray
    o_out: np.ndarray
    r_in: int
    r_out: int

    @property
    def zero_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.n - self.n_tilde))

    def wrap(self, op: np.ndarray, settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
        """O_out (|0><0|^(n - n~) (x) op) O_in."""

        op = as_matrix(op, "effective operator")
        if op.shape != (2 ** self.n_tilde, 2 ** self.n_tilde):
            raise DimensionError(f"operator of shape {op.shape} does not act on {self.n_tilde} qubits")
        framed = kron_all([KET0] * (self.n - self.n_tilde) + [op], settings)
        return self.o_out @ framed @ self.o_in

    def full_operator(self, settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
        return self.wrap(self.v_tilde, settings)


def _qubits(dim: int) -> int:
    n = dim.bit_length() - 1
    if n < 1 or 1 << n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two of at least one qubit")
    return n


def _unitary_matrix(u, settings: Settings) -> np.ndarray:
    u = as_matrix(u, "gate")
    if u.shape[0] != u.shape[1]:
        raise DimensionError(f"gate must be square, got {u.shape}")
    _qubits(u.shape[0])
    if not is_unitary(u, settings.unitary_tol):
        raise NotUnitaryError("gate is not unitary within tolerance")
    return u


def zero_projector(n: int, m: int, settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
    """|0><0| on the first ``m`` of ``n`` qubits, identity on the rest."""

    if not 0 <= m <= n:
        raise ValidationError(f"selected qubit count {m} outside 0..{n}")
    return kron_all([KET0] * m + [np.eye(2 ** (n - m))], settings)


def flag_projector(n: int, m: int, settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
    """|1><1| on qubit 0, |0><0| on the next ``m`` qubits, identity on the rest."""

    if not 0 <= m <= n - 1:
        raise ValidationError(f"selected register size {m} outside 0..{n - 1}")
    return kron_all([KET1] + [KET0] * m + [np.eye(2 ** (n - m - 1))], settings)


def make_selection(p_in, p_out, settings: Settings = DEFAULT_SETTINGS) -> Selection:
    p_in = as_matrix(p_in, "p_in")
    p_out = as_matrix(p_out, "p_out")
    if p_in.shape != p_out.shape:
        raise DimensionError(f"projector shapes differ: {p_in.shape} vs {p_out.shape}")
    o_in, r_in = eig_projector(p_in, settings.projector_tol)
    o_out_h, r_out = eig_projector(p_out, settings.projector_tol)
    _log.debug("selection ranks r_in=%d r_out=%d", r_in, r_out)
    return Selection(p_in=p_in, p_out=p_out, r_in=r_in, r_out=r_out, o_in=o_in, o_out=dagger(o_out_h))


def n_tilde_for(r_in: int, r_out: int) -> int:
    if min(r_in, r_out) < 1:
        raise EmptySelectionError(f"selection ranks must be positive, got r_in={r_in}, r_out={r_out}")
    return (max(r_in, r_out) - 1).bit_length()


def _effective(n, block, o_in, o_out, r_in, r_out) -> EffectiveChannel:
    n_tilde = n_tilde_for(r_in, r_out)
    v_tilde = np.zeros((2 ** n_tilde, 2 ** n_tilde), dtype=np.complex128)
    v_tilde[:r_out, :r_in] = block
    return EffectiveChannel(n=n, n_tilde=n_tilde, v_tilde=v_tilde, o_in=o_in, o_out=o_out, r_in=r_in, r_out=r_out)


def _verify(eff: EffectiveChannel, u, p_in, p_out, settings: Settings) -> EffectiveChannel:
    gap = float(np.linalg.norm(p_out @ u @ p_in - eff.full_operator(settings)))
    if gap >= settings.identity_tol:
        raise SelectionIdentityError(f"factored selection misses P_out U P_in by {gap:.3e}")
    _log.debug("effective operator on %d of %d qubits, identity gap %.3e", eff.n_tilde, eff.n, gap)
    return eff


def effective_operator(u, sel: Selection, settings: Settings = DEFAULT_SETTINGS) -> EffectiveChannel:
    u = _unitary_matrix(u, settings)
    if u.shape[0] != sel.dim:
        raise DimensionError(f"gate dimension {u.shape[0]} does not match selection dimension {sel.dim}")
    v_full = dagger(sel.o_out) @ u @ dagger(sel.o_in)
    block = v_full[: sel.r_out, : sel.r_in]
    eff = _effective(_qubits(u.shape[0]), block, sel.o_in, sel.o_out, sel.r_in, sel.r_out)
    return _verify(eff, u, sel.p_in, sel.p_out, settings)


def corollary1(u, m_in: int, m_out: int, settings: Settings = DEFAULT_SETTINGS) -> EffectiveChannel:
    """Zero-state selection on the first ``m_in`` inputs and ``m_out`` outputs."""

    u = _unitary_matrix(u, settings)
    n = _qubits(u.shape[0])
    for name, m in (("m_in", m_in), ("m_out", m_out)):
        if not 0 <= m <= n:
            raise ValidationError(f"{name}={m} outside 0..{n}")
    r_in, r_out = 2 ** (n - m_in), 2 ** (n - m_out)
    eye = np.eye(2 ** n, dtype=np.complex128)
    eff = _effective(n, u[:r_out, :r_in], eye, eye, r_in, r_out)
    return _verify(eff, u, zero_projector(n, m_in, settings), zero_projector(n, m_out, settings), settings)


def corollary2(u, m: int, settings: Settings = DEFAULT_SETTINGS) -> EffectiveChannel:
    """Inputs selected on ``|0>^(m+1)``, outputs on ``|1>|0>^m``.

    This is the ancilla layout of a flagged subroutine: qubit 0 flags success and
    the next ``m`` qubits return to zero.
    """

    u = _unitary_matrix(u, settings)
    n = _qubits(u.shape[0])
    if not 0 <= m <= n - 1:
        raise ValidationError(f"m={m} outside 0..{n - 1}")
    r = 2 ** (n - m - 1)
    half = 2 ** (n - 1)
    o_out = kron_all([X, np.eye(half)], settings)
    eff = _effective(n, u[half : half + r, :r], np.eye(2 ** n, dtype=np.complex128), o_out, r, r)
    return _verify(eff, u, zero_projector(n, m + 1, settings), flag_projector(n, m, settings), settings)


def decompose_effective(
    eff: EffectiveChannel,
    settings: Settings = DEFAULT_SETTINGS,
    method: str = "factored",
    normalized: bool = True,
) -> QuasiDecomposition:
    """Decompose [v_tilde]; by default the coefficients are rescaled to sum to one.

    The raw sum can be zero or negative for arbitrary selections, in which case
    normalization raises NonPositiveSumError.
    """

    raw = decompose(ChannelMix.unitary(eff.v_tilde, "v_tilde"), settings, method)
    return normalize(raw, settings=settings) if normalized else raw


def decompose_selected(
    u,
    sel: Selection,
    settings: Settings = DEFAULT_SETTINGS,
    method: str = "factored",
    normalized: bool = True,
) -> tuple[QuasiDecomposition, EffectiveChannel]:
    eff = effective_operator(u, sel, settings)
    return decompose_effective(eff, settings, method, normalized), eff


def selected_channel(d: QuasiDecomposition, eff: EffectiveChannel, settings: Settings = DEFAULT_SETTINGS) -> ChannelMix:
    """The n-qubit mix sum_i c_i [O_out (|0><0|^(n - n~) (x) V_i) O_in]."""

    if d.n_qubits != eff.n_tilde:
        raise DimensionError(f"decomposition acts on {d.n_qubits} qubits, frame expects {eff.n_tilde}")
    terms = []
    for coeff, indices in d.terms:
        op = eff.wrap(term_operator(indices, d.rescale, settings), settings)
        terms.append((coeff, ChannelTerm(op, " ".join(d.labels(indices)))))
    return ChannelMix(tuple(terms))


def _grid_gamma(eff: EffectiveChannel, settings: Settings) -> float:
    raw = decompose(ChannelMix.unitary(eff.v_tilde), settings)
    try:
        return normalize(raw, settings=settings).gamma
    except NonPositiveSumError:
        _log.debug("block sum %.3e not normalizable, keeping raw gamma", raw.coefficient_sum)
        return raw.gamma


def overhead_grid(u, convention: str = "covering", settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
    """Sampling overhead for every zero-state selection, rows m_in, columns m_out.

    ``exact`` decomposes the block selected by (m_in, m_out) as it stands.
    ``covering`` decomposes only the block kept by min(m_in, m_out) selections on
    both sides, leaving the extra one-sided selection to the physical
    preparation or measurement.
    """

    if convention not in GRID_CONVENTIONS:
        raise ValidationError(f"unknown grid convention {convention!r}, expected one of {GRID_CONVENTIONS}")
    u = _unitary_matrix(u, settings)
    n = _qubits(u.shape[0])
    grid = np.zeros((n + 1, n + 1))
    shared: dict[int, float] = {}
    for m_in in range(n + 1):
        for m_out in range(n + 1):
            if convention == "covering":
                k = min(m_in, m_out)
                if k not in shared:
                    shared[k] = _grid_gamma(corollary1(u, k, k, settings), settings)
                grid[m_in, m_out] = shared[k]
            else:
                grid[m_in, m_out] = _grid_gamma(corollary1(u, m_in, m_out, settings), settings)
    return grid
