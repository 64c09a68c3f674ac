"""Dense complex linear algebra used by the channel solvers.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Vectorization is
column stacking, so ``vectorize(a @ b @ c) == kron(c.T, a) @ vectorize(b)``.
"""

from __future__ import annotations

import logging
from functools import reduce
from typing import Iterable

import numpy as np
import scipy.linalg

from .config import DEFAULT_SETTINGS, Settings
from .errors import DimensionError, SolverError, ValidationError

_log = logging.getLogger(__name__)

# Components below this magnitude never decide eigenvector order or phase.
_LEAD_TOL = 1e-9


class NotHermitianError(ValidationError):
    """Raised when a matrix expected to be Hermitian is not."""


class NotAProjectorError(ValidationError):
    """Raised when a matrix has eigenvalues outside {0, 1}."""


class RankDeficientError(SolverError):
    """Raised when a least-squares system has dependent columns."""


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D complex array."""

    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf entries")
    return arr


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def _max_dim(settings: Settings) -> int:
    return 2 ** settings.max_qubits


def kron(a, b, settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > _max_dim(settings):
        raise DimensionError(
            f"Kronecker product of shape {rows}x{cols} exceeds the configured maximum "
            f"({settings.max_qubits} qubits)"
        )
    return np.kron(a, b)


def kron_all(mats: Iterable, settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
    """Kronecker product of ``mats`` in order; the empty product is ``[[1]]``."""

    return reduce(lambda acc, m: kron(acc, m, settings), mats, np.ones((1, 1), dtype=np.complex128))


def vectorize(a) -> np.ndarray:
    a = as_matrix(a)
    return a.reshape(-1, order="F").copy()


def devectorize(v, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    if v.shape != (rows * cols,):
        raise DimensionError(f"vector of shape {v.shape} cannot be devectorized to {rows}x{cols}")
    return v.reshape((rows, cols), order="F").copy()


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product Tr(a^dagger b)."""

    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def is_hermitian(a: np.ndarray, tol: float) -> bool:
    return a.shape[0] == a.shape[1] and float(np.linalg.norm(a - dagger(a))) <= tol


def is_unitary(a: np.ndarray, tol: float) -> bool:
    if a.shape[0] != a.shape[1]:
        return False
    return float(np.linalg.norm(a @ dagger(a) - np.eye(a.shape[0]))) <= tol


def _canonical_basis(q: np.ndarray, rank: int) -> list[np.ndarray]:
    """Orthonormal basis of range(q) built from q's columns in index order."""

    basis: list[np.ndarray] = []
    for col in range(q.shape[1]):
        if len(basis) == rank:
            break
        v = q[:, col].copy()
        # two passes keep the basis orthogonal to machine precision
        for _ in range(2):
            for b in basis:
                v -= np.vdot(b, v) * b
        norm = np.linalg.norm(v)
        if norm > 1e-3:
            basis.append(v / norm)
    if len(basis) != rank:
        raise NotAProjectorError(f"eigenspace spans {len(basis)} directions, expected {rank}")

    ordered: list[tuple[int, np.ndarray]] = []
    for v in basis:
        lead = int(np.argmax(np.abs(v) > _LEAD_TOL))
        v = v * (abs(v[lead]) / v[lead])
        ordered.append((lead, v))
    ordered.sort(key=lambda item: item[0])
    return [v for _, v in ordered]


def eig_projector(p, tol: float = DEFAULT_SETTINGS.projector_tol) -> tuple[np.ndarray, int]:
    """Diagonalize a Hermitian projector.

    Returns ``(o, rank)`` with ``o @ p @ o^dagger == diag(I_rank, 0)``. Inside each
    eigenspace the basis vectors are ordered by the index of their first
    significant component, and that component is made real positive.
    """

    p = as_matrix(p, "projector")
    if p.shape[0] != p.shape[1]:
        raise DimensionError(f"projector must be square, got {p.shape}")
    if not is_hermitian(p, tol):
        raise NotHermitianError("projector is not Hermitian within tolerance")
    p = (p + dagger(p)) / 2
    eigvals = scipy.linalg.eigvalsh(p)
    ones = np.abs(eigvals - 1.0) <= tol
    zeros = np.abs(eigvals) <= tol
    if not np.all(ones | zeros):
        bad = eigvals[~(ones | zeros)]
        raise NotAProjectorError(f"eigenvalues {bad.tolist()} are not in {{0, 1}}")
    rank = int(np.count_nonzero(ones))
    dim = p.shape[0]

    upper = _canonical_basis(p, rank)
    lower = _canonical_basis(np.eye(dim) - p, dim - rank)
    columns = np.column_stack(upper + lower)
    return dagger(columns), rank


def lstsq_real(m, y, rcond: float = 1e-12) -> tuple[np.ndarray, float]:
    """Real least squares ``min ||m x - y||``; returns ``(x, residual)``."""

    m = np.asarray(m, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if m.ndim != 2 or y.shape != (m.shape[0],):
        raise DimensionError(f"incompatible system shapes {m.shape} and {y.shape}")
    if m.shape[0] < m.shape[1]:
        raise DimensionError(f"underdetermined system {m.shape}")
    x, _, rank, _ = scipy.linalg.lstsq(m, y, cond=rcond)
    if rank < m.shape[1]:
        raise RankDeficientError(f"system matrix has rank {rank} < {m.shape[1]} columns")
    residual = float(np.linalg.norm(m @ x - y))
    _log.debug("lstsq_real: %dx%d system, residual %.3e", m.shape[0], m.shape[1], residual)
    return x, residual


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from QR of a complex Gaussian matrix."""

    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_projector(dim: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    w = haar_unitary(dim, rng)
    diag = np.zeros(dim)
    diag[:rank] = 1.0
    return w @ np.diag(diag) @ dagger(w)
