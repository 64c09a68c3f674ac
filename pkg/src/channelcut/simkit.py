"""Dense density-matrix simulation with per-gate depolarizing noise.

Also holds the Monte-Carlo estimator that samples decomposition terms with
probability |c_i| / gamma and weights each outcome by gamma * sign(c_i).
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
import scipy.linalg

from .channels import I2, KET0, KET1, X, Y, Z, basis16, embed
from .config import DEFAULT_SETTINGS, Settings
from .errors import DimensionError, ValidationError
from .matcore import as_matrix, dagger, is_hermitian, is_unitary
from .qpd import QuasiDecomposition
from .selection import EffectiveChannel, NotUnitaryError

_log = logging.getLogger(__name__)

_PAULIS = (I2, X, Y, Z)
_STATE_TOL = 1e-10
_TRACE_TOL = 1e-8


class EmptyDecompositionError(ValidationError):
    """Raised when a Monte-Carlo run is given a decomposition with no terms."""


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A Hermitian 2^n x 2^n matrix.

    Signed averages and unnormalized post-selected branches are allowed here;
    ``check_state`` enforces the full state invariants where they are needed.
    """

    mat: np.ndarray

    def __post_init__(self) -> None:
        mat = as_matrix(self.mat, "density matrix").copy()
        dim = mat.shape[0]
        if mat.shape[1] != dim or dim & (dim - 1):
            raise DimensionError(f"density matrix must be 2^n square, got {mat.shape}")
        if not is_hermitian(mat, _STATE_TOL * max(1.0, float(np.linalg.norm(mat)))):
            raise ValidationError("density matrix is not Hermitian")
        mat = (mat + dagger(mat)) / 2
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise ValidationError("state vector is zero")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def zeros(cls, n: int) -> "DensityMatrix":
        psi = np.zeros(2 ** n, dtype=np.complex128)
        psi[0] = 1.0
        return cls.pure(psi)

    @property
    def n(self) -> int:
        return self.mat.shape[0].bit_length() - 1

    @property
    def trace(self) -> float:
        return float(np.trace(self.mat).real)

    def normalized(self) -> "DensityMatrix":
        tr = self.trace
        if tr <= 0:
            raise ValidationError(f"cannot normalize a state with trace {tr:.3e}")
        return DensityMatrix(self.mat / tr)

    def check_state(self) -> "DensityMatrix":
        tr = self.trace
        if not 0 < tr <= 1 + _STATE_TOL:
            raise ValidationError(f"state trace {tr:.3e} outside (0, 1]")
        low = float(scipy.linalg.eigvalsh(self.mat)[0])
        if low < -1e-9:
            raise ValidationError(f"state has negative eigenvalue {low:.3e}")
        return self


@dataclass(frozen=True, eq=False)
class OneQubit:
    qubit: int
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        mat = as_matrix(self.matrix, "gate matrix")
        if mat.shape != (2, 2):
            raise DimensionError(f"one-qubit gate must be 2x2, got {mat.shape}")
        if not is_unitary(mat, 1e-9):
            raise NotUnitaryError(f"gate {self.label or '?'} on qubit {self.qubit} is not unitary")
        object.__setattr__(self, "matrix", mat)

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int

    def __post_init__(self) -> None:
        if self.control == self.target:
            raise ValidationError(f"CNOT control and target are both qubit {self.control}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.control, self.target)


Gate = Union[OneQubit, Cnot]


@dataclass(frozen=True, eq=False)
class Circuit:
    n: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError(f"circuit needs at least one qubit, got {self.n}")
        gates = tuple(self.gates)
        for gate in gates:
            for q in gate.qubits:
                if not 0 <= q < self.n:
                    raise DimensionError(f"gate qubit {q} outside 0..{self.n - 1}")
        object.__setattr__(self, "gates", gates)

    def extend(self, gates: Sequence[Gate]) -> "Circuit":
        return Circuit(self.n, self.gates + tuple(gates))

    def inverse(self) -> "Circuit":
        flipped: list[Gate] = []
        for gate in reversed(self.gates):
            if isinstance(gate, OneQubit):
                label = f"{gate.label}^-1" if gate.label else ""
                flipped.append(OneQubit(gate.qubit, dagger(gate.matrix), label))
            else:
                flipped.append(gate)
        return Circuit(self.n, tuple(flipped))

    def cnot_count(self) -> int:
        return sum(1 for gate in self.gates if isinstance(gate, Cnot))

    def depth(self) -> int:
        levels = [0] * self.n
        for gate in self.gates:
            level = max(levels[q] for q in gate.qubits) + 1
            for q in gate.qubits:
                levels[q] = level
        return max(levels)


@dataclass(frozen=True)
class NoiseModel:
    p_local: float = 0.0
    p_cnot: float = 0.0

    def __post_init__(self) -> None:
        for name in ("p_local", "p_cnot"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {value}")


NOISELESS = NoiseModel()


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n_samples: int
    gamma: float
    seed: int


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def gate_matrix(gate: Gate, n: int, settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
    if isinstance(gate, OneQubit):
        return embed(gate.matrix, gate.qubit, n, settings)
    flip = embed(KET1, gate.control, n, settings) @ embed(X, gate.target, n, settings)
    return embed(KET0, gate.control, n, settings) + flip


def _depolarize(mat: np.ndarray, qubit: int, n: int, p: float, settings: Settings) -> np.ndarray:
    if p == 0.0:
        return mat
    twirl = np.zeros_like(mat)
    for pauli in _PAULIS:
        big = embed(pauli, qubit, n, settings)
        twirl += big @ mat @ dagger(big)
    return (1.0 - p) * mat + (p / 4.0) * twirl


def depolarize(rho: DensityMatrix, qubit: int, p: float, settings: Settings = DEFAULT_SETTINGS) -> DensityMatrix:
    """(1 - p) rho + p (I/2 (x) Tr_qubit rho), written as a Pauli twirl."""

    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"depolarizing probability must lie in [0, 1], got {p}")
    return DensityMatrix(_depolarize(rho.mat, qubit, rho.n, p, settings))


def run(
    circuit: Circuit,
    rho0: DensityMatrix,
    noise: NoiseModel = NOISELESS,
    settings: Settings = DEFAULT_SETTINGS,
) -> DensityMatrix:
    if rho0.n != circuit.n:
        raise DimensionError(f"state has {rho0.n} qubits, circuit has {circuit.n}")
    mat = np.array(rho0.mat)
    for gate in circuit.gates:
        g = gate_matrix(gate, circuit.n, settings)
        mat = g @ mat @ dagger(g)
        p = noise.p_local if isinstance(gate, OneQubit) else noise.p_cnot
        for q in gate.qubits:
            mat = _depolarize(mat, q, circuit.n, p, settings)
    return DensityMatrix(mat)


def circuit_unitary(circuit: Circuit, settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
    u = np.eye(2 ** circuit.n, dtype=np.complex128)
    for gate in circuit.gates:
        u = gate_matrix(gate, circuit.n, settings) @ u
    return u


def _is_identity(mat: np.ndarray) -> bool:
    return bool(np.allclose(mat, I2, atol=1e-12))


def controlled_gate(control: int, target: int, w, label: str = "") -> list[Gate]:
    """Two-CNOT expansion of controlled-``w`` from a Z-Y-Z Euler decomposition.

    ``w = e^{i alpha} Rz(beta) Ry(gamma) Rz(delta)`` is realized as
    ``C``, CNOT, ``B``, CNOT, ``A`` with ``ABC = I`` and ``AXBXC = w e^{-i alpha}``,
    plus the phase ``diag(1, e^{i alpha})`` on the control.
    """

    w = as_matrix(w, "controlled gate")
    if w.shape != (2, 2) or not is_unitary(w, 1e-9):
        raise NotUnitaryError("controlled payload must be a 2x2 unitary")
    alpha = float(np.angle(np.linalg.det(w))) / 2
    su = w * np.exp(-1j * alpha)
    a, b = su[0, 0], su[0, 1]
    gamma = 2 * float(np.arctan2(abs(b), abs(a)))
    plus = -2 * float(np.angle(a)) if abs(a) > 1e-12 else 0.0
    minus = -2 * float(np.angle(-b)) if abs(b) > 1e-12 else 0.0
    beta, delta = (plus + minus) / 2, (plus - minus) / 2

    stem = label or "cu"
    steps = [
        (rz((delta - beta) / 2), f"{stem}.c"),
        None,
        (ry(-gamma / 2) @ rz(-(delta + beta) / 2), f"{stem}.b"),
        None,
        (rz(beta) @ ry(gamma / 2), f"{stem}.a"),
    ]
    gates: list[Gate] = []
    for step in steps:
        if step is None:
            gates.append(Cnot(control, target))
        elif not _is_identity(step[0]):
            gates.append(OneQubit(target, step[0], step[1]))
    phase = np.diag([1.0, np.exp(1j * alpha)])
    if not _is_identity(phase):
        gates.append(OneQubit(control, phase, f"{stem}.phase"))
    return gates


def postselect(rho: DensityMatrix, p, settings: Settings = DEFAULT_SETTINGS) -> tuple[DensityMatrix, float]:
    """Return the unnormalized branch ``P rho P`` and its probability ``Tr(rho P)``."""

    p = as_matrix(p, "projector")
    if p.shape != rho.mat.shape:
        raise DimensionError(f"projector shape {p.shape} does not match state {rho.mat.shape}")
    if not is_hermitian(p, settings.projector_tol) or np.linalg.norm(p @ p - p) > settings.projector_tol:
        raise ValidationError("post-selection operator is not a projector")
    branch = p @ rho.mat @ p
    return DensityMatrix(branch), float(np.trace(rho.mat @ p).real)


def trace_leading(rho: DensityMatrix, k: int) -> DensityMatrix:
    """Partial trace over the first ``k`` qubits."""

    if not 0 <= k <= rho.n:
        raise DimensionError(f"cannot trace out {k} of {rho.n} qubits")
    rest = 2 ** (rho.n - k)
    blocks = rho.mat.reshape(2 ** k, rest, 2 ** k, rest)
    return DensityMatrix(np.einsum("iaib->ab", blocks))


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    w, v = scipy.linalg.eigh((mat + dagger(mat)) / 2)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ dagger(v)


def fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2."""

    for name, rho in (("a", a), ("b", b)):
        if abs(rho.trace - 1.0) > _TRACE_TOL:
            raise ValidationError(f"fidelity argument {name} has trace {rho.trace:.6f}, expected 1")
    if a.mat.shape != b.mat.shape:
        raise DimensionError(f"state shapes differ: {a.mat.shape} vs {b.mat.shape}")
    root = _psd_sqrt(a.mat)
    inner = root @ b.mat @ root
    eig = scipy.linalg.eigvalsh((inner + dagger(inner)) / 2)
    value = float(np.sum(np.sqrt(np.clip(eig, 0.0, None)))) ** 2
    return float(np.clip(value, 0.0, 1.0))


def project_psd(rho: DensityMatrix) -> tuple[DensityMatrix, float]:
    """Clip negative eigenvalues and renormalize; returns the state and the clipped mass."""

    w, v = scipy.linalg.eigh(rho.mat)
    negativity = float(np.sum(np.clip(-w, 0.0, None)))
    clipped = np.clip(w, 0.0, None)
    if clipped.sum() <= 0:
        raise ValidationError("signed state has no positive part")
    mat = (v * clipped) @ dagger(v)
    return DensityMatrix(mat / clipped.sum()), negativity


def _term_output(
    indices: tuple[int, ...],
    wrap: EffectiveChannel | None,
    rho0: DensityMatrix,
    noise: NoiseModel,
    settings: Settings,
) -> np.ndarray:
    basis = basis16()
    n = rho0.n
    offset = 0 if wrap is None else wrap.n - wrap.n_tilde
    if n != offset + len(indices):
        raise DimensionError(f"term on {len(indices)} qubits cannot act on a {n}-qubit state")
    mat = np.array(rho0.mat)
    if wrap is not None:
        mat = wrap.o_in @ mat @ dagger(wrap.o_in)
    for k, index in enumerate(indices):
        term = basis[index - 1]
        if term.label == "I":
            continue
        op = embed(term.op, offset + k, n, settings)
        mat = op @ mat @ dagger(op)
        mat = _depolarize(mat, offset + k, n, noise.p_local, settings)
    if wrap is not None:
        for q in wrap.zero_qubits:
            proj = embed(KET0, q, n, settings)
            mat = proj @ mat @ proj
        mat = wrap.o_out @ mat @ dagger(wrap.o_out)
    return mat


def _sampling_plan(d: QuasiDecomposition) -> tuple[np.ndarray, np.ndarray]:
    if not d.terms:
        raise EmptyDecompositionError("decomposition has no terms to sample")
    coeffs = d.coefficients
    return np.abs(coeffs) / d.gamma, np.sign(coeffs)


def _draw(probs: np.ndarray, n_samples: int, seed: int, settings: Settings) -> np.ndarray:
    """Term indices from independent Philox streams, merged in worker order."""

    if n_samples < 1:
        raise ValidationError(f"n_samples must be positive, got {n_samples}")
    workers = max(1, min(settings.threads, n_samples))
    streams = np.random.SeedSequence(seed).spawn(workers)
    sizes = [len(chunk) for chunk in np.array_split(np.arange(n_samples), workers)]

    def work(job: tuple[np.random.SeedSequence, int]) -> np.ndarray:
        stream, size = job
        rng = np.random.Generator(np.random.Philox(stream))
        return rng.choice(len(probs), size=size, p=probs)

    _log.debug("sampling %d terms on %d workers (seed %d)", n_samples, workers, seed)
    if workers == 1:
        return work((streams[0], sizes[0]))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.concatenate(list(pool.map(work, zip(streams, sizes))))


def mc_expectation(
    d: QuasiDecomposition,
    wrap: EffectiveChannel | None,
    rho0: DensityMatrix,
    obs,
    n_samples: int,
    seed: int,
    noise: NoiseModel = NOISELESS,
    settings: Settings = DEFAULT_SETTINGS,
) -> McEstimate:
    probs, signs = _sampling_plan(d)
    obs = as_matrix(obs, "observable")
    if not is_hermitian(obs, 1e-10):
        raise ValidationError("observable is not Hermitian")
    values = np.array(
        [np.trace(obs @ _term_output(indices, wrap, rho0, noise, settings)).real for _, indices in d.terms]
    )
    picks = _draw(probs, n_samples, seed, settings)
    samples = d.gamma * d.rescale * signs[picks] * values[picks]
    std_error = float(np.std(samples, ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    return McEstimate(
        value=float(np.mean(samples)),
        std_error=std_error,
        n_samples=n_samples,
        gamma=d.gamma,
        seed=seed,
    )


def mc_state(
    d: QuasiDecomposition,
    wrap: EffectiveChannel | None,
    rho0: DensityMatrix,
    n_samples: int,
    seed: int,
    noise: NoiseModel = NOISELESS,
    exact: bool = False,
    settings: Settings = DEFAULT_SETTINGS,
) -> DensityMatrix:
    """Signed average of the sampled term outputs.

    With ``exact`` every term enters with its own coefficient and no sampling
    happens. The result is Hermitian but may be indefinite; see ``project_psd``.
    """

    probs, signs = _sampling_plan(d)
    outputs = [_term_output(indices, wrap, rho0, noise, settings) for _, indices in d.terms]
    if exact:
        weights = d.coefficients * d.rescale
    else:
        counts = np.bincount(_draw(probs, n_samples, seed, settings), minlength=len(outputs))
        weights = d.gamma * d.rescale * signs * counts / n_samples
    mat = sum(w * out for w, out in zip(weights, outputs))
    return DensityMatrix(mat)
