"""HHL for 2x2 Hermitian systems and the noisy post-selection study.

Qubit layout: ancilla ``q0``, eigenvalue register ``q1..qm`` (``q1`` holds the
most significant bit), working qubit ``q(m+1)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .channels import KET0
from .config import DEFAULT_SETTINGS, Settings
from .errors import DimensionError, ValidationError
from .matcore import as_matrix, dagger, is_hermitian, kron_all
from .qpd import QuasiDecomposition
from .selection import EffectiveChannel, corollary2, decompose_effective, flag_projector
from .simkit import (
    Circuit,
    Cnot,
    DensityMatrix,
    Gate,
    NoiseModel,
    OneQubit,
    controlled_gate,
    fidelity,
    mc_state,
    postselect,
    project_psd,
    ry,
    run,
    trace_leading,
)

_log = logging.getLogger(__name__)

HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)


class EigenvalueNotEncodableError(ValidationError):
    """Raised when an eigenvalue does not land exactly on a single register bit."""


class ConstantTooLargeError(ValidationError):
    """Raised when the rotation constant exceeds the smallest encoded eigenvalue."""


class SingularSystemError(ValidationError):
    """Raised when the system matrix has no inverse."""


@dataclass(frozen=True, eq=False)
class HhlProblem:
    a: np.ndarray
    b: np.ndarray
    m: int = 3
    t: float = 3 * np.pi / 4
    c_rot: float | None = None

    def __post_init__(self) -> None:
        a = as_matrix(self.a, "system matrix")
        if a.shape != (2, 2):
            raise DimensionError(f"system matrix must be 2x2, got {a.shape}")
        if not is_hermitian(a, 1e-12):
            raise ValidationError("system matrix is not Hermitian")
        b = np.asarray(self.b, dtype=np.complex128).reshape(-1)
        if b.shape != (2,):
            raise DimensionError(f"right-hand side must have 2 entries, got {b.shape[0]}")
        norm = float(np.linalg.norm(b))
        if norm == 0:
            raise ValidationError("right-hand side is zero")
        if self.m < 1:
            raise ValidationError(f"register size must be at least 1, got {self.m}")
        if not self.t > 0:
            raise ValidationError(f"evolution time must be positive, got {self.t}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b / norm)

    @classmethod
    def default_problem(cls) -> "HhlProblem":
        return cls(a=np.array([[1, -1 / 3], [-1 / 3, 1]]), b=np.array([1, 0]))

    @property
    def n(self) -> int:
        return self.m + 2

    @property
    def register_size(self) -> int:
        return 2 ** self.m


@dataclass(frozen=True)
class FidelityRow:
    p_local: float
    p_cnot: float
    without_decomposition: float
    with_decomposition: float
    sampled: float
    success_probability: float
    negativity: float


@dataclass(frozen=True)
class HhlReport:
    gamma: float
    rescale: float
    coefficients: tuple[tuple[tuple[str, ...], float], ...]
    rows: tuple[FidelityRow, ...]
    depth: int
    cnot_count: int
    post_selection_probability: float
    n_samples: int
    seed: int
    solution: tuple[complex, ...] = field(default_factory=tuple)


def encoded_weights(problem: HhlProblem) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of ``a`` and the register value each one encodes to."""

    eigvals = scipy.linalg.eigvalsh(problem.a)
    scaled = eigvals * problem.t / (2 * np.pi) * problem.register_size
    weights = np.rint(scaled).astype(int)
    for lam, exact, w in zip(eigvals, scaled, weights):
        if abs(exact - w) > 1e-9 or not 1 <= w < problem.register_size:
            raise EigenvalueNotEncodableError(
                f"eigenvalue {lam:.12g} gives register value {exact:.12g}, not an integer in 1..{problem.register_size - 1}"
            )
        if w & (w - 1):
            raise EigenvalueNotEncodableError(
                f"eigenvalue {lam:.12g} sets several register bits ({w:b}); the rotation is bitwise"
            )
    return eigvals, weights


def _eigenvalue_of_weight(problem: HhlProblem, w: int) -> float:
    return 2 * np.pi * w / (problem.register_size * problem.t)


def rotation_constant(problem: HhlProblem) -> float:
    _, weights = encoded_weights(problem)
    smallest = _eigenvalue_of_weight(problem, int(weights.min()))
    c = smallest if problem.c_rot is None else float(problem.c_rot)
    if not c > 0:
        raise ValidationError(f"rotation constant must be positive, got {c}")
    if c > smallest + 1e-12:
        raise ConstantTooLargeError(f"rotation constant {c:.12g} exceeds smallest eigenvalue {smallest:.12g}")
    return c


def rotation_angles(problem: HhlProblem) -> list[float]:
    """Ry angle controlled by register qubit ``q1..qm``, most significant first."""

    c = rotation_constant(problem)
    angles = []
    for j in range(1, problem.m + 1):
        lam = _eigenvalue_of_weight(problem, 2 ** (problem.m - j))
        angles.append(2 * float(np.arcsin(min(1.0, c / lam))))
    return angles


def evolution(problem: HhlProblem) -> np.ndarray:
    return scipy.linalg.expm(1j * problem.a * problem.t)


def _fourier(size: int) -> np.ndarray:
    k = np.arange(size)
    return np.exp(2j * np.pi * np.outer(k, k) / size) / np.sqrt(size)


def _qpe_matrix(problem: HhlProblem, settings: Settings) -> np.ndarray:
    size = problem.register_size
    u = evolution(problem)
    controlled = np.zeros((2 * size, 2 * size), dtype=np.complex128)
    for k in range(size):
        controlled[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = np.linalg.matrix_power(u, k)
    spread = kron_all([HADAMARD] * problem.m + [np.eye(2)], settings)
    unspread = kron_all([dagger(_fourier(size)), np.eye(2)], settings)
    return unspread @ controlled @ spread


def _rotation_matrix(problem: HhlProblem) -> np.ndarray:
    size = problem.register_size
    angles = rotation_angles(problem)
    out = np.zeros((4 * size, 4 * size), dtype=np.complex128)
    for k in range(size):
        bits = [(k >> (problem.m - j)) & 1 for j in range(1, problem.m + 1)]
        rot = ry(sum(theta for bit, theta in zip(bits, angles) if bit))
        proj = np.zeros((size, size))
        proj[k, k] = 1.0
        out += np.kron(np.kron(rot, proj), np.eye(2))
    return out


def _qft_circuit(problem: HhlProblem) -> Circuit:
    register = list(range(1, problem.m + 1))
    gates: list[Gate] = []
    for pos, target in enumerate(register):
        gates.append(OneQubit(target, HADAMARD, "H"))
        for offset, control in enumerate(register[pos + 1 :], start=2):
            phase = np.diag([1.0, np.exp(2j * np.pi / 2 ** offset)])
            gates.extend(controlled_gate(control, target, phase, f"R{offset}"))
    for low in range(problem.m // 2):
        a, b = register[low], register[-1 - low]
        gates.extend([Cnot(a, b), Cnot(b, a), Cnot(a, b)])
    return Circuit(problem.n, tuple(gates))


def _qpe_circuit(problem: HhlProblem) -> Circuit:
    work = problem.m + 1
    u = evolution(problem)
    gates: list[Gate] = [OneQubit(j, HADAMARD, "H") for j in range(1, problem.m + 1)]
    for j in range(1, problem.m + 1):
        power = 2 ** (problem.m - j)
        gates.extend(controlled_gate(j, work, np.linalg.matrix_power(u, power), f"U^{power}"))
    return Circuit(problem.n, tuple(gates)).extend(_qft_circuit(problem).inverse().gates)


def build_hhl(problem: HhlProblem, settings: Settings = DEFAULT_SETTINGS) -> tuple[np.ndarray, Circuit]:
    """Matrix-level unitary and the {1q, CNOT} circuit that realizes it."""

    encoded_weights(problem)
    qpe = kron_all([np.eye(2), _qpe_matrix(problem, settings)], settings)
    u = dagger(qpe) @ _rotation_matrix(problem) @ qpe

    qpe_circuit = _qpe_circuit(problem)
    rotations: list[Gate] = []
    for j, theta in enumerate(rotation_angles(problem), start=1):
        rotations.extend(controlled_gate(j, 0, ry(theta), f"Ry{j}"))
    circuit = qpe_circuit.extend(rotations).extend(qpe_circuit.inverse().gates)
    _log.debug("HHL circuit: %d gates, %d CNOTs, depth %d", len(circuit.gates), circuit.cnot_count(), circuit.depth())
    return u, circuit


def solve_reference(problem: HhlProblem) -> np.ndarray:
    if abs(np.linalg.det(problem.a)) < 1e-12:
        raise SingularSystemError("system matrix is singular")
    return scipy.linalg.solve(problem.a, problem.b)


def _initial_state(problem: HhlProblem, settings: Settings) -> DensityMatrix:
    zeros = kron_all([KET0] * (problem.m + 1), settings)
    return DensityMatrix(kron_all([zeros, np.outer(problem.b, problem.b.conj())], settings))


def _decomposed_fidelities(
    d: QuasiDecomposition,
    problem: HhlProblem,
    reference: DensityMatrix,
    noise: NoiseModel,
    n_samples: int,
    seed: int,
    settings: Settings,
) -> tuple[float, float, float]:
    # ancillas start in |0...0>, so each term acts on the working qubit alone
    work = DensityMatrix.pure(problem.b)
    exact, _ = project_psd(mc_state(d, None, work, n_samples, seed, noise, exact=True, settings=settings))
    sampled, negativity = project_psd(mc_state(d, None, work, n_samples, seed, noise, settings=settings))
    return fidelity(exact, reference), fidelity(sampled, reference), negativity


def run_study(
    problem: HhlProblem,
    noise_settings: Sequence[NoiseModel],
    n_samples: int,
    seed: int,
    settings: Settings = DEFAULT_SETTINGS,
) -> HhlReport:
    u, circuit = build_hhl(problem, settings)
    eff: EffectiveChannel = corollary2(u, problem.m, settings)
    d = decompose_effective(eff, settings)
    x = solve_reference(problem)
    reference = DensityMatrix.pure(x)
    rho_in = _initial_state(problem, settings)
    success = flag_projector(problem.n, problem.m, settings)
    ideal_probability = float(np.linalg.norm(eff.v_tilde @ problem.b) ** 2)

    rows = []
    for noise in noise_settings:
        branch, probability = postselect(run(circuit, rho_in, noise, settings), success, settings)
        undecomposed = trace_leading(branch.normalized(), problem.m + 1)
        without = fidelity(undecomposed, reference)
        with_exact, with_sampled, negativity = _decomposed_fidelities(
            d, problem, reference, noise, n_samples, seed, settings
        )
        _log.debug("noise %s: without %.4f, with %.4f, p_success %.4f", noise, without, with_exact, probability)
        rows.append(
            FidelityRow(
                p_local=noise.p_local,
                p_cnot=noise.p_cnot,
                without_decomposition=without,
                with_decomposition=with_exact,
                sampled=with_sampled,
                success_probability=probability,
                negativity=negativity,
            )
        )

    return HhlReport(
        gamma=d.gamma,
        rescale=d.rescale,
        coefficients=tuple((d.labels(indices), coeff) for coeff, indices in d.terms),
        rows=tuple(rows),
        depth=circuit.depth(),
        cnot_count=circuit.cnot_count(),
        post_selection_probability=ideal_probability,
        n_samples=n_samples,
        seed=seed,
        solution=tuple(complex(v) for v in x),
    )
