"""Numerical tolerances and limits shared by the solvers."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

from .errors import ValidationError

THREADS_ENV = "CHANNELCUT_THREADS"


@dataclass(frozen=True)
class Settings:
    max_qubits: int = 10
    max_decompose_qubits: int = 3
    dense_max_qubits: int = 2
    projector_tol: float = 1e-9
    unitary_tol: float = 1e-9
    identity_tol: float = 1e-9
    residual_tol: float = 1e-8
    imag_tol: float = 1e-8
    prune_tol: float = 1e-10
    normalize_floor: float = 1e-12
    threads: int = 1

    def __post_init__(self) -> None:
        for name in ("max_qubits", "max_decompose_qubits", "threads"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.dense_max_qubits < 0:
            raise ValidationError(f"dense_max_qubits must be non-negative, got {self.dense_max_qubits}")
        for field in fields(self):
            if field.name.endswith(("_tol", "_floor")) and not getattr(self, field.name) > 0:
                raise ValidationError(f"{field.name} must be positive, got {getattr(self, field.name)}")

    @classmethod
    def from_env(cls, **overrides) -> "Settings":
        raw = os.environ.get(THREADS_ENV, "").strip()
        if raw and "threads" not in overrides:
            try:
                threads = int(raw)
            except ValueError as exc:
                raise ValidationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from exc
            overrides["threads"] = threads
        return cls(**overrides)


DEFAULT_SETTINGS = Settings()
