"""Builtin gate matrices addressable by name from the command line."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ValidationError


def cnot() -> np.ndarray:
    u = np.eye(4, dtype=np.complex128)
    u[2:, 2:] = [[0, 1], [1, 0]]
    return u


def toffoli() -> np.ndarray:
    u = np.eye(8, dtype=np.complex128)
    u[6:, 6:] = [[0, 1], [1, 0]]
    return u


def qft(n: int) -> np.ndarray:
    """Fourier matrix with entries omega^(jk) / sqrt(2^n), omega = e^(2 pi i / 2^n)."""

    size = 2 ** n
    k = np.arange(size)
    return np.exp(2j * np.pi * np.outer(k, k) / size) / np.sqrt(size)


BUILTIN_GATES: dict[str, Callable[[], np.ndarray]] = {
    "cnot": cnot,
    "toffoli": toffoli,
    "qft3": lambda: qft(3),
    "identity3": lambda: np.eye(8, dtype=np.complex128),
}


def builtin_gate(name: str) -> np.ndarray:
    try:
        return BUILTIN_GATES[name]()
    except KeyError as exc:
        raise ValidationError(f"unknown gate {name!r}, expected one of {sorted(BUILTIN_GATES)}") from exc
