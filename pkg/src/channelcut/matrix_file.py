"""JSON matrix files: {"rows": r, "cols": c, "entries": [[re, im], ...]} in row-major order."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError


class MatrixFileError(ValidationError):
    """Raised when a matrix file is unreadable or malformed."""


def encode_matrix(mat) -> dict:
    mat = np.asarray(mat, dtype=np.complex128)
    if mat.ndim != 2:
        raise MatrixFileError(f"only 2-D matrices can be written, got shape {mat.shape}")
    return {
        "rows": int(mat.shape[0]),
        "cols": int(mat.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in mat.reshape(-1)],
    }


def decode_matrix(payload: dict, source: str = "matrix") -> np.ndarray:
    try:
        rows = int(payload["rows"])
        cols = int(payload["cols"])
        entries = payload["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MatrixFileError(f"{source}: expected rows, cols and entries") from exc
    if rows < 1 or cols < 1 or len(entries) != rows * cols:
        raise MatrixFileError(f"{source}: {len(entries)} entries do not fill a {rows}x{cols} matrix")
    try:
        values = [complex(float(re), float(im)) for re, im in entries]
    except (TypeError, ValueError) as exc:
        raise MatrixFileError(f"{source}: entries must be [re, im] number pairs") from exc
    return np.array(values, dtype=np.complex128).reshape(rows, cols)


def read_matrix(path: Path) -> np.ndarray:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise MatrixFileError(f"matrix file not found: {path}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise MatrixFileError(f"cannot read matrix file {path}: {exc}") from exc
    return decode_matrix(payload, str(path))


def write_matrix(path: Path, mat) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(encode_matrix(mat), indent=2), encoding="utf-8")
    return path
