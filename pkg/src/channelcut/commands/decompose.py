"""Decompose a gate, optionally under pre- and post-selection."""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..channels import ChannelMix
from ..context import CommandContext, sig
from ..errors import ValidationError
from ..gates import BUILTIN_GATES, builtin_gate
from ..matrix_file import read_matrix
from ..qpd import QuasiDecomposition, decompose
from ..selection import GRID_CONVENTIONS, corollary1, corollary2, decompose_effective, decompose_selected, make_selection

SELECTION_MODES = ("none", "zeros", "hhl", "file")


@dataclass(frozen=True)
class SelectionSpec:
    mode: str = "none"
    m_in: int = 0
    m_out: int = 0
    p_in: Path | None = None
    p_out: Path | None = None

    def describe(self) -> str:
        if self.mode == "zeros":
            return f"zeros:{self.m_in},{self.m_out}"
        if self.mode == "hhl":
            return f"hhl:{self.m_in}"
        if self.mode == "file":
            return f"file:{self.p_in},{self.p_out}"
        return "none"


def parse_selection(text: str | None) -> SelectionSpec:
    """Parse ``zeros:m_in,m_out``, ``hhl:m`` or ``file:p_in,p_out``."""

    if not text or text == "none":
        return SelectionSpec()
    mode, _, rest = text.partition(":")
    parts = [part.strip() for part in rest.split(",")] if rest else []
    try:
        if mode == "zeros" and len(parts) == 2:
            return SelectionSpec("zeros", m_in=int(parts[0]), m_out=int(parts[1]))
        if mode == "hhl" and len(parts) == 1:
            return SelectionSpec("hhl", m_in=int(parts[0]), m_out=int(parts[0]))
    except ValueError as exc:
        raise ValidationError(f"selection {text!r} needs integer qubit counts") from exc
    if mode == "file" and len(parts) == 2:
        return SelectionSpec("file", p_in=Path(parts[0]), p_out=Path(parts[1]))
    raise ValidationError(f"cannot parse selection {text!r}; use zeros:m_in,m_out, hhl:m or file:p_in,p_out")


def load_gate(spec: str) -> tuple[str, np.ndarray]:
    if spec in BUILTIN_GATES:
        return spec, builtin_gate(spec)
    return Path(spec).stem, read_matrix(Path(spec))


def run_decompose(
    u: np.ndarray,
    selection: SelectionSpec,
    context: CommandContext,
    convention: str = "covering",
) -> tuple[QuasiDecomposition, dict]:
    settings = context.settings
    n = int(round(np.log2(u.shape[0])))
    block = selection.describe()
    if selection.mode == "none":
        d = decompose(ChannelMix.unitary(u), settings)
        ranks = {"requested_r_in": u.shape[1], "requested_r_out": u.shape[0]}
        return d, {"block": block, "n_tilde": d.n_qubits, "r_in": u.shape[1], "r_out": u.shape[0], **ranks}

    if selection.mode == "zeros":
        if convention not in GRID_CONVENTIONS:
            raise ValidationError(f"unknown convention {convention!r}")
        if convention == "covering":
            k = min(selection.m_in, selection.m_out)
            eff = corollary1(u, k, k, settings)
            block = f"zeros:{k},{k}"
        else:
            eff = corollary1(u, selection.m_in, selection.m_out, settings)
        d = decompose_effective(eff, settings)
    elif selection.mode == "hhl":
        eff = corollary2(u, selection.m_in, settings)
        d = decompose_effective(eff, settings)
    else:
        sel = make_selection(read_matrix(selection.p_in), read_matrix(selection.p_out), settings)
        d, eff = decompose_selected(u, sel, settings)
    if selection.mode == "zeros":
        ranks = {"requested_r_in": 2 ** (n - selection.m_in), "requested_r_out": 2 ** (n - selection.m_out)}
    else:
        ranks = {"requested_r_in": eff.r_in, "requested_r_out": eff.r_out}
    return d, {"block": block, "n_tilde": eff.n_tilde, "r_in": eff.r_in, "r_out": eff.r_out, **ranks}


def cmd_decompose(args: argparse.Namespace, context: CommandContext) -> str:
    name, u = load_gate(args.gate)
    selection = parse_selection(args.select)
    d, shape = run_decompose(u, selection, context, args.convention)

    terms = [
        {"labels": list(d.labels(indices)), "coefficient": sig(coeff), "abs": sig(abs(coeff))}
        for coeff, indices in d.terms
    ]
    payload = {
        "gate": name,
        "n": int(round(np.log2(u.shape[0]))),
        "selection": selection.describe(),
        "convention": args.convention,
        **shape,
        "gamma": sig(d.gamma, 6),
        "rescale": sig(d.rescale),
        "residual": float(d.residual),
        "total": len(terms),
        "terms": terms,
    }
    rows = [[" ".join(term["labels"]), term["coefficient"], term["abs"]] for term in terms]
    summary = [key for key in payload if key != "terms"]
    return context.emit(payload, ["labels", "coefficient", "abs"], rows, summary)
