"""Sampling-overhead grid over every zero-state selection of a gate."""

from __future__ import annotations

import argparse

from ..context import CommandContext, sig
from ..selection import overhead_grid
from .decompose import load_gate


def selection_label(n: int, m: int) -> str:
    return "|" + "0" * m + "*" * (n - m) + ">"


def cmd_table(args: argparse.Namespace, context: CommandContext) -> str:
    name, u = load_gate(args.gate)
    grid = overhead_grid(u, args.convention, context.settings)
    n = grid.shape[0] - 1
    labels = [selection_label(n, m) for m in range(n + 1)]

    payload = {
        "gate": name,
        "convention": args.convention,
        "rows": "pre-selection (m_in)",
        "cols": "post-selection (m_out)",
        "labels": labels,
        "gamma": [[sig(value, 6) for value in row] for row in grid],
    }
    rows = [
        [m_in, m_out, labels[m_in], labels[m_out], sig(grid[m_in, m_out], 6)]
        for m_in in range(n + 1)
        for m_out in range(n + 1)
    ]
    return context.emit(payload, ["m_in", "m_out", "in", "out", "gamma"], rows, ["gate", "convention"])
