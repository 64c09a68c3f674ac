"""Noisy HHL study: post-selected fidelity with and without decomposition."""

from __future__ import annotations

import argparse
from pathlib import Path

from ..context import CommandContext, sig
from ..errors import ValidationError
from ..hhl import HhlProblem, run_study
from ..matrix_file import read_matrix
from ..simkit import NoiseModel

DEFAULT_NOISE = ("0,0", "0.001,0.005", "0.001,0.01")


def parse_noise(text: str) -> NoiseModel:
    """``p_local,p_cnot``."""

    parts = text.split(",")
    if len(parts) != 2:
        raise ValidationError(f"noise setting {text!r} must be p_local,p_cnot")
    try:
        return NoiseModel(p_local=float(parts[0]), p_cnot=float(parts[1]))
    except ValueError as exc:
        raise ValidationError(f"noise setting {text!r} must contain two numbers") from exc


def load_problem(args: argparse.Namespace) -> HhlProblem:
    default = HhlProblem.default_problem()
    a = read_matrix(Path(args.a)) if args.a else default.a
    b = read_matrix(Path(args.b)).reshape(-1) if args.b else default.b
    t = args.t if args.t is not None else default.t
    return HhlProblem(a=a, b=b, m=args.m, t=t, c_rot=args.c_rot)


def _complex_pair(z: complex) -> list[float]:
    return [sig(z.real), sig(z.imag)]


def cmd_hhl(args: argparse.Namespace, context: CommandContext) -> str:
    problem = load_problem(args)
    noise = [parse_noise(text) for text in (args.noise or DEFAULT_NOISE)]
    report = run_study(problem, noise, args.samples, args.seed, context.settings)

    rows = [
        {
            "p_local": row.p_local,
            "p_cnot": row.p_cnot,
            "without_decomposition": sig(row.without_decomposition, 6),
            "with_decomposition": sig(row.with_decomposition, 6),
            "sampled": sig(row.sampled, 6),
            "success_probability": sig(row.success_probability, 6),
            "negativity": sig(row.negativity, 6),
        }
        for row in report.rows
    ]
    payload = {
        "gamma": sig(report.gamma, 6),
        "rescale": sig(report.rescale),
        "coefficients": [{"labels": list(labels), "coefficient": sig(c)} for labels, c in report.coefficients],
        "post_selection_probability": sig(report.post_selection_probability),
        "solution": [_complex_pair(z) for z in report.solution],
        "depth": report.depth,
        "cnot_count": report.cnot_count,
        "n_samples": report.n_samples,
        "seed": report.seed,
        "fidelities": rows,
        "total": len(rows),
    }
    columns = list(rows[0]) if rows else ["p_local", "p_cnot"]
    table = [[row[col] for col in columns] for row in rows]
    summary = [key for key in payload if key != "fidelities"]
    return context.emit(payload, columns, table, summary)
