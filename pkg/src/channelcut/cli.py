"""Command line entrypoint for channelcut.

Exit status: 0 on success, 2 for invalid input or unreadable files, 3 when a
solver cannot produce a trustworthy result. Failures print one
``error:<kind>:<message>`` line on stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Iterable

from .commands.decompose import SELECTION_MODES, cmd_decompose
from .commands.hhl import cmd_hhl
from .commands.table import cmd_table
from .config import Settings
from .context import OUTPUT_FORMATS, CommandContext
from .errors import SolverError, ValidationError
from .gates import BUILTIN_GATES
from .selection import GRID_CONVENTIONS

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3

COMMAND_MAP = {
    "decompose": cmd_decompose,
    "table": cmd_table,
    "hhl": cmd_hhl,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", default=None, help="File to write; stdout when omitted.")
    parser.add_argument("--format", default="json", choices=OUTPUT_FORMATS, help="Output format.")
    parser.add_argument("--verbose", action="store_true", help="Log solver details at DEBUG level.")


def parse_args(argv: Iterable[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Quasiprobability decomposition of selected quantum channels.")
    sub = parser.add_subparsers(dest="command", required=True)
    gate_help = f"Builtin gate ({', '.join(sorted(BUILTIN_GATES))}) or a JSON matrix file."

    decompose = sub.add_parser("decompose", help="Decompose one gate into one-qubit basis products.")
    decompose.add_argument("--gate", required=True, help=gate_help)
    decompose.add_argument(
        "--select",
        default=None,
        help=f"Selection ({'/'.join(SELECTION_MODES)}): zeros:m_in,m_out, hhl:m or file:p_in,p_out.",
    )
    decompose.add_argument(
        "--convention",
        default="covering",
        choices=GRID_CONVENTIONS,
        help="How zeros:m_in,m_out selections with m_in != m_out are decomposed.",
    )
    _add_common(decompose)

    table = sub.add_parser("table", help="Overhead grid over all zero-state selections.")
    table.add_argument("--gate", required=True, help=gate_help)
    table.add_argument("--convention", default="covering", choices=GRID_CONVENTIONS)
    _add_common(table)

    hhl = sub.add_parser("hhl", help="Noisy HHL study with and without decomposition.")
    hhl.add_argument("--noise", nargs="+", default=None, help="Noise settings as p_local,p_cnot.")
    hhl.add_argument("--samples", type=int, default=10000, help="Monte-Carlo samples per noise setting.")
    hhl.add_argument("--seed", type=int, default=2024)
    hhl.add_argument("--a", default=None, help="2x2 Hermitian system matrix file.")
    hhl.add_argument("--b", default=None, help="Right-hand side matrix file (2x1).")
    hhl.add_argument("--m", type=int, default=3, help="Eigenvalue register size.")
    hhl.add_argument("--t", type=float, default=None, help="Evolution time.")
    hhl.add_argument("--c-rot", dest="c_rot", type=float, default=None, help="Rotation constant.")
    _add_common(hhl)

    return parser.parse_args(argv)


def _fail(kind: str, exc: BaseException, code: int) -> int:
    message = " ".join(str(exc).split())
    print(f"error:{kind}:{message}", file=sys.stderr)
    return code


def main(argv: Iterable[str] | None = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        context = CommandContext(Settings.from_env(), Path(args.out) if args.out else None, args.format)
        produced = COMMAND_MAP[args.command](args, context)
    except ValidationError as exc:
        return _fail(type(exc).__name__, exc, EXIT_INVALID)
    except OSError as exc:
        return _fail("OSError", exc, EXIT_INVALID)
    except SolverError as exc:
        return _fail(type(exc).__name__, exc, EXIT_SOLVER)

    if produced != "stdout":
        print(f"{args.command} -> {produced}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
