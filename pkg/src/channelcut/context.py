"""Shared command context (settings, destination, output format)."""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .config import Settings
from .errors import ValidationError

OUTPUT_FORMATS = ("json", "csv")


def sig(value: float, digits: int = 12) -> float:
    """Round to ``digits`` significant digits so JSON and CSV carry the same value."""

    return float(f"{value:.{digits}g}")


def _cell(value):
    if isinstance(value, (list, tuple, dict)):
        return json.dumps(value, ensure_ascii=False)
    return value


@dataclass(frozen=True)
class CommandContext:
    settings: Settings
    out: Path | None = None
    fmt: str = "json"

    def __post_init__(self) -> None:
        if self.fmt not in OUTPUT_FORMATS:
            raise ValidationError(f"unknown output format {self.fmt!r}, expected one of {OUTPUT_FORMATS}")
        if self.out is not None:
            object.__setattr__(self, "out", Path(self.out))

    def emit(
        self,
        payload: dict,
        columns: Sequence[str],
        rows: Iterable[Sequence],
        summary: Sequence[str] = (),
    ) -> str:
        """Write ``payload`` as JSON or ``rows`` as CSV; returns where it went.

        In CSV every row repeats the ``summary`` fields of ``payload`` as extra
        columns, so both formats carry the same values. Non-scalar fields are
        written as JSON text.
        """

        if self.fmt == "json":
            text = json.dumps(payload, ensure_ascii=False, indent=2) + "\n"
        else:
            extra = [_cell(payload[key]) for key in summary]
            body = [list(row) + extra for row in rows] or [[""] * len(columns) + extra]
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator="\n")
            writer.writerow(list(columns) + list(summary))
            writer.writerows(body)
            text = buffer.getvalue()

        if self.out is None:
            sys.stdout.write(text)
            return "stdout"
        self.out.parent.mkdir(parents=True, exist_ok=True)
        self.out.write_text(text, encoding="utf-8")
        return str(self.out)
