"""Fixed per-mode column sets and CSV/JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Mapping, Sequence

SCHEMA_VERSION = 1

_PROTOCOL = ("phi1", "phi2", "delta_phi", "p0", "p1", "concurrence", "negativity", "witness")

SCHEMAS: dict[str, tuple[str, ...]] = {
    "phase": ("input", "mass", "distance", "dt", "exponent", "phi", "planck_ratio"),
    "run": ("input",) + _PROTOCOL,
    "mediator": (
        "input", "w", "xi00", "xi01", "xi10", "xi11",
        "concurrence", "negativity", "witness", "field_return_fidelity", "mass_field_entropy",
    ),
    "decohere": ("input", "gamma", "negativity", "concurrence"),
    "threshold": ("input", "gamma_lo", "gamma_hi", "gamma_star", "negativity_lo", "negativity_hi"),
    "nogo": ("trial", "seed", "depth", "d_c", "negativity", "witness_min"),
}

Record = Mapping[str, Any]


def format_number(value: Any) -> str:
    """Shortest text that parses back to the same value."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def to_csv(records: Sequence[Record], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        writer.writerow([format_number(rec.get(c)) for c in columns])
    return buf.getvalue()


def to_json(records: Sequence[Record], columns: Sequence[str]) -> str:
    rows = [{c: _json_value(rec.get(c)) for c in columns} for rec in records]
    return json.dumps(rows, indent=2, allow_nan=False) + "\n"


def emit(records: Sequence[Record], fmt: str, columns: Sequence[str]) -> str:
    if not records:
        raise ValueError("no records to emit")
    if fmt == "csv":
        return to_csv(records, columns)
    if fmt == "json":
        return to_json(records, columns)
    raise ValueError(f"unknown output format {fmt!r}")


def emit_partial(records: Sequence[Record], fmt: str, columns: Sequence[str], index: int, error: str) -> str:
    """Rows computed before a failing point, followed by an abort marker."""
    if fmt == "csv":
        return to_csv(records, columns) + f"# partial output: aborted at point {index}: {error}\n"
    rows: list[Any] = [{c: _json_value(rec.get(c)) for c in columns} for rec in records]
    rows.append({"partial": True, "aborted_at": index, "error": error})
    return json.dumps(rows, indent=2, allow_nan=False) + "\n"


def plot_data(records: Sequence[Record], x: str, y: str) -> str:
    """Two-column CSV with a ``#`` header line, readable by gnuplot."""
    lines = [f"# {x},{y}"]
    for rec in records:
        lines.append(f"{format_number(rec.get(x))},{format_number(rec.get(y))}")
    return "\n".join(lines) + "\n"
