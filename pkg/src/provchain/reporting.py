"""Report emission: canonical JSON, CSV tables, and markdown summaries.

Reports are reproducible by construction: floats are fixed at six
significant digits, keys are sorted, and anything wall-clock dependent
lives under a reserved ``volatile`` key that canonicalization strips, so
two runs with the same config and seed canonicalize to identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Any, Mapping, Optional, Sequence

VOLATILE_KEY = "volatile"
FLOAT_SIG_DIGITS = 6


def round_floats(value: Any, sig: int = FLOAT_SIG_DIGITS) -> Any:
    """Recursively fix floats at `sig` significant digits."""
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            return value
        return float(f"{value:.{sig}g}")
    if isinstance(value, dict):
        return {k: round_floats(v, sig) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_floats(v, sig) for v in value]
    return value


def strip_volatile(value: Any) -> Any:
    """Drop every ``volatile`` entry, recursively."""
    if isinstance(value, dict):
        return {k: strip_volatile(v) for k, v in value.items() if k != VOLATILE_KEY}
    if isinstance(value, (list, tuple)):
        return [strip_volatile(v) for v in value]
    return value


def to_json_bytes(doc: Mapping) -> bytes:
    """Full report serialization (volatile fields included)."""
    return (json.dumps(round_floats(doc), sort_keys=True, indent=2) + "\n").encode("utf-8")


def canonical_bytes(doc: Mapping) -> bytes:
    """Deterministic serialization: volatile stripped, floats fixed, keys sorted."""
    clean = round_floats(strip_volatile(doc))
    return (json.dumps(clean, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def make_report(command: str, version: str, seed: int, config_echo: Mapping,
                payload: Mapping, deterministic: bool = True,
                volatile: Optional[Mapping] = None) -> dict:
    """Standard report envelope; the run's config is embedded verbatim."""
    doc = {
        "tool": "provchain",
        "version": version,
        "command": command,
        "seed": seed,
        "config": dict(config_echo),
        "deterministic": deterministic,
        "payload": payload,
    }
    if volatile:
        doc[VOLATILE_KEY] = dict(volatile)
    return doc


def rows_to_csv(rows: Sequence[Mapping], columns: Sequence[str]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), extrasaction="ignore",
                            lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_cell(row.get(k)) for k in columns})
    return buffer.getvalue()


def _csv_cell(value: Any) -> Any:
    if isinstance(value, float):
        return f"{value:.{FLOAT_SIG_DIGITS}g}"
    return value


def rows_to_markdown(title: str, rows: Sequence[Mapping], columns: Sequence[str]) -> str:
    lines = [f"## {title}", ""]
    lines.append("| " + " | ".join(columns) + " |")
    lines.append("| " + " | ".join("---" for _ in columns) + " |")
    for row in rows:
        lines.append("| " + " | ".join(str(_csv_cell(row.get(c, ""))) for c in columns) + " |")
    lines.append("")
    return "\n".join(lines)
