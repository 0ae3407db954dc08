"""Table (TSV) and JSON writers for command outputs.

Table files start with ``# key: value`` header lines (the resolved config,
seed and command metadata) followed by a tab-separated column header and
one line per row. JSON files hold ``{"meta": ..., "rows": [...]}``. No
timestamps are written, so identical inputs give identical bytes.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence

from .errors import InvalidInputError

_LOGGER = logging.getLogger(__name__)

MISSING = "NA"
_EXTENSIONS = {"table": ".tsv", "json": ".json"}


def format_cell(value: Any) -> str:
    if value is None:
        return MISSING
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return MISSING
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return str(value)


def json_safe(value: Any) -> Any:
    """Replace non-finite floats and enums so the output is strict JSON."""

    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, Mapping):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    if hasattr(value, "item"):
        return json_safe(value.item())
    return value


def render_table(meta: Mapping[str, Any], rows: Sequence[Mapping[str, Any]]) -> str:
    lines: List[str] = []
    for key, value in meta.items():
        if isinstance(value, (Mapping, list, tuple)):
            text = json.dumps(json_safe(value), sort_keys=True, separators=(",", ":"))
        else:
            text = format_cell(value)
        lines.append(f"# {key}: {text}")
    if rows:
        columns: List[str] = []
        for row in rows:
            for column in row:
                if column not in columns:
                    columns.append(column)
        lines.append("\t".join(columns))
        for row in rows:
            lines.append("\t".join(format_cell(row.get(c)) for c in columns))
    return "\n".join(lines) + "\n"


def render_json(meta: Mapping[str, Any], rows: Sequence[Mapping[str, Any]]) -> str:
    payload = {"meta": json_safe(dict(meta)), "rows": json_safe(list(rows))}
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_output(
    out_dir: Path,
    name: str,
    *,
    fmt: str,
    meta: Mapping[str, Any],
    rows: Sequence[Mapping[str, Any]],
) -> Path:
    """Write one output file ``out_dir/name.{tsv,json}`` and return its path."""

    if fmt not in _EXTENSIONS:
        raise InvalidInputError(f"unknown output format {fmt!r}")
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}{_EXTENSIONS[fmt]}"
    text = render_table(meta, rows) if fmt == "table" else render_json(meta, rows)
    path.write_text(text, encoding="utf-8")
    _LOGGER.debug("Wrote %d rows to %s", len(rows), path)
    return path


def key_value_rows(values: Mapping[str, Any]) -> List[Dict[str, Any]]:
    """Turn a summary mapping into ``key``/``value`` rows."""

    return [{"key": key, "value": value} for key, value in values.items()]


__all__ = [
    "MISSING",
    "format_cell",
    "json_safe",
    "key_value_rows",
    "render_json",
    "render_table",
    "write_output",
]
