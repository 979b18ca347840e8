"""Table emission: CSV at 17 significant digits and JSON with a ``meta`` header."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__


def format_number(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"


def _cell(value) -> str:
    if isinstance(value, (list, tuple)):
        return ";".join(str(v) for v in value) if value else "ok"
    if isinstance(value, str):
        return value
    if value is None:
        return ""
    return format_number(value)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, tuple):
        return list(value)
    if hasattr(value, "item"):  # numpy scalars
        return _json_value(value.item())
    return value


def render_csv(rows: list[dict], columns: list[str] | None = None) -> str:
    columns = columns or (list(rows[0]) if rows else [])
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def render_json(rows: list[dict], config: dict | None = None, command: str | None = None) -> str:
    config = dict(config or {})
    meta = {
        "version": __version__,
        "command": command,
        "config": config,
        "config_hash": config_hash({"command": command, **config}),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    body = {"meta": meta,
            "rows": [{k: _json_value(v) for k, v in row.items()} for row in rows]}
    return json.dumps(body, indent=2, allow_nan=False) + "\n"


def write_table(records, fmt: str = "csv", path=None, columns: list[str] | None = None,
                config: dict | None = None, command: str | None = None) -> str:
    """Write homogeneous records as CSV or JSON to ``path`` (stdout when ``None``).

    Records may be dicts or objects exposing ``as_row()``.
    """
    rows = [r if isinstance(r, dict) else r.as_row() for r in records]
    if rows and any(set(r) != set(rows[0]) for r in rows):
        raise ValueError("records are not homogeneous")
    if fmt == "csv":
        text = render_csv(rows, columns)
    elif fmt == "json":
        if columns:
            rows = [{c: r.get(c) for c in columns} for r in rows]
        text = render_json(rows, config, command)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, newline="")
    return text


def read_csv(path) -> list[dict]:
    """Read a table written by :func:`write_table`, converting numeric cells back to floats."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        parsed = {}
        for key, cell in row.items():
            try:
                parsed[key] = float(cell)
            except ValueError:
                parsed[key] = cell
        out.append(parsed)
    return out
