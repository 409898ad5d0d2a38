"""Study records and their file formats.

Every study emits a StudyRecord: a metadata header (full config echo, seed,
version) plus a rectangular table. CSV files carry the metadata as
`# key = value` comment lines, use LF endings and UTF-8, and format floats
with repr so every value round-trips bit-exactly through the bundled parser.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__

__all__ = ["StudyRecord", "read_csv", "write_csv", "write_json", "format_value"]


def format_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(s: str):
    if s == "true":
        return True
    if s == "false":
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


@dataclass
class StudyRecord:
    """One study output: named table plus its configuration echo."""

    name: str
    metadata: dict[str, Any] = field(default_factory=dict)
    columns: list[str] = field(default_factory=list)
    rows: list[tuple] = field(default_factory=list)

    def header_lines(self) -> list[str]:
        lines = [f"# noisybs {__version__}", f"# study = {self.name}"]
        for key in self.metadata:
            lines.append(f"# {key} = {format_value(self.metadata[key])}")
        return lines

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]


def write_csv(record: StudyRecord, path: str | Path) -> None:
    path = Path(path)
    lines = record.header_lines()
    lines.append(",".join(record.columns))
    for row in record.rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_json(record: StudyRecord, path: str | Path) -> None:
    path = Path(path)
    payload = {
        "study": record.name,
        "version": __version__,
        "metadata": record.metadata,
        "columns": record.columns,
        "rows": [list(r) for r in record.rows],
    }
    path.write_text(
        json.dumps(payload, indent=2, allow_nan=False) + "\n", encoding="utf-8", newline="\n"
    )


def write_record(record: StudyRecord, path: str | Path, fmt: str) -> None:
    if fmt == "csv":
        write_csv(record, path)
    elif fmt == "json":
        write_json(record, path)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def read_csv(path: str | Path) -> StudyRecord:
    """Parse a file written by write_csv back into a StudyRecord."""
    record = StudyRecord(name="")
    columns: list[str] | None = None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                key, value = key.strip(), value.strip()
                if key == "study":
                    record.name = value
                else:
                    record.metadata[key] = _parse_value(value)
            continue
        if columns is None:
            columns = line.split(",")
            record.columns = columns
            continue
        record.rows.append(tuple(_parse_value(v) for v in line.split(",")))
    return record


def summary_path(out: str | Path) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".summary.json")


def figure_path(out: str | Path) -> Path:
    out = Path(out)
    return out.with_suffix(".png")
