"""Two-column CSV exchange for spectra, curves and IV tables.

Format: ',' separator, '.' decimal, '#' comment lines.  The first
non-comment row is a header when its first token is not a number.
Comment lines of the form ``# key=value`` are returned as metadata.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError


def _is_number(tok):
    try:
        float(tok)
    except ValueError:
        return False
    return True


@dataclass
class Table:
    columns: list
    data: np.ndarray
    metadata: dict = field(default_factory=dict)

    def column(self, i):
        return self.data[:, i]


def parse_csv(text: str, min_columns: int = 2, source: str = "<csv>") -> Table:
    metadata = {}
    header = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, value = (s.strip() for s in body.split("=", 1))
                metadata[key] = value
            continue
        tokens = [t.strip() for t in next(csv.reader(io.StringIO(line)))]
        if header is None and not rows and not _is_number(tokens[0]):
            header = tokens
            continue
        try:
            values = [float(t) for t in tokens]
        except ValueError as exc:
            raise InputError(f"{source}: line {lineno}: {exc}") from None
        if len(values) < min_columns:
            raise InputError(f"{source}: line {lineno}: expected at least {min_columns} columns")
        if rows and len(values) != len(rows[0]):
            raise InputError(f"{source}: line {lineno}: inconsistent column count")
        rows.append(values)
    if not rows:
        raise InputError(f"{source}: no data rows")
    data = np.array(rows, dtype=float)
    if header is None:
        header = [f"col{i}" for i in range(data.shape[1])]
    return Table(header, data, metadata)


def read_csv(path, min_columns: int = 2) -> Table:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not a text file ({exc})") from None
    return parse_csv(text, min_columns, str(path))


def read_xy(path):
    t = read_csv(path)
    return t.column(0), t.column(1)


def format_csv(header, rows, comments=(), digits=12) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_cell(v, digits) for v in row))
    return "\n".join(lines) + "\n"


def _cell(v, digits):
    if isinstance(v, str):
        return v
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return f"{float(v):.{digits}g}"
