"""Touchstone v1 (.s1p / .s2p) reader and writer.

Numeric content is kept exactly as written in the file (declared frequency
unit and value format); conversion to Hz and complex numbers happens on
demand.  Two-port rows use the v1 column order S11 S21 S12 S22.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import TouchstoneError
from .network import TwoPortNetwork, to_s

FREQ_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
_UNIT_NAMES = {"HZ": "Hz", "KHZ": "kHz", "MHZ": "MHz", "GHZ": "GHz"}
PARAMETER_KINDS = ("S", "Y", "Z")
VALUE_FORMATS = ("MA", "DB", "RI")

# flat (i, j) index of each complex column, per port count
_COLUMN_ORDER = {1: [(0, 0)], 2: [(0, 0), (1, 0), (0, 1), (1, 1)]}


def _fields_per_row(n_ports):
    return 1 + 2 * n_ports * n_ports


@dataclass(frozen=True, eq=False)
class TouchstoneDocument:
    freq_unit: str = "GHz"
    parameter_kind: str = "S"
    value_format: str = "MA"
    reference_resistance: float = 50.0
    n_ports: int = 2
    data_rows: np.ndarray = field(default_factory=lambda: np.empty((0, 9)))
    noise_rows: np.ndarray | None = None
    header_comments: tuple = ()

    def __post_init__(self):
        unit = self.freq_unit.upper()
        if unit not in FREQ_UNITS:
            raise TouchstoneError(f"unknown frequency unit {self.freq_unit!r}")
        kind = self.parameter_kind.upper()
        if kind not in PARAMETER_KINDS:
            raise TouchstoneError(f"unsupported parameter kind {self.parameter_kind!r}")
        fmt = self.value_format.upper()
        if fmt not in VALUE_FORMATS:
            raise TouchstoneError(f"unknown value format {self.value_format!r}")
        if self.n_ports not in (1, 2):
            raise TouchstoneError(f"unsupported port count {self.n_ports}")
        if not self.reference_resistance > 0:
            raise TouchstoneError("reference resistance must be positive")
        rows = np.asarray(self.data_rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != _fields_per_row(self.n_ports):
            raise TouchstoneError(
                f"data rows must have {_fields_per_row(self.n_ports)} fields, got shape {rows.shape}"
            )
        if np.any(np.diff(rows[:, 0]) <= 0):
            raise TouchstoneError("frequencies must be strictly increasing")
        noise = self.noise_rows
        if noise is not None:
            noise = np.asarray(noise, dtype=float)
            if noise.ndim != 2 or noise.shape[1] != 5:
                raise TouchstoneError("noise rows must have 5 fields")
        object.__setattr__(self, "freq_unit", _UNIT_NAMES[unit])
        object.__setattr__(self, "parameter_kind", kind)
        object.__setattr__(self, "value_format", fmt)
        object.__setattr__(self, "reference_resistance", float(self.reference_resistance))
        object.__setattr__(self, "data_rows", rows)
        object.__setattr__(self, "noise_rows", noise)
        object.__setattr__(self, "header_comments", tuple(self.header_comments))

    @property
    def frequencies_hz(self) -> np.ndarray:
        return self.data_rows[:, 0] * FREQ_UNITS[self.freq_unit.upper()]

    def matrices(self) -> np.ndarray:
        """Complex parameter matrices, shape ``(N, n_ports, n_ports)``, as stored (not denormalised)."""
        n = self.n_ports
        pairs = self.data_rows[:, 1:]
        values = pairs_to_complex(pairs[:, 0::2], pairs[:, 1::2], self.value_format)
        out = np.empty((len(pairs), n, n), dtype=complex)
        for col, (i, j) in enumerate(_COLUMN_ORDER[n]):
            out[:, i, j] = values[:, col]
        return out


def pairs_to_complex(a, b, value_format):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    fmt = value_format.upper()
    if fmt == "RI":
        return a + 1j * b
    mag = a if fmt == "MA" else 10 ** (a / 20)
    return mag * np.exp(1j * np.deg2rad(b))


def complex_to_pairs(z, value_format):
    z = np.asarray(z, dtype=complex)
    fmt = value_format.upper()
    if fmt == "RI":
        return z.real, z.imag
    mag = np.abs(z)
    if fmt == "DB":
        with np.errstate(divide="ignore"):
            mag = 20 * np.log10(mag)
    return mag, np.rad2deg(np.angle(z))


def _parse_option_line(text, lineno):
    tokens = text[1:].split()
    opts = {"freq_unit": "GHz", "parameter_kind": "S", "value_format": "MA",
            "reference_resistance": 50.0}
    it = iter(tokens)
    for tok in it:
        up = tok.upper()
        if up in FREQ_UNITS:
            opts["freq_unit"] = up
        elif up in PARAMETER_KINDS:
            opts["parameter_kind"] = up
        elif up in VALUE_FORMATS:
            opts["value_format"] = up
        elif up == "R":
            value = next(it, None)
            try:
                r = float(value)
            except (TypeError, ValueError):
                raise TouchstoneError(f"malformed option line: bad reference resistance {value!r}", lineno)
            if not r > 0:
                raise TouchstoneError("malformed option line: reference resistance must be positive", lineno)
            opts["reference_resistance"] = r
        else:
            raise TouchstoneError(f"malformed option line: unknown token {tok!r}", lineno)
    return opts


def parse_touchstone(text: str, n_ports: int | None = None) -> TouchstoneDocument:
    """Parse Touchstone v1 text.

    ``n_ports`` normally comes from the file extension; when omitted it is
    inferred from the field count of the first data row (3 -> 1-port,
    9 -> 2-port).
    """
    if n_ports is not None and n_ports not in (1, 2):
        raise TouchstoneError(f"unsupported port count {n_ports}")
    options = None
    header = []
    rows = []
    noise = []
    expected = None if n_ports is None else _fields_per_row(n_ports)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("!"):
            if options is None and not rows:
                header.append(line[1:].rstrip())
            continue
        line = line.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            raise TouchstoneError("Touchstone v2 keywords are not supported (v1 only)", lineno)
        if line.startswith("#"):
            if options is not None:
                raise TouchstoneError("more than one option line", lineno)
            if rows:
                raise TouchstoneError("option line after data", lineno)
            options = _parse_option_line(line, lineno)
            continue
        try:
            values = [float(tok) for tok in line.split()]
        except ValueError as exc:
            raise TouchstoneError(f"non-numeric token: {exc}", lineno) from None
        if noise:
            if len(values) != 5:
                raise TouchstoneError(f"noise row needs 5 fields, got {len(values)}", lineno)
            if values[0] <= noise[-1][0]:
                raise TouchstoneError("non-monotone frequencies in noise block", lineno)
            noise.append(values)
            continue
        if expected is None:
            if len(values) == 3:
                expected = 3
            elif len(values) == 9:
                expected = 9
            else:
                raise TouchstoneError(
                    f"cannot infer port count from a row with {len(values)} fields", lineno)
        if rows and values[0] <= rows[-1][0]:
            # a frequency step backwards opens the 2-port noise block
            if expected == 9 and len(values) == 5:
                noise.append(values)
                continue
            raise TouchstoneError("non-monotone frequencies in network block", lineno)
        if len(values) != expected:
            raise TouchstoneError(f"expected {expected} fields, got {len(values)}", lineno)
        rows.append(values)
    if not rows:
        raise TouchstoneError("no network data")
    if options is None:
        options = _parse_option_line("# GHz S MA R 50", None)
    return TouchstoneDocument(
        n_ports=1 if expected == 3 else 2,
        data_rows=np.array(rows, dtype=float),
        noise_rows=np.array(noise, dtype=float) if noise else None,
        header_comments=tuple(header),
        **options,
    )


def _fmt(x, digits):
    return f"{x:.{digits}g}"


def serialize_touchstone(doc: TouchstoneDocument, digits: int = 13,
                         value_format: str | None = None,
                         freq_unit: str | None = None) -> str:
    """Canonical Touchstone v1 text with LF line endings.

    ``value_format`` and ``freq_unit`` re-express the same numbers in another
    format or unit.  ``digits`` significant digits are written; 13 keeps the
    worst-case rounding (5e-13 relative) under 1e-12.
    """
    if len(doc.data_rows) == 0:
        raise TouchstoneError("document has no data rows")
    fmt = (value_format or doc.value_format).upper()
    unit = (freq_unit or doc.freq_unit).upper()
    if fmt not in VALUE_FORMATS:
        raise TouchstoneError(f"unknown value format {value_format!r}")
    if unit not in FREQ_UNITS:
        raise TouchstoneError(f"unknown frequency unit {freq_unit!r}")

    rows = doc.data_rows
    if unit != doc.freq_unit.upper():
        rows = rows.copy()
        rows[:, 0] = doc.frequencies_hz / FREQ_UNITS[unit]
    if fmt != doc.value_format:
        z = pairs_to_complex(rows[:, 1::2], rows[:, 2::2], doc.value_format)
        a, b = complex_to_pairs(z, fmt)
        rows = rows.copy()
        rows[:, 1::2] = a
        rows[:, 2::2] = b

    lines = [f"!{c}" for c in doc.header_comments]
    lines.append(f"# {_UNIT_NAMES[unit]} {doc.parameter_kind} {fmt} R {_fmt(doc.reference_resistance, digits)}")
    lines.extend(" ".join(_fmt(x, digits) for x in row) for row in rows)
    if doc.noise_rows is not None:
        noise = doc.noise_rows
        if unit != doc.freq_unit.upper():
            noise = noise.copy()
            noise[:, 0] *= FREQ_UNITS[doc.freq_unit.upper()] / FREQ_UNITS[unit]
        lines.extend(" ".join(_fmt(x, digits) for x in row) for row in noise)
    return "\n".join(lines) + "\n"


def to_network(doc: TouchstoneDocument, label: str = "") -> TwoPortNetwork:
    """Build a TwoPortNetwork; Y/Z data is denormalised by R and converted to S."""
    if doc.n_ports != 2:
        raise TouchstoneError(f"unsupported port count {doc.n_ports} (two-port network required)")
    mats = doc.matrices()
    r = doc.reference_resistance
    if doc.parameter_kind == "Z":
        mats = mats * r
    elif doc.parameter_kind == "Y":
        mats = mats / r
    freqs = doc.frequencies_hz
    s = to_s(mats, doc.parameter_kind, r, freqs)
    return TwoPortNetwork(freqs, s, r, label)


def from_network(net: TwoPortNetwork, value_format: str = "RI", freq_unit: str = "GHz",
                 header_comments=()) -> TouchstoneDocument:
    cols = [net.s[:, i, j] for i, j in _COLUMN_ORDER[2]]
    rows = np.empty((len(net), 9))
    rows[:, 0] = net.freqs / FREQ_UNITS[freq_unit.upper()]
    for k, z in enumerate(cols):
        a, b = complex_to_pairs(z, value_format)
        rows[:, 1 + 2 * k] = a
        rows[:, 2 + 2 * k] = b
    return TouchstoneDocument(freq_unit=freq_unit, parameter_kind="S", value_format=value_format,
                              reference_resistance=net.z0, n_ports=2, data_rows=rows,
                              header_comments=tuple(header_comments))


_EXT = re.compile(r"\.s(\d+)p$", re.IGNORECASE)


def read_touchstone(path) -> TouchstoneDocument:
    path = Path(path)
    m = _EXT.search(path.name)
    n_ports = int(m.group(1)) if m else None
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise TouchstoneError(f"{path}: not a text file ({exc})") from None
    try:
        return parse_touchstone(text, n_ports)
    except TouchstoneError as exc:
        raise TouchstoneError(f"{path}: {exc}") from None


def write_touchstone(path, doc: TouchstoneDocument, **kwargs):
    Path(path).write_text(serialize_touchstone(doc, **kwargs), encoding="utf-8", newline="\n")
