"""Spin-qubit drive link budget.

The driver amplifier must deliver a gate voltage ``v_gate`` (zero-to-peak)
into the gate load, cover ``f_L +/- 4 f_R`` inside its 3 dB band, and meet
fixed gain and noise-figure thresholds.  The 12 dB noise-figure ceiling is a
constant carried over from an external infidelity analysis; it is not
derived here.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

from .constants import H, Q_E
from .errors import InputError

RABI_BANDWIDTH_FACTOR = 8


def _nonnegative(x, name):
    if x < 0:
        raise ValueError(f"{name} must be non-negative, got {x}")


def larmor_frequency(e_z_mev: float) -> float:
    """Larmor frequency in Hz for a Zeeman splitting in meV."""
    _nonnegative(e_z_mev, "Zeeman energy")
    return e_z_mev * 1e-3 * Q_E / H


def zeeman_energy(f_hz: float) -> float:
    """Zeeman splitting in meV for a Larmor frequency in Hz."""
    _nonnegative(f_hz, "Larmor frequency")
    return f_hz * H / Q_E * 1e3


def min_bandwidth(f_rabi: float) -> float:
    _nonnegative(f_rabi, "Rabi frequency")
    return RABI_BANDWIDTH_FACTOR * f_rabi


def required_output_power(v_gate: float, load_resistance: float = 50.0) -> float:
    """Sinusoidal power (dBm) that develops ``v_gate`` zero-to-peak across the load."""
    if not v_gate > 0 or not load_resistance > 0:
        raise ValueError("gate voltage and load resistance must be positive")
    p_w = v_gate**2 / (2 * load_resistance)
    return 10 * math.log10(p_w / 1e-3)


def required_input_power(p_out_dbm: float, gain_db: float) -> float:
    return p_out_dbm - gain_db


@dataclass(frozen=True)
class QubitDriveSpec:
    """Drive requirements.  Give either ``e_z`` (meV) or ``f_larmor`` (Hz); the other is derived."""

    f_rabi: float = 60e6
    v_gate: float = 10e-3
    f_larmor: float | None = None
    e_z: float | None = None
    min_gain_db: float = 10.0
    max_nf_db: float = 12.0
    infidelity_budget: float = 125e-6
    fidelity_target: float = 0.999
    load_resistance: float = 50.0
    ip1db_backoff_db: float = 0.0

    def __post_init__(self):
        if self.f_larmor is None and self.e_z is None:
            raise ValueError("one of e_z or f_larmor is required")
        if self.f_larmor is None:
            object.__setattr__(self, "f_larmor", larmor_frequency(self.e_z))
        elif self.e_z is None:
            object.__setattr__(self, "e_z", zeeman_energy(self.f_larmor))
        elif not math.isclose(larmor_frequency(self.e_z), self.f_larmor, rel_tol=1e-9):
            raise ValueError(
                f"inconsistent e_z = {self.e_z} meV and f_larmor = {self.f_larmor} Hz"
            )
        if not self.f_larmor > 0:
            raise ValueError("Larmor frequency must be positive")
        if not self.f_rabi > 0:
            raise ValueError("Rabi frequency must be positive")
        if not self.v_gate > 0:
            raise ValueError("gate voltage must be positive")
        if not self.load_resistance > 0:
            raise ValueError("load resistance must be positive")


@dataclass(frozen=True)
class AmplifierCard:
    f0: float
    s21_db: float
    f_low: float
    f_high: float
    nf_min_db: float
    ip1db_dbm: float
    p_dc_mw: float | None = None
    v_dd: float | None = None
    temperature: float | None = None
    label: str = ""

    def __post_init__(self):
        if not self.f_low <= self.f0 <= self.f_high:
            raise ValueError(f"need f_low <= f0 <= f_high, got {self.f_low}, {self.f0}, {self.f_high}")


@dataclass(frozen=True)
class Criterion:
    name: str
    required: object
    actual: object
    margin: float
    passed: bool
    unit: str = ""


@dataclass(frozen=True)
class BudgetReport:
    criteria: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def __getitem__(self, name) -> Criterion:
        for c in self.criteria:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self):
        return {"passed": self.passed, "criteria": [asdict(c) for c in self.criteria]}


def check_link(card: AmplifierCard, spec: QubitDriveSpec, gain_curve=None) -> BudgetReport:
    """Evaluate gain, noise, band coverage and linearity against ``spec``.

    Gain is taken at f0 from the card.  Passing a measured ``gain_curve``
    (metrics.GainCurve) uses the interpolated gain at the Larmor frequency
    instead, which is the stricter reading.
    """
    gain = card.s21_db
    if gain_curve is not None:
        from .metrics import gain_at

        gain = gain_at(gain_curve, spec.f_larmor)

    out = []
    m = gain - spec.min_gain_db
    out.append(Criterion("gain", spec.min_gain_db, gain, m, m >= 0, "dB"))

    m = spec.max_nf_db - card.nf_min_db
    out.append(Criterion("noise", spec.max_nf_db, card.nf_min_db, m, m >= 0, "dB"))

    half = min_bandwidth(spec.f_rabi) / 2
    lo, hi = spec.f_larmor - half, spec.f_larmor + half
    m = min(lo - card.f_low, card.f_high - hi)
    out.append(Criterion("band", [lo, hi], [card.f_low, card.f_high], m, m >= 0, "Hz"))

    p_in = required_input_power(required_output_power(spec.v_gate, spec.load_resistance), gain)
    limit = card.ip1db_dbm - spec.ip1db_backoff_db
    m = limit - p_in
    out.append(Criterion("linearity", limit, p_in, m, m >= 0, "dBm"))
    return BudgetReport(tuple(out))


def parse_key_values(text: str) -> dict:
    """``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise InputError(f"line {lineno}: empty key")
        out[key] = value
    return out


def _build(cls, text):
    values = parse_key_values(text)
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in values.items():
        if key not in known:
            raise InputError(f"unknown {cls.__name__} key {key!r}")
        if key == "label":
            kwargs[key] = value
            continue
        try:
            kwargs[key] = float(value)
        except ValueError:
            raise InputError(f"{key}: not a number: {value!r}") from None
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise InputError(f"{cls.__name__}: {exc}") from None
    except ValueError as exc:
        raise InputError(f"{cls.__name__}: {exc}") from None


def load_card(text: str) -> AmplifierCard:
    return _build(AmplifierCard, text)


def load_spec(text: str) -> QubitDriveSpec:
    return _build(QubitDriveSpec, text)
