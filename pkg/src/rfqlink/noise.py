"""Noise-figure calculus and cold-source DUT noise extraction."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import K_B, T0
from .errors import AnalysisError
from .network import common_grid


def _nonnegative(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise ValueError(f"{name} must be non-negative, got {x}")
    return arr


def _as_result(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def nf_db_to_temperature(nf_db, t0: float = T0):
    """Equivalent input noise temperature (K) for a noise figure in dB."""
    nf = _nonnegative(nf_db, "noise figure")
    return _as_result(t0 * (10 ** (nf / 10) - 1), nf_db)


def temperature_to_nf_db(t, t0: float = T0):
    temp = _nonnegative(t, "noise temperature")
    return _as_result(10 * np.log10(1 + temp / t0), t)


@dataclass(frozen=True)
class NoiseStage:
    gain_linear: float
    noise_temperature: float
    label: str = ""

    def __post_init__(self):
        if not self.gain_linear > 0:
            raise ValueError(f"stage gain must be positive, got {self.gain_linear}")
        if not self.noise_temperature >= 0:
            raise ValueError(f"noise temperature must be >= 0, got {self.noise_temperature}")

    @classmethod
    def from_db(cls, gain_db, nf_db, label="", t0=T0):
        return cls(10 ** (gain_db / 10), nf_db_to_temperature(nf_db, t0), label)

    @property
    def gain_db(self):
        return 10 * np.log10(self.gain_linear)


def friis_cascade(stages) -> NoiseStage:
    """Total gain and input-referred noise temperature of a chain of stages."""
    stages = list(stages)
    if not stages:
        raise ValueError("friis_cascade needs at least one stage")
    gain = 1.0
    temp = 0.0
    for st in stages:
        temp += st.noise_temperature / gain
        gain *= st.gain_linear
    return NoiseStage(gain, temp, "+".join(s.label for s in stages if s.label))


def passive_noise_temperature(available_gain, t_phys):
    """Noise temperature of a matched passive network at physical temperature ``t_phys``."""
    g = np.asarray(available_gain, dtype=float)
    if np.any(g <= 0) or np.any(g > 1):
        raise ValueError(f"available gain of a passive network must lie in (0, 1], got {available_gain}")
    t = _nonnegative(t_phys, "physical temperature")
    out = (1 / g - 1) * t
    return float(out) if out.ndim == 0 else out


def _spectrum_checks(freqs, values, name):
    freqs = np.asarray(freqs, dtype=float)
    values = np.asarray(values, dtype=float)
    if freqs.ndim != 1 or freqs.shape != values.shape:
        raise ValueError(f"{name}: frequency and value arrays must be 1-D and equal length")
    if len(freqs) < 1:
        raise ValueError(f"{name}: empty spectrum")
    if np.any(np.diff(freqs) <= 0):
        raise ValueError(f"{name}: frequencies must be strictly increasing")
    freqs.setflags(write=False)
    values.setflags(write=False)
    return freqs, values


@dataclass(frozen=True, eq=False)
class GainSpectrum:
    freqs: np.ndarray
    gain_db: np.ndarray
    label: str = ""

    def __post_init__(self):
        f, g = _spectrum_checks(self.freqs, self.gain_db, self.label or "gain spectrum")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "gain_db", g)

    def resample(self, freqs):
        return np.interp(freqs, self.freqs, self.gain_db)


@dataclass(frozen=True, eq=False)
class NoiseDensitySpectrum:
    freqs: np.ndarray
    onpd: np.ndarray
    label: str = ""

    def __post_init__(self):
        f, n = _spectrum_checks(self.freqs, self.onpd, self.label or "ONPD spectrum")
        if np.any(n <= 0):
            raise ValueError(f"{self.label or 'ONPD spectrum'}: noise density must be positive")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "onpd", n)

    def resample(self, freqs):
        return np.interp(freqs, self.freqs, self.onpd)


@dataclass(frozen=True, eq=False)
class NFSpectrum:
    """Extracted DUT noise. ``nf_db`` is NaN where ``t_dut <= -t0``."""

    freqs: np.ndarray
    nf_db: np.ndarray
    t_dut: np.ndarray
    gain_db: np.ndarray
    warnings: tuple = field(default=())

    def minimum(self):
        i = int(np.nanargmin(self.nf_db))
        return float(self.freqs[i]), float(self.nf_db[i])


def coldsource_extract(casc_gain: GainSpectrum, casc_onpd: NoiseDensitySpectrum,
                       dc_gain: GainSpectrum, dc_onpd: NoiseDensitySpectrum,
                       t_source: float = T0, t0: float = T0) -> NFSpectrum:
    """DUT noise figure from the cold-source measurement pair.

    The downconverter (everything after the DUT) is characterised alone with
    its own gain and ONPD measurement; its noise temperature is then removed
    from the DUT+downconverter result, Friis style.

    The common grid is the cascade ONPD grid restricted to the frequency
    range covered by all four inputs.  Gains are interpolated in dB, ONPD
    linearly.
    """
    if not t_source > 0:
        raise ValueError(f"source temperature must be positive, got {t_source}")
    inputs = (casc_onpd, casc_gain, dc_gain, dc_onpd)
    try:
        freqs = common_grid(*(s.freqs for s in inputs))
    except AnalysisError:
        raise AnalysisError("cold-source inputs have no common frequency range") from None
    if len(freqs) == 0:
        raise AnalysisError("cold-source inputs have no common frequency range")

    g_casc = 10 ** (casc_gain.resample(freqs) / 10)
    g_dc = 10 ** (dc_gain.resample(freqs) / 10)
    n_casc = casc_onpd.resample(freqs)
    n_dc = dc_onpd.resample(freqs)

    t_dc = n_dc / (K_B * g_dc) - t_source
    t_casc = n_casc / (K_B * g_casc) - t_source
    # rounding slack so a noiseless block (ONPD == k*T_source*G) reads as 0 K
    slack = 1e-9 * t_source
    t_dc = np.where((t_dc < 0) & (t_dc > -slack), 0.0, t_dc)
    t_casc = np.where((t_casc < 0) & (t_casc > -slack), 0.0, t_casc)
    for name, t in (("downconverter", t_dc), ("cascade", t_casc)):
        bad = t < 0
        if np.any(bad):
            i = int(np.argmax(bad))
            raise AnalysisError(
                f"{name} ONPD below the source noise floor at f = {freqs[i]:.12g} Hz "
                f"(T = {t[i]:.6g} K); calibration inconsistent"
            )

    g_dut = g_casc / g_dc
    t_dut = t_casc - t_dc / g_dut
    warnings = []
    for f, t in zip(freqs[t_dut < 0], t_dut[t_dut < 0]):
        warnings.append(f"negative DUT noise temperature {t:.6g} K at f = {f:.12g} Hz")
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = 1 + t_dut / t0
        nf = np.where(ratio > 0, 10 * np.log10(np.where(ratio > 0, ratio, 1.0)), np.nan)
    return NFSpectrum(freqs, nf, t_dut, 10 * np.log10(g_dut), tuple(warnings))
