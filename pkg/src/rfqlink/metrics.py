"""Scalar figures of merit from measured gain curves and power sweeps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AnalysisError

PLATEAU_POINTS = 3
PLATEAU_SPREAD_DB = 0.1


@dataclass(frozen=True, eq=False)
class GainCurve:
    freqs: np.ndarray
    gain_db: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float)
        g = np.asarray(self.gain_db, dtype=float)
        if f.ndim != 1 or f.shape != g.shape:
            raise ValueError("frequency and gain arrays must be 1-D and of equal length")
        if len(f) < 3:
            raise AnalysisError(f"gain curve needs at least 3 points, got {len(f)}")
        if np.any(np.diff(f) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "gain_db", g)


@dataclass(frozen=True, eq=False)
class PowerSweep:
    pin_dbm: np.ndarray
    gt_db: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pin_dbm, dtype=float)
        g = np.asarray(self.gt_db, dtype=float)
        if p.ndim != 1 or p.shape != g.shape:
            raise ValueError("input power and gain arrays must be 1-D and of equal length")
        if len(p) < 4:
            raise AnalysisError(f"power sweep needs at least 4 points, got {len(p)}")
        if np.any(np.diff(p) <= 0):
            raise ValueError("input powers must be strictly increasing")
        object.__setattr__(self, "pin_dbm", p)
        object.__setattr__(self, "gt_db", g)


@dataclass(frozen=True)
class BandReport:
    f0: float
    gain_at_f0: float
    f_low: float
    f_high: float
    low_clipped: bool = False
    high_clipped: bool = False

    @property
    def bw(self) -> float:
        return self.f_high - self.f_low

    def as_dict(self):
        return {
            "f0_hz": self.f0,
            "gain_at_f0_db": self.gain_at_f0,
            "f_low_hz": self.f_low,
            "f_high_hz": self.f_high,
            "bw_hz": self.bw,
            "low_clipped": self.low_clipped,
            "high_clipped": self.high_clipped,
        }


def _crossing(x0, y0, x1, y1, level):
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def band_3db(curve: GainCurve, delta_db: float = 3.0) -> BandReport:
    """Peak frequency and the ``delta_db`` band around it.

    Only the contiguous lobe containing the peak is considered.  An edge that
    does not fall below the threshold inside the sweep is clipped to the
    sweep limit and flagged.
    """
    if len(curve.freqs) < 3:
        raise AnalysisError("gain curve needs at least 3 points")
    f, g = curve.freqs, curve.gain_db
    i0 = int(np.argmax(g))  # first maximum, i.e. lowest frequency on ties
    level = g[i0] - delta_db

    lo = i0
    while lo > 0 and g[lo - 1] >= level:
        lo -= 1
    if lo == 0:
        f_low, low_clipped = f[0], True
    else:
        f_low, low_clipped = _crossing(f[lo - 1], g[lo - 1], f[lo], g[lo], level), False

    hi = i0
    n = len(f)
    while hi < n - 1 and g[hi + 1] >= level:
        hi += 1
    if hi == n - 1:
        f_high, high_clipped = f[-1], True
    else:
        f_high, high_clipped = _crossing(f[hi], g[hi], f[hi + 1], g[hi + 1], level), False

    return BandReport(float(f[i0]), float(g[i0]), float(f_low), float(f_high),
                      low_clipped, high_clipped)


def small_signal_gain(sweep: PowerSweep) -> float:
    head = sweep.gt_db[:PLATEAU_POINTS]
    spread = float(np.max(head) - np.min(head))
    if spread > PLATEAU_SPREAD_DB:
        raise AnalysisError(
            f"no small-signal region: lowest {PLATEAU_POINTS} points spread {spread:.3g} dB "
            f"(> {PLATEAU_SPREAD_DB} dB)"
        )
    return float(np.mean(head))


def p1db(sweep: PowerSweep) -> float:
    """Input-referred 1 dB compression point in dBm.

    The small-signal reference is the mean gain of the three lowest-power
    points, which must agree within 0.1 dB.
    """
    g0 = small_signal_gain(sweep)
    target = g0 - 1.0
    below = np.nonzero(sweep.gt_db <= target)[0]
    if len(below) == 0:
        raise AnalysisError("P1dB not reached: gain never compresses by 1 dB within the sweep")
    i = int(below[0])
    p, g = sweep.pin_dbm, sweep.gt_db
    if g[i] == target:
        return float(p[i])
    return float(_crossing(p[i - 1], g[i - 1], p[i], g[i], target))


def gain_at(curve: GainCurve, f: float) -> float:
    if not curve.freqs[0] <= f <= curve.freqs[-1]:
        raise AnalysisError(
            f"f = {f:.12g} Hz outside curve range [{curve.freqs[0]:.12g}, {curve.freqs[-1]:.12g}] Hz"
        )
    return float(np.interp(f, curve.freqs, curve.gain_db))
