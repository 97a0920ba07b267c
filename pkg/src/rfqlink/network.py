"""Two-port network algebra.

All matrix arrays have shape ``(N, 2, 2)`` and complex dtype.  Every port
shares one real reference impedance ``z0``.

T-parameters follow the cascade-friendly convention

    [b1, a1]^T = T [a2, b2]^T

so that ``T(a ** b) = T(a) @ T(b)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import AnalysisError, SingularMatrixError

SINGULAR_TOL = 1e-300
PASSIVITY_TOL = 1e-6


class RepresentationKind(str, Enum):
    S = "S"
    Z = "Z"
    Y = "Y"
    ABCD = "ABCD"
    T = "T"

    @classmethod
    def parse(cls, name) -> "RepresentationKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).upper())
        except ValueError:
            raise ValueError(f"unknown representation {name!r}") from None


@dataclass(frozen=True, eq=False)
class TwoPortNetwork:
    freqs: np.ndarray
    s: np.ndarray
    z0: float = 50.0
    label: str = ""

    def __post_init__(self):
        freqs = np.atleast_1d(np.asarray(self.freqs, dtype=float))
        s = np.asarray(self.s, dtype=complex)
        if s.ndim == 2:
            s = s[np.newaxis]
        if freqs.ndim != 1 or s.shape != (len(freqs), 2, 2):
            raise ValueError(f"expected {len(freqs)} 2x2 matrices, got array of shape {s.shape}")
        if len(freqs) < 1:
            raise ValueError("network needs at least one frequency point")
        if np.any(np.diff(freqs) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if not self.z0 > 0:
            raise ValueError(f"reference impedance must be positive, got {self.z0}")
        freqs.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "z0", float(self.z0))

    def __len__(self):
        return len(self.freqs)

    def __pow__(self, other: "TwoPortNetwork") -> "TwoPortNetwork":
        return cascade(self, other)

    @property
    def s11(self):
        return self.s[:, 0, 0]

    @property
    def s21(self):
        return self.s[:, 1, 0]

    @property
    def s12(self):
        return self.s[:, 0, 1]

    @property
    def s22(self):
        return self.s[:, 1, 1]

    def with_s(self, s, label=None) -> "TwoPortNetwork":
        return TwoPortNetwork(self.freqs, s, self.z0, self.label if label is None else label)


def _entries(m):
    return m[:, 0, 0], m[:, 0, 1], m[:, 1, 0], m[:, 1, 1]


def _pack(a, b, c, d):
    out = np.empty((len(a), 2, 2), dtype=complex)
    out[:, 0, 0] = a
    out[:, 0, 1] = b
    out[:, 1, 0] = c
    out[:, 1, 1] = d
    return out


def _check_nonzero(den, freqs, what):
    bad = np.abs(den) < SINGULAR_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        f = None if freqs is None else float(freqs[i])
        raise SingularMatrixError(f"singular {what}", f)


def _inv(m, freqs=None, what="matrix"):
    a, b, c, d = _entries(m)
    det = a * d - b * c
    _check_nonzero(det, freqs, what)
    return _pack(d / det, -b / det, -c / det, a / det)


_EYE = np.eye(2, dtype=complex)


def s_to_z(s, z0, freqs=None):
    return z0 * (_EYE + s) @ _inv(_EYE - s, freqs, "(I - S) in S->Z conversion")


def z_to_s(z, z0, freqs=None):
    return (z - z0 * _EYE) @ _inv(z + z0 * _EYE, freqs, "(Z + z0 I) in Z->S conversion")


def s_to_y(s, z0, freqs=None):
    return (_EYE - s) @ _inv(_EYE + s, freqs, "(I + S) in S->Y conversion") / z0


def y_to_s(y, z0, freqs=None):
    return (_EYE - z0 * y) @ _inv(_EYE + z0 * y, freqs, "(I + z0 Y) in Y->S conversion")


def s_to_abcd(s, z0, freqs=None):
    s11, s12, s21, s22 = _entries(s)
    _check_nonzero(s21, freqs, "S21 in S->ABCD conversion")
    den = 2 * s21
    return _pack(
        ((1 + s11) * (1 - s22) + s12 * s21) / den,
        z0 * ((1 + s11) * (1 + s22) - s12 * s21) / den,
        ((1 - s11) * (1 - s22) - s12 * s21) / (den * z0),
        ((1 - s11) * (1 + s22) + s12 * s21) / den,
    )


def abcd_to_s(abcd, z0, freqs=None):
    a, b, c, d = _entries(abcd)
    den = a + b / z0 + c * z0 + d
    _check_nonzero(den, freqs, "denominator in ABCD->S conversion")
    return _pack(
        (a + b / z0 - c * z0 - d) / den,
        2 * (a * d - b * c) / den,
        2 / den,
        (-a + b / z0 - c * z0 + d) / den,
    )


def s_to_t(s, z0=None, freqs=None):
    s11, s12, s21, s22 = _entries(s)
    _check_nonzero(s21, freqs, "S21 in S->T conversion")
    det = s11 * s22 - s12 * s21
    return _pack(-det / s21, s11 / s21, -s22 / s21, 1 / s21)


def t_to_s(t, z0=None, freqs=None):
    t11, t12, t21, t22 = _entries(t)
    _check_nonzero(t22, freqs, "T22 in T->S conversion")
    return _pack(t12 / t22, (t11 * t22 - t12 * t21) / t22, 1 / t22, -t21 / t22)


_FROM_S = {
    RepresentationKind.S: lambda s, z0, freqs=None: np.array(s, dtype=complex),
    RepresentationKind.Z: s_to_z,
    RepresentationKind.Y: s_to_y,
    RepresentationKind.ABCD: s_to_abcd,
    RepresentationKind.T: s_to_t,
}
_TO_S = {
    RepresentationKind.S: lambda m, z0, freqs=None: np.array(m, dtype=complex),
    RepresentationKind.Z: z_to_s,
    RepresentationKind.Y: y_to_s,
    RepresentationKind.ABCD: abcd_to_s,
    RepresentationKind.T: t_to_s,
}


def from_s(s, kind, z0=50.0, freqs=None) -> np.ndarray:
    """Convert raw S matrices (shape ``(N, 2, 2)``) to another representation."""
    return _FROM_S[RepresentationKind.parse(kind)](np.asarray(s, dtype=complex), z0, freqs)


def to_s(mats, kind, z0=50.0, freqs=None) -> np.ndarray:
    """Convert raw matrices of representation ``kind`` back to S."""
    return _TO_S[RepresentationKind.parse(kind)](np.asarray(mats, dtype=complex), z0, freqs)


def convert(net: TwoPortNetwork, kind) -> np.ndarray:
    """Return the network's matrices in representation ``kind``.

    Raises SingularMatrixError naming the first frequency where the
    conversion is undefined.
    """
    return from_s(net.s, kind, net.z0, net.freqs)


def from_representation(freqs, mats, kind, z0=50.0, label="") -> TwoPortNetwork:
    freqs = np.asarray(freqs, dtype=float)
    return TwoPortNetwork(freqs, to_s(mats, kind, z0, freqs), z0, label)


def thru(freqs, z0=50.0) -> TwoPortNetwork:
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    s = np.zeros((len(freqs), 2, 2), dtype=complex)
    s[:, 0, 1] = s[:, 1, 0] = 1.0
    return TwoPortNetwork(freqs, s, z0, "thru")


def series_impedance(freqs, z, z0=50.0) -> TwoPortNetwork:
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    z = np.broadcast_to(np.asarray(z, dtype=complex), freqs.shape)
    one = np.ones_like(z)
    return from_representation(freqs, _pack(one, z, 0 * z, one), "ABCD", z0, "series")


def shunt_admittance(freqs, y, z0=50.0) -> TwoPortNetwork:
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    y = np.broadcast_to(np.asarray(y, dtype=complex), freqs.shape)
    one = np.ones_like(y)
    return from_representation(freqs, _pack(one, 0 * y, y, one), "ABCD", z0, "shunt")


def attenuator(freqs, loss_db, z0=50.0) -> TwoPortNetwork:
    """Matched attenuator with ``|S21| = |S12| = 10**(-loss_db/20)``."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    s = np.zeros((len(freqs), 2, 2), dtype=complex)
    s[:, 0, 1] = s[:, 1, 0] = 10 ** (-np.asarray(loss_db, dtype=float) / 20)
    return TwoPortNetwork(freqs, s, z0, f"{loss_db} dB pad")


def _check_compatible(a: TwoPortNetwork, b: TwoPortNetwork):
    if a.z0 != b.z0:
        raise AnalysisError(f"reference impedances differ: {a.z0} vs {b.z0} ohm")
    if a.freqs[0] > b.freqs[-1] or b.freqs[0] > a.freqs[-1]:
        raise AnalysisError("frequency grids are disjoint")
    if len(a.freqs) != len(b.freqs) or not np.array_equal(a.freqs, b.freqs):
        raise AnalysisError(
            "frequency grids differ; resample both networks onto a common grid first"
        )


def cascade(a: TwoPortNetwork, b: TwoPortNetwork, label=None) -> TwoPortNetwork:
    """Connect port 2 of ``a`` to port 1 of ``b``."""
    _check_compatible(a, b)
    abcd = convert(a, "ABCD") @ convert(b, "ABCD")
    s = abcd_to_s(abcd, a.z0, a.freqs)
    return TwoPortNetwork(a.freqs, s, a.z0, label if label is not None else f"{a.label}*{b.label}")


def deembed_left(measured: TwoPortNetwork, fixture: TwoPortNetwork) -> TwoPortNetwork:
    """Remove ``fixture`` from the input side: ABCD(fixture)^-1 @ ABCD(measured)."""
    _check_compatible(measured, fixture)
    inv = _inv(convert(fixture, "ABCD"), fixture.freqs, "fixture ABCD matrix")
    abcd = inv @ convert(measured, "ABCD")
    return measured.with_s(abcd_to_s(abcd, measured.z0, measured.freqs))


def deembed_right(measured: TwoPortNetwork, fixture: TwoPortNetwork) -> TwoPortNetwork:
    """Remove ``fixture`` from the output side: ABCD(measured) @ ABCD(fixture)^-1."""
    _check_compatible(measured, fixture)
    inv = _inv(convert(fixture, "ABCD"), fixture.freqs, "fixture ABCD matrix")
    abcd = convert(measured, "ABCD") @ inv
    return measured.with_s(abcd_to_s(abcd, measured.z0, measured.freqs))


def at_frequency(net: TwoPortNetwork, f: float) -> np.ndarray:
    """Linearly interpolate the S matrix at ``f`` (real and imaginary parts separately)."""
    return resample(net, [f]).s[0].copy()


def resample(net: TwoPortNetwork, freqs) -> TwoPortNetwork:
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    lo, hi = net.freqs[0], net.freqs[-1]
    if np.any(freqs < lo) or np.any(freqs > hi):
        raise AnalysisError(
            f"frequency outside network range [{lo:.12g}, {hi:.12g}] Hz; no extrapolation"
        )
    out = np.empty((len(freqs), 2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            out[:, i, j] = np.interp(freqs, net.freqs, net.s[:, i, j].real) + 1j * np.interp(
                freqs, net.freqs, net.s[:, i, j].imag
            )
    return TwoPortNetwork(freqs, out, net.z0, net.label)


def common_grid(*grids) -> np.ndarray:
    """Points of the first grid inside the intersection range of all grids."""
    lo = max(g[0] for g in grids)
    hi = min(g[-1] for g in grids)
    if lo > hi:
        raise AnalysisError("frequency grids do not overlap")
    first = np.asarray(grids[0], dtype=float)
    return first[(first >= lo) & (first <= hi)]


def align(a: TwoPortNetwork, b: TwoPortNetwork):
    """Resample both networks onto ``a``'s grid points inside the overlap."""
    grid = common_grid(a.freqs, b.freqs)
    return resample(a, grid), resample(b, grid)


@dataclass(frozen=True, eq=False)
class ConsistencyReport:
    """Per-frequency pass flags plus the worst-case margin.

    For passivity the margin is ``sigma_max - 1``; for reciprocity it is
    ``|S12 - S21| / max|S|``.  In both cases larger is worse.
    """

    ok: np.ndarray
    margins: np.ndarray
    worst_margin: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "worst_margin", float(np.max(self.margins)))

    @property
    def passed(self) -> bool:
        return bool(np.all(self.ok))


def check_passivity(net: TwoPortNetwork, tol: float = PASSIVITY_TOL) -> ConsistencyReport:
    sigma = np.linalg.svd(net.s, compute_uv=False)[:, 0]
    margins = sigma - 1.0
    return ConsistencyReport(margins <= tol, margins)


def check_reciprocity(net: TwoPortNetwork, tol: float = PASSIVITY_TOL) -> ConsistencyReport:
    scale = np.max(np.abs(net.s), axis=(1, 2))
    asym = np.abs(net.s12 - net.s21)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(scale > 0, asym / np.where(scale > 0, scale, 1.0), 0.0)
    return ConsistencyReport(asym <= tol * scale, rel)


def renormalize(net: TwoPortNetwork, z0_new: float) -> TwoPortNetwork:
    """Re-reference S to a new real impedance.

    Uses S' = (I - rho S)^-1 (S - rho I) with rho = (z0_new - z0)/(z0_new + z0),
    which equals the Z-parameter route wherever Z exists and also handles
    series elements that have no Z matrix.
    """
    if not z0_new > 0:
        raise ValueError(f"reference impedance must be positive, got {z0_new}")
    rho = (z0_new - net.z0) / (z0_new + net.z0)
    s = net.s
    s_new = _inv(_EYE - rho * s, net.freqs, "(I - rho S) in renormalization") @ (s - rho * _EYE)
    return TwoPortNetwork(net.freqs, s_new, z0_new, net.label)
