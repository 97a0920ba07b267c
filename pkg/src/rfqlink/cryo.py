"""Cryogenic helpers: constant-current-density bias solving and passive L/Q/k extraction.

Bias tables are plain measured transfer characteristics; there is no device
model.  Back-gate voltages retuned at low temperature are found by inverting
the piecewise-linear interpolant of the table.

Inductance and Q use the series-branch (Z-parameter) convention:
``L = Im(Z_ii)/omega`` and ``Q = Im(Z_ii)/Re(Z_ii)``.  A Y-based definition
(``-1/(omega Im(Y_ii))``) gives different numbers whenever the other port
is not open; it is not used here.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AnalysisError
from .network import TwoPortNetwork, align, convert, from_representation


@dataclass(frozen=True, eq=False)
class IVTable:
    """Drain current versus back-gate voltage at fixed V_GS, V_DS and temperature.

    p-type tables carry signed (negative) currents and back-gate voltages;
    monotonicity is checked on ``|i_drain|``, which must grow as the
    back-gate voltage goes more negative.
    """

    v_backgate: np.ndarray
    i_drain: np.ndarray
    v_gs: float = 0.0
    v_ds: float = 0.0
    temperature: float = 300.0
    width: float = 1.0  # um
    polarity: str = "n"

    def __post_init__(self):
        v = np.asarray(self.v_backgate, dtype=float)
        i = np.asarray(self.i_drain, dtype=float)
        if v.ndim != 1 or v.shape != i.shape:
            raise ValueError("v_backgate and i_drain must be 1-D and of equal length")
        if len(v) < 2:
            raise ValueError("IV table needs at least 2 samples")
        if np.any(np.diff(v) <= 0):
            raise ValueError("v_backgate must be strictly increasing")
        if not self.width > 0:
            raise ValueError(f"gate width must be positive, got {self.width}")
        pol = str(self.polarity).lower()
        if pol not in ("n", "p"):
            raise ValueError(f"polarity must be 'n' or 'p', got {self.polarity!r}")
        object.__setattr__(self, "v_backgate", v)
        object.__setattr__(self, "i_drain", i)
        object.__setattr__(self, "polarity", pol)

    def current_magnitude(self) -> np.ndarray:
        return np.abs(self.i_drain)

    def interp_current(self, v) -> float:
        """Signed drain current (A) at back-gate voltage ``v``."""
        return float(np.interp(v, self.v_backgate, self.i_drain))


def _check_monotone(table: IVTable):
    mag = table.current_magnitude()
    d = np.diff(mag)
    if table.polarity == "n" and not np.all(d > 0):
        raise AnalysisError("non-monotone IV table: n-type |I_D| must increase with V_BG")
    if table.polarity == "p" and not np.all(d < 0):
        raise AnalysisError("non-monotone IV table: p-type |I_D| must increase as V_BG decreases")


def solve_backgate(table: IVTable, j_target: float) -> float:
    """Back-gate voltage giving current density ``j_target`` (mA/um).

    The target current ``j_target * width`` is matched against the
    piecewise-linear table; within the bracketing segment the linear
    interpolant is inverted in closed form.
    """
    if not j_target > 0:
        raise ValueError(f"target current density must be positive, got {j_target}")
    _check_monotone(table)
    target = j_target * table.width * 1e-3  # A
    mag = table.current_magnitude()
    v = table.v_backgate
    if table.polarity == "p":
        # make |I| increasing along the arrays
        mag, v = mag[::-1], v[::-1]
    if not mag[0] <= target <= mag[-1]:
        raise AnalysisError(
            f"bias unreachable: target {target * 1e3:.6g} mA outside table range "
            f"[{mag[0] * 1e3:.6g}, {mag[-1] * 1e3:.6g}] mA"
        )
    hits = np.nonzero(mag == target)[0]
    if len(hits):
        return float(v[hits[0]])
    k = int(np.searchsorted(mag, target)) - 1
    frac = (target - mag[k]) / (mag[k + 1] - mag[k])
    return float(v[k] + frac * (v[k + 1] - v[k]))


def current_budget(v_dd: float, p_dc_mw: float) -> float:
    """Total supply current in mA for power ``p_dc_mw`` (mW) at ``v_dd`` (V)."""
    if not v_dd > 0 or not p_dc_mw > 0:
        raise ValueError("supply voltage and power must be positive")
    return p_dc_mw / v_dd


def density(i_ma: float, width_um: float) -> float:
    """Current density in mA/um."""
    if not i_ma > 0 or not width_um > 0:
        raise ValueError("current and width must be positive")
    return i_ma / width_um


@dataclass(frozen=True)
class BiasPoint:
    v_dd: float
    v_ds: float
    j_target: float
    p_dc: float
    v_backgate_n: float | None = None
    v_backgate_p: float | None = None

    def __post_init__(self):
        if not self.j_target > 0:
            raise ValueError("target current density must be positive")


def bias_point(v_dd: float, j_target: float, p_dc: float,
               n_table: IVTable | None = None, p_table: IVTable | None = None) -> BiasPoint:
    """Bias point with ``V_DS = V_DD/2`` and back-gates solved from the given tables."""
    vn = solve_backgate(n_table, j_target) if n_table is not None else None
    vp = solve_backgate(p_table, j_target) if p_table is not None else None
    return BiasPoint(v_dd, v_dd / 2, j_target, p_dc, vn, vp)


@dataclass(frozen=True)
class CoupledInductorParams:
    freq: float
    l1: float
    l2: float
    m: float
    k: float | None
    q1: float
    q2: float


def coupled_inductor_network(freqs, l1, l2, m, r1=0.0, r2=0.0, z0=50.0, label="") -> TwoPortNetwork:
    """Two-port of coupled inductors with series resistances, built from Z = R + j*omega*L."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    w = 2 * np.pi * freqs
    z = np.empty((len(freqs), 2, 2), dtype=complex)
    z[:, 0, 0] = r1 + 1j * w * l1
    z[:, 1, 1] = r2 + 1j * w * l2
    z[:, 0, 1] = z[:, 1, 0] = 1j * w * m
    return from_representation(freqs, z, "Z", z0, label)


def extract_lqk(net: TwoPortNetwork) -> list[CoupledInductorParams]:
    """Self/mutual inductance, coupling factor and Q at each frequency.

    ``k`` is None where either self-inductance is non-positive.
    """
    if np.any(net.freqs <= 0):
        raise AnalysisError("L/Q extraction undefined at zero frequency")
    z = convert(net, "Z")
    w = 2 * np.pi * net.freqs
    out = []
    with np.errstate(divide="ignore", invalid="ignore"):
        for idx, f in enumerate(net.freqs):
            zz = z[idx]
            l1 = zz[0, 0].imag / w[idx]
            l2 = zz[1, 1].imag / w[idx]
            m = zz[1, 0].imag / w[idx]
            k = float(m / np.sqrt(l1 * l2)) if l1 > 0 and l2 > 0 else None
            q1 = _quality(zz[0, 0])
            q2 = _quality(zz[1, 1])
            out.append(CoupledInductorParams(float(f), float(l1), float(l2), float(m), k, q1, q2))
    return out


def _quality(z) -> float:
    if z.real == 0:
        return float(np.copysign(np.inf, z.imag)) if z.imag != 0 else float("nan")
    return float(z.imag / z.real)


@dataclass(frozen=True, eq=False)
class PassiveComparison:
    freqs: np.ndarray
    dq1_pct: np.ndarray
    dq2_pct: np.ndarray
    dl1_pct: np.ndarray
    dl2_pct: np.ndarray
    dk: np.ndarray
    q_increased: bool
    l_decreased: bool

    def rows(self):
        return zip(self.freqs, self.dq1_pct, self.dq2_pct, self.dl1_pct, self.dl2_pct, self.dk)


def _pct(new, old):
    return 100.0 * (new - old) / old


def compare_passive(rt: TwoPortNetwork, ct: TwoPortNetwork) -> PassiveComparison:
    """Percentage change of Q and L (and absolute change of k) from RT to CT.

    Both networks are evaluated on the RT grid points inside the common
    frequency range; the CT data is linearly interpolated there.
    """
    try:
        rt, ct = align(rt, ct)
    except AnalysisError:
        raise AnalysisError("RT and CT networks have no common frequency range") from None
    a = extract_lqk(rt)
    b = extract_lqk(ct)

    def col(params, name):
        return np.array([np.nan if getattr(p, name) is None else getattr(p, name) for p in params])

    dq1 = _pct(col(b, "q1"), col(a, "q1"))
    dq2 = _pct(col(b, "q2"), col(a, "q2"))
    dl1 = _pct(col(b, "l1"), col(a, "l1"))
    dl2 = _pct(col(b, "l2"), col(a, "l2"))
    dk = col(b, "k") - col(a, "k")
    with np.errstate(invalid="ignore"):
        q_med = np.nanmedian(np.concatenate([dq1, dq2]))
        l_med = np.nanmedian(np.concatenate([dl1, dl2]))
    return PassiveComparison(rt.freqs, dq1, dq2, dl1, dl2, dk,
                             bool(q_med > 0), bool(l_med < 0))
