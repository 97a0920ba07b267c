"""Command-line entry point: ``rfqlink <subcommand> ...``.

Exit codes: 0 success, 1 input/parse error, 2 analysis error.  Primary
output goes to stdout (or ``-o``); ``--json`` additionally writes a
machine-readable report with sorted keys.  Nothing is written unless the
command succeeds.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .constants import T0
from .csvio import format_csv, read_csv, read_xy
from .errors import InputError, RFQLinkError
from .network import align, cascade, convert, deembed_left, deembed_right, RepresentationKind
from .touchstone import from_network, read_touchstone, serialize_touchstone, to_network

T0_ENV = "RFQLINK_T0"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


class _Run:
    """Collects what one subcommand read, produced and warned about."""

    def __init__(self):
        self.inputs = []
        self.warnings = []
        self.results = {}

    def track(self, path):
        path = Path(path)
        try:
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
        except FileNotFoundError:
            raise InputError(f"{path}: no such file") from None
        except OSError as exc:
            raise InputError(f"{path}: {exc.strerror}") from None
        self.inputs.append({"path": str(path), "sha256": digest})
        return path

    def network(self, path):
        return to_network(read_touchstone(self.track(path)), label=Path(path).stem)


def _reference_temperature():
    raw = os.environ.get(T0_ENV)
    if raw is None:
        return T0
    try:
        value = float(raw)
    except ValueError:
        raise InputError(f"{T0_ENV}={raw!r} is not a number") from None
    if not value > 0:
        raise InputError(f"{T0_ENV} must be positive")
    return value


def _touchstone_out(net, args):
    doc = from_network(net, value_format=args.format, freq_unit="GHz",
                       header_comments=[f" {net.label}"] if net.label else ())
    return serialize_touchstone(doc)


def cmd_convert(args, run):
    net = run.network(args.input)
    kind = RepresentationKind.parse(args.to)
    mats = convert(net, kind)
    name = kind.value.lower()
    header = ["frequency_hz"]
    for i in (1, 2):
        for j in (1, 2):
            header += [f"{name}{i}{j}_re", f"{name}{i}{j}_im"]
    rows = []
    for f, m in zip(net.freqs, mats):
        row = [f]
        for i in range(2):
            for j in range(2):
                row += [m[i, j].real, m[i, j].imag]
        rows.append(row)
    run.results = {"kind": kind.value, "points": len(net), "z0": net.z0}
    return format_csv(header, rows)


def _binary(a, b, resample, run):
    if resample and (len(a) != len(b) or not np.array_equal(a.freqs, b.freqs)):
        a, b = align(a, b)
        run.warnings.append(f"resampled onto {len(a)} common points by linear interpolation")
    return a, b


def cmd_cascade(args, run):
    a = run.network(args.first)
    b = run.network(args.second)
    a, b = _binary(a, b, args.resample, run)
    net = cascade(a, b)
    run.results = {"points": len(net), "z0": net.z0}
    return _touchstone_out(net, args)


def cmd_deembed(args, run):
    if args.left is None and args.right is None:
        raise InputError("deembed: give --left and/or --right fixture")
    meas = run.network(args.measured)
    if args.left is not None:
        fix = run.network(args.left)
        meas, fix = _binary(meas, fix, args.resample, run)
        meas = deembed_left(meas, fix)
    if args.right is not None:
        fix = run.network(args.right)
        meas, fix = _binary(meas, fix, args.resample, run)
        meas = deembed_right(meas, fix)
    run.results = {"points": len(meas), "z0": meas.z0}
    return _touchstone_out(meas, args)


def cmd_nf_extract(args, run):
    from .noise import GainSpectrum, NoiseDensitySpectrum, coldsource_extract

    def spectrum(path, cls, label):
        f, v = read_xy(run.track(path))
        try:
            return cls(f, v, label)
        except RFQLinkError:
            raise
        except ValueError as exc:
            raise InputError(f"{path}: {exc}") from None

    nf = coldsource_extract(
        spectrum(args.casc_gain, GainSpectrum, "cascade gain"),
        spectrum(args.casc_onpd, NoiseDensitySpectrum, "cascade ONPD"),
        spectrum(args.dc_gain, GainSpectrum, "downconverter gain"),
        spectrum(args.dc_onpd, NoiseDensitySpectrum, "downconverter ONPD"),
        t_source=args.tsource,
        t0=_reference_temperature(),
    )
    run.warnings.extend(nf.warnings)
    f_min, nf_min = nf.minimum() if np.any(np.isfinite(nf.nf_db)) else (None, None)
    run.results = {
        "t_source_k": args.tsource,
        "t0_k": _reference_temperature(),
        "nf_min_db": nf_min,
        "f_at_nf_min_hz": f_min,
        "frequency_hz": nf.freqs.tolist(),
        "nf_db": nf.nf_db.tolist(),
        "t_dut_k": nf.t_dut.tolist(),
        "g_dut_db": nf.gain_db.tolist(),
    }
    rows = zip(nf.freqs, nf.nf_db, nf.t_dut, nf.gain_db)
    return format_csv(["frequency_hz", "nf_db", "t_dut_k", "g_dut_db"], rows)


def _key_value_lines(d):
    return "".join(f"{k},{_plain(v)}\n" for k, v in d.items())


def _plain(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def cmd_band(args, run):
    from .metrics import GainCurve, band_3db

    f, g = read_xy(run.track(args.curve))
    report = band_3db(GainCurve(f, g), args.delta)
    run.results = report.as_dict()
    return _key_value_lines(report.as_dict())


def cmd_p1db(args, run):
    from .metrics import PowerSweep, p1db, small_signal_gain

    p, g = read_xy(run.track(args.sweep))
    sweep = PowerSweep(p, g)
    value = p1db(sweep)
    run.results = {"ip1db_dbm": value, "small_signal_gain_db": small_signal_gain(sweep)}
    return _key_value_lines(run.results)


def cmd_passives(args, run):
    from .cryo import compare_passive, extract_lqk

    rt = run.network(args.rt)
    if args.compare is None:
        params = extract_lqk(rt)
        rows = [(p.freq, p.l1, p.l2, p.m, p.k, p.q1, p.q2) for p in params]
        run.results = {
            "frequency_hz": [p.freq for p in params],
            "l1_h": [p.l1 for p in params],
            "l2_h": [p.l2 for p in params],
            "m_h": [p.m for p in params],
            "k": [p.k for p in params],
            "q1": [p.q1 for p in params],
            "q2": [p.q2 for p in params],
        }
        run.warnings.extend(
            f"non-positive self-inductance at f = {p.freq:.12g} Hz; k omitted"
            for p in params if p.k is None
        )
        return format_csv(["frequency_hz", "l1_h", "l2_h", "m_h", "k", "q1", "q2"], rows)
    ct = run.network(args.compare)
    cmp = compare_passive(rt, ct)
    run.results = {
        "q_increased": cmp.q_increased,
        "l_decreased": cmp.l_decreased,
        "frequency_hz": cmp.freqs.tolist(),
        "dq1_pct": cmp.dq1_pct.tolist(),
        "dq2_pct": cmp.dq2_pct.tolist(),
        "dl1_pct": cmp.dl1_pct.tolist(),
        "dl2_pct": cmp.dl2_pct.tolist(),
        "dk": cmp.dk.tolist(),
    }
    comments = [f"q_increased={_plain(cmp.q_increased)}", f"l_decreased={_plain(cmp.l_decreased)}"]
    return format_csv(["frequency_hz", "dq1_pct", "dq2_pct", "dl1_pct", "dl2_pct", "dk"],
                      cmp.rows(), comments)


def cmd_bias(args, run):
    from .cryo import IVTable, solve_backgate

    table = read_csv(run.track(args.table))
    meta = table.metadata
    cols = [c.strip().lower() for c in table.columns]
    iv = cols.index("v_backgate_v") if "v_backgate_v" in cols else 0
    ii = cols.index("i_drain_a") if "i_drain_a" in cols else 1

    def meta_float(key, default):
        if key not in meta:
            return default
        try:
            return float(meta[key])
        except ValueError:
            raise InputError(f"{args.table}: metadata {key}={meta[key]!r} is not a number") from None

    width = args.width if args.width is not None else meta_float("width_um", None)
    if width is None:
        raise InputError(f"{args.table}: gate width missing (add '# width_um=...' or --width)")
    try:
        t = IVTable(table.column(iv), table.column(ii),
                    v_gs=meta_float("v_gs", 0.0), v_ds=meta_float("v_ds", 0.0),
                    temperature=meta_float("temperature_k", float("nan")),
                    width=width, polarity=meta.get("polarity", "n"))
    except RFQLinkError:
        raise
    except ValueError as exc:
        raise InputError(f"{args.table}: {exc}") from None
    v = solve_backgate(t, args.j)
    run.results = {
        "v_backgate_v": v,
        "j_target_ma_per_um": args.j,
        "i_target_ma": args.j * t.width,
        "polarity": t.polarity,
        "temperature_k": t.temperature,
        "width_um": t.width,
    }
    return _key_value_lines(run.results)


def cmd_budget(args, run):
    from .metrics import GainCurve
    from .qubitlink import check_link, load_card, load_spec

    card = load_card(run.track(args.card).read_text(encoding="utf-8"))
    spec = load_spec(run.track(args.spec).read_text(encoding="utf-8"))
    curve = None
    if args.gain_curve is not None:
        curve = GainCurve(*read_xy(run.track(args.gain_curve)))
    report = check_link(card, spec, curve)
    run.results = report.as_dict()
    run.results["f_larmor_hz"] = spec.f_larmor
    run.results["e_z_mev"] = spec.e_z
    lines = ["criterion,required,actual,margin,unit,pass"]
    for c in report.criteria:
        req = "/".join(_plain(float(x)) for x in c.required) if isinstance(c.required, list) else _plain(float(c.required))
        act = "/".join(_plain(float(x)) for x in c.actual) if isinstance(c.actual, list) else _plain(float(c.actual))
        lines.append(f"{c.name},{req},{act},{_plain(float(c.margin))},{c.unit},{_plain(c.passed)}")
    lines.append(f"overall,,,,,{_plain(report.passed)}")
    return "\n".join(lines) + "\n"


def build_parser():
    p = _Parser(prog="rfqlink", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rfqlink {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(func=func)
        sp.add_argument("-o", "--output", help="write primary output here instead of stdout")
        sp.add_argument("--json", dest="json_path", metavar="PATH", help="write an analysis report")
        return sp

    sp = add("convert", cmd_convert, "convert S-parameters to Z/Y/ABCD/T (CSV)")
    sp.add_argument("input")
    sp.add_argument("--to", required=True, type=str.lower, choices=["s", "z", "y", "abcd", "t"])

    for name, func, help in (("cascade", cmd_cascade, "cascade two networks (Touchstone)"),
                             ("deembed", cmd_deembed, "de-embed fixtures (Touchstone)")):
        sp = add(name, func, help)
        if name == "cascade":
            sp.add_argument("first")
            sp.add_argument("second")
        else:
            sp.add_argument("--left", metavar="FIXTURE")
            sp.add_argument("--right", metavar="FIXTURE")
            sp.add_argument("measured")
        sp.add_argument("--resample", action="store_true",
                        help="interpolate onto the common frequency range when grids differ")
        sp.add_argument("--format", default="RI", type=str.upper, choices=["RI", "MA", "DB"])

    sp = add("nf-extract", cmd_nf_extract, "cold-source DUT noise figure (CSV)")
    sp.add_argument("--casc-gain", required=True)
    sp.add_argument("--casc-onpd", required=True)
    sp.add_argument("--dc-gain", required=True)
    sp.add_argument("--dc-onpd", required=True)
    sp.add_argument("--tsource", type=float, default=T0, help="termination temperature, K")

    sp = add("band", cmd_band, "peak frequency and 3 dB band of a gain curve")
    sp.add_argument("curve")
    sp.add_argument("--delta", type=float, default=3.0)

    sp = add("p1db", cmd_p1db, "input-referred 1 dB compression point")
    sp.add_argument("sweep")

    sp = add("passives", cmd_passives, "L/Q/k extraction, optionally RT vs CT comparison")
    sp.add_argument("rt")
    sp.add_argument("--compare", metavar="CT")

    sp = add("bias", cmd_bias, "solve back-gate voltage for a target current density")
    sp.add_argument("table")
    sp.add_argument("--j", type=float, required=True, help="target current density, mA/um")
    sp.add_argument("--width", type=float, help="gate width in um (overrides the table)")

    sp = add("budget", cmd_budget, "check an amplifier card against qubit drive requirements")
    sp.add_argument("--card", required=True)
    sp.add_argument("--spec", required=True)
    sp.add_argument("--gain-curve", help="measured gain CSV; use gain at f_L instead of f0")
    return p


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def make_report(command, run, timestamp=None):
    return {
        "tool_version": __version__,
        "timestamp": timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "command": command,
        "inputs": run.inputs,
        "results": _jsonable(run.results),
        "warnings": list(run.warnings),
    }


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    state = _Run()
    try:
        args = build_parser().parse_args(argv)
        text = args.func(args, state)
        payload = None
        if args.json_path:
            payload = json.dumps(make_report(argv, state), sort_keys=True, indent=2) + "\n"
    except InputError as exc:
        print(f"rfqlink: error: {exc}", file=stderr)
        return 1
    except OSError as exc:
        print(f"rfqlink: error: {exc}", file=stderr)
        return 1
    except ValueError as exc:
        print(f"rfqlink: error: {exc}", file=stderr)
        return 2

    try:
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8", newline="\n")
        else:
            stdout.write(text)
        if payload is not None:
            Path(args.json_path).write_text(payload, encoding="utf-8", newline="\n")
    except OSError as exc:
        print(f"rfqlink: error: {exc}", file=stderr)
        return 1
    for w in state.warnings:
        print(f"rfqlink: warning: {w}", file=stderr)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
