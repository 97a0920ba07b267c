import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from _oracles import coldsource_forward, square_law_backgate, square_law_current
from rfqlink.cli import run
from rfqlink.cryo import coupled_inductor_network
from rfqlink.csvio import format_csv, parse_csv
from rfqlink.errors import InputError
from rfqlink.network import attenuator, series_impedance, thru
from rfqlink.touchstone import from_network, parse_touchstone, to_network, write_touchstone

F = np.array([55e9, 57e9, 60e9, 62e9])

CARD = """f0 = 59e9
s21_db = 15
f_low = 52.5e9
f_high = 67.5e9
nf_min_db = 7.1
ip1db_dbm = -21.8
p_dc_mw = 2.16
v_dd = 0.88
temperature = 2
"""
SPEC = "f_larmor = 60e9\nf_rabi = 60e6\nv_gate = 10e-3\nmin_gain_db = 10\nmax_nf_db = 12\n"


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def write_net(path, net, fmt="MA"):
    write_touchstone(path, from_network(net, fmt, "GHz"))
    return path


@pytest.fixture
def nets(tmp_path):
    x = series_impedance(F, 20 + 35j) ** attenuator(F, 2.0)
    return {
        "thru": write_net(tmp_path / "thru.s2p", thru(F)),
        "x": write_net(tmp_path / "x.s2p", x),
        "pad": write_net(tmp_path / "pad.s2p", attenuator(F, 3.0)),
        "net_x": x,
    }


def test_cascade_with_thru(nets, tmp_path):
    code, out, err = cli("cascade", nets["thru"], nets["x"])
    assert code == 0, err
    got = to_network(parse_touchstone(out))
    np.testing.assert_allclose(got.s, nets["net_x"].s, atol=1e-11)
    np.testing.assert_array_equal(got.freqs, F)


def test_deembed_left_and_right(nets, tmp_path):
    meas = write_net(tmp_path / "meas.s2p", attenuator(F, 3.0) ** nets["net_x"] ** attenuator(F, 3.0))
    code, out, err = cli("deembed", "--left", nets["pad"], "--right", nets["pad"], meas)
    assert code == 0, err
    np.testing.assert_allclose(to_network(parse_touchstone(out)).s, nets["net_x"].s, atol=1e-10)


def test_deembed_needs_fixture(nets):
    code, _, err = cli("deembed", nets["x"])
    assert code == 1 and "--left" in err


def test_cascade_grid_mismatch_and_resample(nets, tmp_path):
    fine = np.linspace(50e9, 65e9, 31)
    other = write_net(tmp_path / "fine.s2p", thru(fine))
    code, out, err = cli("cascade", nets["x"], other)
    assert code == 2 and "frequency grids differ" in err and out == ""
    code, out, err = cli("cascade", nets["x"], other, "--resample")
    assert code == 0
    assert "resampled" in err
    np.testing.assert_allclose(to_network(parse_touchstone(out)).s, nets["net_x"].s, atol=1e-11)


def test_convert_abcd(nets):
    code, out, _ = cli("convert", nets["x"], "--to", "abcd")
    assert code == 0
    table = parse_csv(out)
    assert table.columns[:3] == ["frequency_hz", "abcd11_re", "abcd11_im"]
    row = table.data[0]
    abcd = np.array([[row[1] + 1j * row[2], row[3] + 1j * row[4]],
                     [row[5] + 1j * row[6], row[7] + 1j * row[8]]])
    # series Z then matched pad: ABCD = [[1, Z], [0, 1]] @ pad
    a = 10 ** (-2 / 20)
    pad = np.array([[(1 + a * a) / (2 * a), 50 * (1 - a * a) / (2 * a)],
                    [(1 - a * a) / (2 * a * 50), (1 + a * a) / (2 * a)]])
    np.testing.assert_allclose(abcd, np.array([[1, 20 + 35j], [0, 1]]) @ pad, rtol=1e-10)


def test_convert_singular_is_analysis_error(tmp_path):
    p = tmp_path / "open.s2p"
    p.write_text("# GHz S RI R 50\n1 1 0 0 0 0 0 1 0\n2 1 0 0 0 0 0 1 0\n")
    code, _, err = cli("convert", p, "--to", "z")
    assert code == 2 and "singular" in err and "1000000000" in err


def test_parse_error_exit_1(tmp_path):
    p = tmp_path / "bad.s2p"
    p.write_text("# GHz S RI R 50\n1 0 0 0 0 0 0 0 x\n")
    code, out, err = cli("convert", p, "--to", "z")
    assert code == 1
    assert "line 2" in err and out == ""
    code, _, err = cli("convert", tmp_path / "missing.s2p", "--to", "z")
    assert code == 1 and "no such file" in err
    code, _, err = cli("nonsense")
    assert code == 1


def _write_xy(path, header, x, y):
    path.write_text(format_csv(header, zip(x, y)))
    return path


def test_nf_extract_forward_model(tmp_path):
    f = np.linspace(52.5e9, 67.5e9, 16)
    g_casc, onpd_casc, g_dc, onpd_dc = coldsource_forward(1000.0, 10.0, 500.0, 1000.0)
    ones = np.ones_like(f)
    args = [
        "nf-extract",
        "--casc-gain", _write_xy(tmp_path / "g1.csv", ["frequency_hz", "gain_db"], f, 10 * np.log10(g_casc) * ones),
        "--casc-onpd", _write_xy(tmp_path / "n1.csv", ["frequency_hz", "onpd_w_per_hz"], f, onpd_casc * ones),
        "--dc-gain", _write_xy(tmp_path / "g2.csv", ["frequency_hz", "gain_db"], f, 10 * np.log10(g_dc) * ones),
        "--dc-onpd", _write_xy(tmp_path / "n2.csv", ["frequency_hz", "onpd_w_per_hz"], f, onpd_dc * ones),
        "--json", tmp_path / "r.json",
    ]
    code, out, err = cli(*args)
    assert code == 0, err
    table = parse_csv(out)
    np.testing.assert_allclose(table.column(1), 10 * math.log10(1 + 1000 / 290), atol=1e-9)
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["command"][0] == "nf-extract"
    assert len(report["inputs"]) == 4
    assert report["results"]["nf_min_db"] == pytest.approx(6.481917124002928, abs=1e-9)


def test_nf_extract_t0_env(tmp_path, monkeypatch):
    f = np.array([60e9, 61e9])
    g_casc, onpd_casc, g_dc, onpd_dc = coldsource_forward(1000.0, 10.0, 500.0, 1000.0)
    ones = np.ones(2)
    files = [
        _write_xy(tmp_path / "g1.csv", ["f", "g"], f, 10 * np.log10(g_casc) * ones),
        _write_xy(tmp_path / "n1.csv", ["f", "n"], f, onpd_casc * ones),
        _write_xy(tmp_path / "g2.csv", ["f", "g"], f, 10 * np.log10(g_dc) * ones),
        _write_xy(tmp_path / "n2.csv", ["f", "n"], f, onpd_dc * ones),
    ]
    monkeypatch.setenv("RFQLINK_T0", "300")
    code, out, _ = cli("nf-extract", "--casc-gain", files[0], "--casc-onpd", files[1],
                       "--dc-gain", files[2], "--dc-onpd", files[3])
    assert code == 0
    # T_DUT itself does not depend on the reference; only the NF does
    assert parse_csv(out).column(1)[0] == pytest.approx(10 * math.log10(1 + 1000 / 300), abs=1e-9)
    monkeypatch.setenv("RFQLINK_T0", "warm")
    code, _, err = cli("nf-extract", "--casc-gain", files[0], "--casc-onpd", files[1],
                       "--dc-gain", files[2], "--dc-onpd", files[3])
    assert code == 1 and "RFQLINK_T0" in err


def test_band_and_p1db(tmp_path):
    f = np.linspace(50e9, 70e9, 1001)
    g = 15 - 3 * ((f - 59e9) / np.where(f < 59e9, 6.5e9, 8.5e9)) ** 2
    code, out, _ = cli("band", _write_xy(tmp_path / "s21.csv", ["frequency_hz", "s21_db"], f, g))
    assert code == 0
    vals = dict(line.split(",") for line in out.strip().splitlines())
    assert float(vals["f_low_hz"]) == pytest.approx(52.5e9, abs=20e6)
    assert float(vals["f_high_hz"]) == pytest.approx(67.5e9, abs=20e6)
    assert vals["low_clipped"] == "false"

    p = np.arange(-50, -5, 0.5)
    pc = -21.8 - 10 * math.log10(10**0.1 - 1)
    gt = 9.9 - 10 * np.log10(1 + 10 ** ((p - pc) / 10))
    code, out, _ = cli("p1db", _write_xy(tmp_path / "sweep.csv", ["pin_dbm", "gt_db"], p, gt))
    assert code == 0
    assert float(out.splitlines()[0].split(",")[1]) == pytest.approx(-21.8, abs=0.05)

    flat = _write_xy(tmp_path / "flat.csv", ["pin_dbm", "gt_db"], p, np.full(len(p), 9.9))
    code, out, err = cli("p1db", flat, "--json", tmp_path / "never.json")
    assert code == 2 and "P1dB not reached" in err and out == ""
    assert not (tmp_path / "never.json").exists()


def test_passives(tmp_path):
    f = np.linspace(40e9, 70e9, 7)
    rt = write_net(tmp_path / "rt.s2p", coupled_inductor_network(f, 100e-12, 100e-12, 70e-12, 3.0, 3.0), "RI")
    ct = write_net(tmp_path / "ct.s2p", coupled_inductor_network(f, 90e-12, 90e-12, 63e-12, 1.8, 1.8), "RI")
    code, out, _ = cli("passives", rt)
    assert code == 0
    table = parse_csv(out)
    np.testing.assert_allclose(table.column(1), 100e-12, rtol=1e-9)
    np.testing.assert_allclose(table.column(4), 0.7, rtol=1e-9)
    code, out, _ = cli("passives", rt, "--compare", ct, "--json", tmp_path / "p.json")
    assert code == 0
    table = parse_csv(out)
    assert table.metadata == {"q_increased": "true", "l_decreased": "true"}
    np.testing.assert_allclose(table.column(1), 50.0, rtol=1e-8)
    rep = json.loads((tmp_path / "p.json").read_text())
    assert rep["results"]["q_increased"] is True


def test_bias(tmp_path):
    v = np.linspace(0, 2, 2001)
    i = square_law_current(v, 0.01, 3.9, 0.4, 0.08, 0.3)
    text = "# v_gs=0.4\n# v_ds=0.44\n# temperature_k=10\n# width_um=3.9\n# polarity=n\n"
    text += format_csv(["v_backgate_v", "i_drain_a"], zip(v, i))
    p = tmp_path / "iv.csv"
    p.write_text(text)
    code, out, err = cli("bias", p, "--j", "0.21")
    assert code == 0, err
    vals = dict(line.split(",") for line in out.strip().splitlines())
    expected = square_law_backgate(0.21 * 3.9e-3, 0.01, 3.9, 0.4, 0.08, 0.3)
    assert float(vals["v_backgate_v"]) == pytest.approx(expected, abs=1e-6)
    code, _, err = cli("bias", p, "--j", "50")
    assert code == 2 and "bias unreachable" in err
    nowidth = tmp_path / "nw.csv"
    nowidth.write_text(format_csv(["v_backgate_v", "i_drain_a"], zip(v, i)))
    code, _, err = cli("bias", nowidth, "--j", "0.21")
    assert code == 1 and "width" in err


def test_budget_reference_card(tmp_path):
    card = tmp_path / "card.txt"
    spec = tmp_path / "spec.txt"
    card.write_text(CARD)
    spec.write_text(SPEC)
    code, out, err = cli("budget", "--card", card, "--spec", spec, "--json", tmp_path / "b.json")
    assert code == 0, err
    assert out.strip().splitlines()[-1] == "overall,,,,,true"
    rep = json.loads((tmp_path / "b.json").read_text())
    assert rep["results"]["passed"] is True
    margins = {c["name"]: c["margin"] for c in rep["results"]["criteria"]}
    assert margins["gain"] == pytest.approx(5.0)
    assert margins["noise"] == pytest.approx(4.9)

    card.write_text(CARD.replace("nf_min_db = 7.1", "nf_min_db = 13"))
    code, out, _ = cli("budget", "--card", card, "--spec", spec)
    assert code == 0
    assert "noise,12,13,-1,dB,false" in out
    assert out.strip().endswith("false")


def test_budget_bad_card(tmp_path):
    card = tmp_path / "card.txt"
    card.write_text("f0 = 59e9\n")
    spec = tmp_path / "spec.txt"
    spec.write_text(SPEC)
    code, _, err = cli("budget", "--card", card, "--spec", spec)
    assert code == 1 and "AmplifierCard" in err


def test_reports_identical_except_timestamp(nets, tmp_path):
    path = tmp_path / "r.json"
    texts = []
    for _ in range(2):
        assert cli("cascade", nets["thru"], nets["x"], "--json", path)[0] == 0
        texts.append(path.read_text())
    a, b = (json.loads(t) for t in texts)
    assert a.pop("timestamp") and b.pop("timestamp")
    assert a == b
    strip = lambda t: [x for x in t.splitlines() if '"timestamp"' not in x]
    assert strip(texts[0]) == strip(texts[1])
    keys = list(json.loads(texts[0]))
    assert keys == sorted(keys)
    assert set(keys) == {"command", "inputs", "results", "timestamp", "tool_version", "warnings"}


def test_output_file_option(nets, tmp_path):
    out_path = tmp_path / "out.s2p"
    code, out, _ = cli("cascade", nets["thru"], nets["x"], "-o", out_path, "--format", "DB")
    assert code == 0 and out == ""
    assert "# GHz S DB R 50" in out_path.read_text()


def test_module_entry_point(nets):
    proc = subprocess.run([sys.executable, "-m", "rfqlink", "cascade", str(nets["thru"]), str(nets["x"])],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("! ")


def test_csv_parsing_rules():
    t = parse_csv("# a=1\nfreq,val\n1,2\n3,4\n")
    assert t.columns == ["freq", "val"] and t.metadata == {"a": "1"}
    t = parse_csv("1,2\n3,4\n")
    assert t.columns == ["col0", "col1"]
    with pytest.raises(InputError):
        parse_csv("1,2\n3\n")
    with pytest.raises(InputError):
        parse_csv("f,v\n")
    with pytest.raises(InputError):
        parse_csv("1,2\n3,x\n")
