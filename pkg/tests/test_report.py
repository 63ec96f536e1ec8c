import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rmtl.circuit import (CircuitBuilder, Netlist, PulseSource, build_cla4, build_full_adder,
                          build_xor, merge)
from rmtl.engine import SimConfig, Traces, Waveform, simulate
from rmtl.report import (ContradictoryRows, CostCoefficients, MissingCoefficient, cost_report,
                         export_csv, extract_truth_table, load_coefficients, parse_coefficients,
                         read_csv, write_csv)

from .test_engine import nandnor, xor_pulsed

KINDS = ("xor", "and", "or", "nand", "nor", "inv")


def synthetic(times, **signals):
    t = np.asarray(times, dtype=float)
    tr = Traces(times=t, read=np.ones(len(t), bool), segments=[(0, len(t))])
    for k, v in signals.items():
        tr[k] = Waveform(k, t, np.asarray(v, dtype=float))
    return tr


# --- truth tables ----------------------------------------------------------------------


def test_nandnor_table_rows():
    tr = simulate(nandnor(), SimConfig(8e-6))
    t = extract_truth_table(tr, ["IN1", "IN2", "CTL"], "OUT")
    assert [r.inputs for r in t.rows] == sorted(r.inputs for r in t.rows)
    want = {(0, 0, 0): 1, (0, 1, 0): 1, (1, 0, 0): 1, (1, 1, 0): 0,
            (0, 0, 1): 1, (0, 1, 1): 0, (1, 0, 1): 0, (1, 1, 1): 0}
    assert t.as_dict() == want


def test_nand_zero_exactly_when_both_high_and_control_low():
    tr = simulate(nandnor(), SimConfig(4e-6))
    read = tr.read
    a, b, c, o = (tr[n].values for n in ("IN1", "IN2", "CTL", "OUT"))
    sel = read & (a == 1) & (b == 1) & (c == 0)
    assert sel.any() and np.all(o[sel] == 0.0)
    assert np.all(o[read & (c == 0) & ~((a == 1) & (b == 1))] == 1.0)


def test_xor_table():
    tr = simulate(xor_pulsed(), SimConfig(4e-6))
    assert extract_truth_table(tr, ["A", "B"], "OUT").as_dict() == {
        (0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 0}


def test_constant_inputs_single_row():
    tr = simulate(build_xor(), SimConfig(2e-6))
    t = extract_truth_table(tr, ["A", "B"], "OUT")
    assert len(t.rows) == 1 and t.rows[0].inputs == (0, 0)


def test_idempotent_extraction():
    a = extract_truth_table(simulate(nandnor(), SimConfig(8e-6)), ["IN1", "IN2", "CTL"], "OUT")
    b = extract_truth_table(simulate(nandnor(), SimConfig(8e-6)), ["IN1", "IN2", "CTL"], "OUT")
    assert a == b


def test_contradictory_rows_reported():
    t = [0, 1, 2, 3, 4, 5]
    tr = synthetic(t, A=[1] * 6, OUT=[0, 0, 0, 1, 1, 1])
    tr.segments = [(0, 3), (3, 6)]
    with pytest.raises(ContradictoryRows) as exc:
        extract_truth_table(tr, ["A"], "OUT")
    assert exc.value.bits == (1,)


def test_missing_signal():
    with pytest.raises(KeyError):
        extract_truth_table(synthetic([0, 1], A=[0, 0]), ["A"], "OUT")


def test_table_formatting():
    tr = simulate(xor_pulsed(), SimConfig(2e-6))
    t = extract_truth_table(tr, ["A", "B"], "OUT")
    lines = t.to_csv().splitlines()
    assert lines[0] == "A,B,OUT,time"
    assert len(lines) == 5
    assert "OUT" in t.format().splitlines()[0]


# --- CSV ------------------------------------------------------------------------------------


def test_csv_shape(tmp_path):
    tr = synthetic(np.arange(100) * 1e-8, a=np.zeros(100), b=np.ones(100), c=np.arange(100) / 3)
    path = tmp_path / "w.csv"
    export_csv(tr, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 101
    assert all(len(line.split(",")) == 4 for line in lines)
    assert lines[0] == "time,a,b,c"


def test_csv_round_trip_exact(tmp_path):
    tr = simulate(xor_pulsed(), SimConfig(1e-6), probes=["A", "X2.vo", "X2.RC"])
    path = tmp_path / "w.csv"
    export_csv(tr, path)
    times, cols = read_csv(path)
    assert np.array_equal(times, tr.times)
    assert list(cols) == ["A", "X2.vo", "X2.RC"]
    for k in cols:
        assert np.array_equal(cols[k], tr[k].values)


def test_csv_to_stream():
    buf = io.StringIO()
    write_csv(synthetic([0.0, 1.5], x=[1, 2]), buf)
    assert buf.getvalue() == "time,x\n0.0,1.0\n1.5,2.0\n"


# --- cost model ---------------------------------------------------------------------------


def test_bundled_coefficients():
    c = load_coefficients()
    assert c.get("cmos", "xor") == (19.4, 0.42)
    assert c.get("rmtl", "xor") == (9.4, 0.18)
    assert c.get("rmtl_training", "xor") == (100.50, 33.43)


def test_xor_ratios():
    r = cost_report(build_xor(), load_coefficients())
    area, power = r.ratios
    assert area == pytest.approx(9.4 / 19.4, rel=1e-9)
    assert power == pytest.approx(0.18 / 0.42, rel=1e-9)
    assert round(area, 3) == 0.485 and round(power, 3) == 0.429
    assert "rmtl/cmos" in r.format()


def test_training_family_on_request():
    r = cost_report(build_xor(), load_coefficients(), ("rmtl_training", "cmos"))
    assert r.ratios[0] > 1


def test_empty_netlist():
    r = cost_report(Netlist(()), load_coefficients())
    assert r.totals == {"rmtl": (0.0, 0.0), "cmos": (0.0, 0.0)}
    assert r.ratios is None
    assert "n/a" in r.format()


def test_missing_coefficient():
    with pytest.raises(MissingCoefficient, match="and"):
        cost_report(build_full_adder(), load_coefficients())


def test_coefficient_parsing_errors():
    with pytest.raises(ValueError, match="line 2"):
        parse_coefficients("cmos xor 1 1\ncmos xor 1\n")
    with pytest.raises(ValueError, match="line 1"):
        parse_coefficients("cmos xor one 1\n")
    with pytest.raises(ValueError):
        parse_coefficients("cmos xor 0 1\n")


positive = st.floats(1e-3, 1e4, allow_nan=False)


@st.composite
def coefficient_tables(draw, rmtl_cheaper=False):
    table = {"rmtl": {}, "cmos": {}}
    for k in KINDS:
        ca, cp = draw(positive), draw(positive)
        table["cmos"][k] = (ca, cp)
        if rmtl_cheaper:
            fa, fp = draw(st.floats(0.01, 0.99)), draw(st.floats(0.01, 0.99))
            table["rmtl"][k] = (ca * fa, cp * fp)
        else:
            table["rmtl"][k] = (draw(positive), draw(positive))
    return CostCoefficients(table)


@given(coefficient_tables(), st.lists(st.integers(0, 2), min_size=1, max_size=4))
@settings(max_examples=50, deadline=None)
def test_cost_additivity(coeffs, picks):
    frags = []
    for i, k in enumerate(picks):
        p = f"u{i}."
        b = CircuitBuilder(p)
        a_, b_ = b.input(f"{p}A"), b.input(f"{p}B")
        [b.xor, b.and_, b.or_][k](a_, b_, f"{p}OUT")
        frags.append(b.build())
    whole = cost_report(merge(*frags), coeffs)
    parts = [cost_report(f, coeffs) for f in frags]
    for fam in ("rmtl", "cmos"):
        for j in range(2):
            assert whole.totals[fam][j] == pytest.approx(
                math.fsum(p.totals[fam][j] for p in parts), rel=1e-12)


@given(coefficient_tables(), st.floats(0.01, 100))
@settings(max_examples=50, deadline=None)
def test_ratio_scales_linearly(coeffs, lam):
    net = build_cla4()
    base = cost_report(net, coeffs)
    scaled = cost_report(net, coeffs.scaled("rmtl", lam))
    for j in range(2):
        assert scaled.totals["rmtl"][j] == pytest.approx(lam * base.totals["rmtl"][j], rel=1e-12)
        assert scaled.ratios[j] == pytest.approx(lam * base.ratios[j], rel=1e-12)
    assert scaled.totals["cmos"] == base.totals["cmos"]


@given(coefficient_tables(rmtl_cheaper=True))
@settings(max_examples=30, deadline=None)
def test_cheaper_family_wins_on_cla(coeffs):
    r = cost_report(build_cla4(), coeffs)
    assert r.ratios[0] < 1 and r.ratios[1] < 1


def test_switches_and_sources_cost_nothing():
    net = build_xor().with_sources({"A": PulseSource("VA", "A", 1e-6)})
    assert cost_report(net, load_coefficients()).inventory == {"xor": 1}
