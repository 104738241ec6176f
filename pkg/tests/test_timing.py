import json

import numpy as np
import pytest

from selftimed.datapath import build_inference_datapath
from selftimed.netlist import GateKind as K, NetlistBuilder, build
from selftimed.sim import run_handshake, uniform_inputs
from selftimed.timing import (
    DEFAULT_VDD_TABLE, CyclicTiming, DelayModel, OutOfRange, VddTable, compute_timing, scale_delay_model,
    size_done_delay,
)


@pytest.fixture(scope="module")
def dp48():
    return build_inference_datapath((4, 8))


def test_single_and2():
    b = NetlistBuilder()
    x, y = b.pi(), b.pi()
    b.po(b.gate(K.AND2, [x, y]))
    r = compute_timing(b.build(), DelayModel({K.AND2: (15, 15)}))
    assert (r.t_io, r.t_int, r.t_d, r.t_done_fall) == (15, 15, 0, 15)


def test_false_path_sets_done_delay():
    nl = build([(0, "BUF", [0], 1), (1, "BUF", [0], 2), (2, "AND2", [1, 0], 3)], [0], [3])
    model = DelayModel(overrides={0: (300, 300), 1: (500, 500), 2: (1, 1)})
    r = compute_timing(nl, model)
    # PO path: BUF(300) + AND2(1) = 301 ; internal-only BUF reaches 500
    assert r.t_io == 301 and r.t_int == 500 and r.t_d == 199 and r.t_done_fall == 500
    nl = build([(0, "BUF", [0], 1), (1, "BUF", [0], 2)], [0], [1])
    r = compute_timing(nl, DelayModel(overrides={0: (300, 300), 1: (500, 500)}))
    assert (r.t_io, r.t_int, r.t_d, r.t_done_fall) == (300, 500, 200, 500)
    assert r.critical_path_int == (1,) and r.critical_path_io == (0,)


def test_rise_and_fall_selection():
    # ALL1 spacer on the output of an inverter: valid->spacer is a rise
    nl = build([(0, "INV", [0], 1)], [0], [1])
    r = compute_timing(nl, DelayModel({K.INV: (7, 3)}), pi_spacer=[0])
    assert r.t_io == 7 and r.max_t_spcw == 3


def test_cyclic_timing():
    b = NetlistBuilder()
    a, c = b.pi(), b.pi()
    b.po(b.gate(K.C2, [a, c]))
    with pytest.raises(CyclicTiming):
        compute_timing(b.build())


def test_delay_gate_excluded():
    nl = build([(0, "BUF", [0], 1), (1, "DELAY", [1], 2, (0, 900))], [0], [1, 2])
    r = compute_timing(nl)
    assert r.t_int == 10 and r.t_io == 10


def test_datapath_report(dp48):
    r = compute_timing(dp48.netlist, DelayModel(), pi_spacer=dp48.spacer_vector())
    assert r.t_int >= r.t_io >= 0 and r.t_d + r.t_io == r.t_int and r.t_done_fall >= r.t_int
    assert r.max_t_spcw > 0 and len(r.critical_path_spcw) > 0
    data = json.loads(r.to_json())
    assert set(data) >= {"t_io", "t_int", "t_d", "t_done_fall", "max_t_spcw"}


def test_simulation_bounded_by_sta(dp48):
    model = DelayModel()
    r = compute_timing(dp48.netlist, model, pi_spacer=dp48.spacer_vector())
    f, ex = uniform_inputs()(np.random.default_rng(11), 10_000, 4, 8)
    res = run_handshake(dp48, list(zip(f, ex)), model)
    assert res.violations == []
    assert max(m.t_cwsp for m in res.measurements) <= r.t_int
    assert res.t_spcw().max() <= r.max_t_spcw


def test_size_done_delay_covers_corners(dp48):
    model = DelayModel()
    t_d = size_done_delay(dp48, model)
    slow = compute_timing(dp48.netlist, model.scaled(1.5), pi_spacer=dp48.spacer_vector())
    assert t_d >= slow.t_int - slow.t_io  # the fast-corner output fall only makes it larger
    assert size_done_delay(dp48, model, margin=1.0) <= t_d


# -- delay models ------------------------------------------------------------------------

def test_delay_model_defaults_and_floor():
    nl = build([(0, "INV", [0], 1), (1, "AND2", [0, 1], 2), (2, "AOI21", [0, 1, 2], 3),
                (3, "DELAY", [3], 4, (0, 0))], [0], [4])
    rise, fall = DelayModel().gate_delays(nl)
    assert rise.tolist() == [10, 15, 25, 0]
    rise, fall = DelayModel({K.INV: (1, 1)}).scaled(0.1).gate_delays(nl)
    assert rise[0] == 1 and fall[0] == 1 and rise[3] == 0


def test_jitter_is_reproducible_and_bounded():
    nl = build([(i, "BUF", [0], i + 1) for i in range(200)], [0], [1])
    m = DelayModel().with_jitter(0.5, 1.5, 42)
    a, _ = m.gate_delays(nl)
    b, _ = m.gate_delays(nl)
    assert np.array_equal(a, b)
    assert a.min() >= 5 and a.max() <= 15 and len(set(a.tolist())) > 3
    c, _ = DelayModel().with_jitter(0.5, 1.5, 43).gate_delays(nl)
    assert not np.array_equal(a, c)


def test_delay_model_json(tmp_path):
    m = DelayModel({K.AND2: (7, 9)}, {3: (1, 2)}).with_jitter(0.8, 1.2, 5)
    m.save(tmp_path / "d.json")
    assert DelayModel.load(tmp_path / "d.json") == m
    with pytest.raises(ValueError):
        DelayModel.from_dict({"defaults": {}})
    with pytest.raises(ValueError):
        DelayModel.from_dict({"jitter": {"min": 2, "max": 1}})


# -- supply scaling ------------------------------------------------------------------------

def test_vdd_table():
    assert DEFAULT_VDD_TABLE.multiplier(1.2) == 1.0
    assert DEFAULT_VDD_TABLE.multiplier(0.6) == 4.0
    assert DEFAULT_VDD_TABLE.multiplier(0.25) == 3000.0
    mid = DEFAULT_VDD_TABLE.multiplier(0.75)
    assert mid == pytest.approx((1.5 * 4.0) ** 0.5)
    with pytest.raises(OutOfRange):
        DEFAULT_VDD_TABLE.multiplier(1.3)
    with pytest.raises(OutOfRange):
        DEFAULT_VDD_TABLE.multiplier(0.2)
    with pytest.raises(ValueError):
        VddTable(((1.2, 1.0), (0.6, 0.5)))
    with pytest.raises(ValueError):
        VddTable(((1.2, 2.0), (0.6, 4.0)))


def test_scale_delay_model():
    nl = build([(0, "BUF", [0], 1)], [0], [1])
    m = DelayModel()
    assert scale_delay_model(m, 1.2) == m
    t = VddTable(((1.2, 1.0), (0.25, 10000.0)))
    rise, fall = scale_delay_model(m, 0.25, t).gate_delays(nl)
    assert rise[0] == 100_000 and fall[0] == 100_000


def test_vdd_table_files(tmp_path):
    (tmp_path / "t.csv").write_text("vdd,multiplier\n1.2,1\n0.6,4\n")
    (tmp_path / "t.json").write_text(json.dumps(DEFAULT_VDD_TABLE.to_dict()))
    assert VddTable.load(tmp_path / "t.csv").multiplier(0.6) == 4.0
    assert VddTable.load(tmp_path / "t.json") == DEFAULT_VDD_TABLE
