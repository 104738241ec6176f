import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_unate_netlist
from selftimed import kernels
from selftimed.datapath import build_inference_datapath, outcome_codes
from selftimed.golden import OUTCOME_CODES, infer_batch
from selftimed.netlist import GateKind as K, NetlistBuilder, eval_zero_delay
from selftimed.sim import (
    Mode, ProtocolViolation, Trace, ViolationKind, check_forbidden, check_monotonic, check_one_hot,
    equal_counts, histogram, measure_latency_distribution, msb_skewed, run_handshake, simulate,
    uniform_inputs,
)
from selftimed.timing import DelayModel, compute_timing, spacer_levels

HAVE_COMPILED = True
try:
    kernels.backend_module("compiled")
except ImportError:  # pragma: no cover
    HAVE_COMPILED = False


@pytest.fixture(scope="module")
def small():
    return build_inference_datapath((2, 4))


@pytest.fixture(scope="module")
def medium():
    return build_inference_datapath((4, 8))


def test_and2_rise_delay():
    b = NetlistBuilder()
    x, y = b.pi(), b.pi()
    out = b.po(b.gate(K.AND2, [x, y]))
    tr = simulate(b.build(), DelayModel({K.AND2: (7, 9)}), [(0, [1, 1])])
    assert tr.transitions(out) == [(7, 1)]


def test_inverter_chain_is_additive():
    b = NetlistBuilder()
    n = b.pi()
    for _ in range(3):
        n = b.gate(K.INV, [n])
    b.po(n)
    tr = simulate(b.build(), DelayModel({K.INV: (5, 5)}), [(0, [1])])
    assert tr.transitions(n) == [(15, 0)]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 5))
def test_delay_scaling_multiplies_timestamps(seed, k):
    nl = random_unate_netlist(seed)
    rng = np.random.default_rng(seed)
    steps = [(int(t), rng.integers(0, 2, len(nl.pis)).tolist()) for t in sorted(rng.integers(0, 200, 4))]
    base = simulate(nl, DelayModel(), steps)
    scaled_steps = [(t * k, v) for t, v in steps]
    again = simulate(nl, DelayModel().scaled(k), scaled_steps)
    assert np.array_equal(base.times * k, again.times)
    assert np.array_equal(base.nets, again.nets) and np.array_equal(base.values, again.values)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_settles_to_zero_delay_values(seed):
    nl = random_unate_netlist(seed)
    rng = np.random.default_rng(seed)
    steps = [(int(t), rng.integers(0, 2, len(nl.pis)).tolist()) for t in sorted(rng.integers(0, 100, 3))]
    tr = simulate(nl, DelayModel().with_jitter(0.5, 1.5, seed), steps)
    ref = eval_zero_delay(nl, steps[-1][1]).values
    assert tr.final_values() == ref


def test_event_explosion_on_ring():
    b = NetlistBuilder()
    en = b.pi()
    q = b.net("q")
    a = b.gate(K.NAND2, [en, q])
    b.gate(K.C2, [a, a], output=q)
    b.po(q)
    nl = b.build()
    # settles while disabled, oscillates once enabled
    with pytest.raises(kernels.EventExplosion):
        simulate(nl, DelayModel(), [(0, [1])], max_events=10_000)


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernels not built")
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_backends_produce_identical_traces(seed):
    nl = random_unate_netlist(seed)
    rng = np.random.default_rng(seed)
    steps = [(int(t), rng.integers(0, 2, len(nl.pis)).tolist()) for t in sorted(rng.integers(0, 100, 5))]
    model = DelayModel().with_jitter(0.5, 1.5, seed)
    a = simulate(nl, model, steps, backend="python")
    b = simulate(nl, model, steps, backend="compiled")
    for x, y in ((a.times, b.times), (a.nets, b.nets), (a.values, b.values)):
        assert np.array_equal(x, y)


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernels not built")
def test_backends_agree_on_handshakes(small):
    rng = np.random.default_rng(5)
    f, ex = uniform_inputs()(rng, 30, small.F, small.C)
    model = DelayModel().with_jitter(0.5, 1.5, 3)
    a = run_handshake(small, list(zip(f, ex)), model, backend="python")
    b = run_handshake(small, list(zip(f, ex)), model, backend="compiled")
    assert a.measurements == b.measurements and not a.violations and not b.violations


def test_vcd_export(small):
    tr = simulate(small.netlist, None, [(0, small.pi_vector([1, 0], np.zeros((4, 4))))],
                  initial_pis=small.spacer_vector())
    text = tr.to_vcd(small.netlist)
    assert text.startswith("$timescale 1ps $end")
    assert "$enddefinitions $end" in text and "\n#0\n" in text


# -- handshake -------------------------------------------------------------------

def _operands(bundle, n, seed):
    f, ex = uniform_inputs()(np.random.default_rng(seed), n, bundle.F, bundle.C)
    return list(zip(f, ex))


def test_handshake_outcomes_match_golden(small):
    ops = _operands(small, 100, 1)
    res = run_handshake(small, ops)
    assert res.violations == []
    ref = infer_batch(np.array([o[0] for o in ops]), np.array([o[1] for o in ops]))
    assert [OUTCOME_CODES.index(o) for o in res.outcomes] == ref.tolist()


def test_done_rise_is_latency_plus_cd_delay(small):
    nl = small.netlist
    drv = nl.driver
    model = DelayModel()
    rise, _ = model.gate_delays(nl)
    k_of = {gid: k for k, gid in enumerate(nl.compiled.gate_ids.tolist())}
    cd = rise[k_of[drv[small.done].id]] + rise[k_of[drv[small.done_raw].id]]
    assert drv[small.done_raw].inputs == small.outcome_nets
    res = run_handshake(small, _operands(small, 50, 2), model)
    for m in res.measurements:
        assert m.done_rise - m.t_valid == m.t_spcw + cd


def test_identical_operands_back_to_back(small):
    op = _operands(small, 1, 3)[0]
    res = run_handshake(small, [op, op])
    a, b = res.measurements
    assert a.outcome == b.outcome and a.t_spcw == b.t_spcw and a.t_cwsp == b.t_cwsp


def test_settled_state_after_valid_matches_zero_delay(small):
    ops = _operands(small, 20, 4)
    res = run_handshake(small, ops, DelayModel().with_jitter(0.5, 1.5, 9))
    for m, (f, ex) in zip(res.measurements, ops):
        ref = eval_zero_delay(small.netlist, small.pi_vector(f, ex)).values
        # done rises only after the outputs settle; check every output rail there
        for net in small.outcome_nets:
            assert res.trace.value_at(net, m.done_rise) == ref[net]


def test_latency_scales_linearly(small):
    ops = _operands(small, 40, 6)
    base = run_handshake(small, ops).t_spcw()
    for k in (2, 7):
        assert np.array_equal(run_handshake(small, ops, DelayModel().scaled(k)).t_spcw(), base * k)


def test_oracle_mode_is_clean(medium):
    res = run_handshake(medium, _operands(medium, 200, 7), DelayModel().with_jitter(0.5, 1.5, 1),
                        mode=Mode.ORACLE_TIMED)
    assert res.violations == []
    t_int = compute_timing(medium.netlist, DelayModel().with_jitter(0.5, 1.5, 1),
                           pi_spacer=medium.spacer_vector()).t_int
    vt = [m.t_valid for m in res.measurements]
    sp = [m.t_spacer for m in res.measurements]
    assert all(b - a == t_int for a, b in zip(sp, vt[1:]))


def test_premature_input_detected(medium):
    # shrink the done delay to zero: the next valid can arrive before internal nets reset
    from selftimed.datapath import with_done_delay

    hurried = with_done_delay(medium, 0)
    slow = {gid: (400, 400) for gid, blk in hurried.block_map.items() if blk == "clause0"}
    res = run_handshake(hurried, _operands(hurried, 100, 8), DelayModel(overrides=slow))
    kinds = {v.kind for v in res.violations}
    assert ViolationKind.PREMATURE_INPUT in kinds
    # sizing the element for the same model restores a clean run
    from selftimed.timing import size_done_delay

    sized = with_done_delay(medium, size_done_delay(medium, DelayModel(overrides=slow)))
    assert run_handshake(sized, _operands(sized, 100, 8), DelayModel(overrides=slow)).violations == []


# -- checkers (fault injection) -------------------------------------------------------

def _trace(events, initial):
    t, n, v = zip(*events)
    return Trace(np.array(t, np.int64), np.array(n, np.int64), np.array(v, np.int8), dict(initial))


def test_monotonic_flags_glitch():
    # net 5 with spacer 0: rises then falls within the valid phase [0, 100)
    tr = _trace([(10, 5, 1), (20, 5, 0), (30, 5, 1)], {5: 0})
    v = check_monotonic(tr, {5: 0}, [0], [100])
    assert v and all(x.kind is ViolationKind.NON_MONOTONIC for x in v)
    clean = _trace([(10, 5, 1), (120, 5, 0)], {5: 0})
    assert check_monotonic(clean, {5: 0}, [0], [100]) == []


def test_late_departure_then_reset_is_legal():
    tr = _trace([(110, 5, 1), (130, 5, 0)], {5: 0})
    assert check_monotonic(tr, {5: 0}, [0], [100]) == []


def test_forbidden_state_flagged():
    from selftimed.dualrail import ALL0, DualRailBinding, RailPair

    binding = DualRailBinding({"x": RailPair(1, 2, ALL0)})
    tr = _trace([(5, 1, 1), (5, 2, 0), (50, 1, 0), (60, 2, 1), (60, 1, 1)], {1: 0, 2: 0})
    v = check_forbidden(tr, binding)
    assert len(v) == 1 and v[0].kind is ViolationKind.FORBIDDEN_STATE and v[0].time == 60
    # same instant {1,0} -> {0,1} through an intermediate event is not a settled state
    ok = _trace([(5, 1, 1), (9, 1, 0), (9, 2, 1)], {1: 0, 2: 0})
    assert check_forbidden(ok, binding) == []


def test_one_hot_flagged():
    tr = _trace([(5, 1, 1), (8, 2, 1), (9, 1, 0)], {1: 0, 2: 0, 3: 0})
    v = check_one_hot(tr, (1, 2, 3))
    assert len(v) == 1 and v[0].time == 8
    assert check_one_hot(_trace([(5, 1, 1), (9, 1, 0), (9, 2, 1)], {1: 0, 2: 0, 3: 0}), (1, 2, 3)) == []


def test_clean_clause_run_has_no_violations():
    from selftimed.datapath import map_clause_block
    from selftimed.dualrail import compute_spacer_polarity

    nl, binding = map_clause_block(3)
    pol = compute_spacer_polarity(nl, binding)
    spacer = [pol[p].value_bit for p in nl.pis]
    rng = np.random.default_rng(0)
    steps, vt, st_ = [], [], []
    t = 0
    for _ in range(20):
        bits = rng.integers(0, 2, len(nl.pis) // 2)
        steps.append((t, [x for bit in bits for x in (bit, 1 - bit)]))
        vt.append(t)
        steps.append((t + 300, spacer))
        st_.append(t + 300)
        t += 600
    tr = simulate(nl, DelayModel().with_jitter(0.5, 1.5, 2), steps, initial_pis=spacer)
    levels = spacer_levels(nl, spacer)
    assert check_monotonic(tr, levels, vt, st_) == []
    assert check_forbidden(tr, binding) == []


# -- latency distributions --------------------------------------------------------------

def test_msb_differing_latency_is_constant(medium):
    d = measure_latency_distribution(medium, msb_skewed(), 200, seed=1)
    assert d.violations == () and d.t_spcw.min() == d.t_spcw.max()


def test_equal_counts_hit_the_maximum(medium):
    d = measure_latency_distribution(medium, equal_counts(), 200, seed=1)
    msb = measure_latency_distribution(medium, msb_skewed(), 50, seed=1)
    assert d.t_spcw.min() == d.t_spcw.max()
    assert d.max > msb.max
    sta = compute_timing(medium.netlist, DelayModel(), pi_spacer=medium.spacer_vector())
    assert d.max <= sta.max_t_spcw


def test_uniform_mean_below_max(medium):
    d = measure_latency_distribution(medium, uniform_inputs(), 500, seed=2)
    assert d.mean < d.max and d.violations == ()
    edges, counts = d.histogram
    assert counts.sum() == 500 and np.all(np.diff(edges) == 10)


def test_comparator_latency_monotone_in_first_difference(medium):
    """Latency never grows as the first differing bit moves up towards the MSB."""
    from selftimed.golden import popcount_oracle

    rng = np.random.default_rng(3)
    f, ex = uniform_inputs()(rng, 3000, medium.F, medium.C)
    res = run_handshake(medium, list(zip(f, ex)))
    w = medium.width
    by_pos = {}
    for m, fi, e in zip(res.measurements, f, ex):
        from selftimed.golden import TmConfig, infer

        r = infer(fi.tolist(), TmConfig(medium.F, medium.C, e))
        diff = r.pos_count ^ r.neg_count
        key = diff.bit_length() - 1  # -1 when equal
        by_pos.setdefault(key, set()).add(m.t_spcw)
    keys = sorted(by_pos, reverse=True)
    worst = [max(by_pos[k]) for k in keys]
    assert worst == sorted(worst)


def test_histogram_helper():
    edges, counts = histogram(np.array([0, 5, 10, 19, 20]), 10)
    assert edges.tolist() == [0, 10, 20] and counts.tolist() == [2, 2, 1]


def test_measure_requires_operands(small):
    with pytest.raises(ValueError):
        measure_latency_distribution(small, uniform_inputs(), 0)
