import itertools

import numpy as np
import pytest

from helpers import assignments, dual, to_int, undual
from selftimed.datapath import (
    DatapathBundle, block_counts, build_clause_block, build_comparator, build_completion_detector,
    build_full_adder_dr, build_half_adder_dr, build_inference_datapath, build_popcount, build_popcount8,
    decode_outcome, map_clause_block, outcome_codes, path_inversions,
)
from selftimed.dualrail import ALL0, ALL1, compute_spacer_polarity, find_parity_conflicts
from selftimed.golden import OUTCOME_CODES, Outcome, TmConfig, clause_eval, compare_oracle, infer, infer_batch
from selftimed.netlist import GateKind as K, eval_zero_delay
from selftimed.sim import check_one_hot, simulate
from selftimed.timing import DelayModel


def spacer_of(nl, binding):
    pol = compute_spacer_polarity(nl, binding)
    return [pol[p].value_bit for p in nl.pis]


def classify(nl):
    kinds = [g.kind for g in nl.gates]
    return (sum(k.complex for k in kinds), sum(not k.complex and k.arity > 1 for k in kinds),
            sum(k is K.INV for k in kinds))


# -- adders ----------------------------------------------------------------------

@pytest.mark.parametrize("pol", [ALL0, ALL1])
@pytest.mark.parametrize("negative", [False, True])
def test_half_adder(pol, negative):
    nl, binding = build_half_adder_dr(pol, negative)
    assert find_parity_conflicts(nl, binding) == []
    assert classify(nl) == (2, 2, 0)
    for a, b in assignments(2):
        s, c = undual(eval_zero_delay(nl, dual([a, b])).po_values)
        assert s + 2 * c == a + b
    assert undual(eval_zero_delay(nl, dual([1, 1])).po_values) == [0, 1]


@pytest.mark.parametrize("pol", [ALL0, ALL1])
def test_full_adder(pol):
    nl, binding = build_full_adder_dr(pol)
    assert find_parity_conflicts(nl, binding) == []
    assert classify(nl) == (6, 2, 4)
    for a, b, c in assignments(3):
        s, co = undual(eval_zero_delay(nl, dual([a, b, c])).po_values)
        assert s + 2 * co == a + b + c
    # carry in and carry out sit on the opposite spacer from the operands
    assert binding["cin"].spacer is pol.flipped() and binding["cout"].spacer is pol.flipped()
    assert binding["sum"].spacer is pol


# -- population counts ---------------------------------------------------------------

def test_popcount8_exhaustive_and_structure():
    nl, binding, blocks = build_popcount8()
    for bits in assignments(8):
        y = undual(eval_zero_delay(nl, dual(bits)).po_values)
        assert to_int(y) == sum(bits)
    assert block_counts(blocks) == {"ha": 9, "fa": 2, "or": 2, "spinv": 2}
    assert find_parity_conflicts(nl, binding) == []
    assert all(binding[f"y{i}"].spacer is ALL0 for i in range(4))


def test_popcount_extremes():
    nl, _, _ = build_popcount8()
    assert to_int(undual(eval_zero_delay(nl, dual([0] * 8)).po_values)) == 0
    assert to_int(undual(eval_zero_delay(nl, dual([1] * 8)).po_values)) == 8


def test_popcount_one_is_a_wire():
    nl, binding, _ = build_popcount(1)
    assert nl.gates == () and nl.pos == nl.pis


def test_popcount_three_is_one_full_adder():
    nl, binding, blocks = build_popcount(3)
    c = block_counts(blocks)
    assert c["fa"] == 1 and c["ha"] == 0
    for bits in assignments(3):
        assert to_int(undual(eval_zero_delay(nl, dual(bits)).po_values)) == sum(bits)


@pytest.mark.parametrize("n", [2, 4, 5, 6, 7, 8, 9, 11, 16])
@pytest.mark.parametrize("pol", [ALL0, ALL1])
def test_popcount_n(n, pol):
    nl, binding, _ = build_popcount(n, pol)
    assert find_parity_conflicts(nl, binding) == []
    rng = np.random.default_rng(n)
    cases = list(assignments(n)) if n <= 9 else rng.integers(0, 2, (300, n)).tolist()
    for bits in cases:
        assert to_int(undual(eval_zero_delay(nl, dual(bits)).po_values)) == sum(bits)


def test_popcount8_generic_path_matches_fixed_topology():
    a, _, _ = build_popcount8()
    b, _, _ = build_popcount(8)
    for bits in assignments(8):
        assert eval_zero_delay(a, dual(bits)).po_values == eval_zero_delay(b, dual(bits)).po_values


# -- comparator -------------------------------------------------------------------------

def cmp_inputs(a, b, w):
    return dual([(a >> i) & 1 for i in range(w)] + [(b >> i) & 1 for i in range(w)])


def test_comparator_exhaustive_w4():
    nl, binding, _ = build_comparator(4)
    for a, b in itertools.product(range(16), repeat=2):
        out = eval_zero_delay(nl, cmp_inputs(a, b, 4)).po_values
        assert out == tuple(int(o is compare_oracle(a, b)) for o in OUTCOME_CODES)
    assert eval_zero_delay(nl, cmp_inputs(5, 5, 4)).po_values == (0, 1, 0)


@pytest.mark.parametrize("w", [1, 2, 3, 5])
def test_comparator_other_widths(w):
    nl, _, _ = build_comparator(w)
    for a, b in itertools.product(range(1 << w), repeat=2):
        out = eval_zero_delay(nl, cmp_inputs(a, b, w)).po_values
        assert out == tuple(int(o is compare_oracle(a, b)) for o in OUTCOME_CODES)


def test_comparator_lower_stages_stay_quiet():
    nl, binding, blocks = build_comparator(4)
    tr = simulate(nl, DelayModel().with_jitter(0.5, 1.5, 0),
                  [(0, cmp_inputs(12, 3, 4)), (500, [0] * 16)])
    lower = {nl.gate_by_id[g].output for g, lbl in blocks.items() if lbl in ("cmp_stage2", "cmp_stage1", "cmp_stage0")}
    assert not np.isin(tr.times[np.isin(tr.nets, list(lower))], np.arange(0, 500)).any()
    assert check_one_hot(tr, nl.pos) == []


# -- completion detector ---------------------------------------------------------------

def test_completion_detector():
    nl = build_completion_detector([(0, 0, ALL0), (0, 0, ALL1)], n_1of3=3, t_d=40)
    # PIs: o0 pair (ALL0), o1 pair (ALL1), g0..g2
    spacer = [0, 0, 1, 1, 0, 0, 0]
    assert eval_zero_delay(nl, spacer).po_values == (0, 0)
    valid = [1, 0, 0, 1, 0, 1, 0]
    assert eval_zero_delay(nl, valid).po_values == (1, 1)
    partial = [1, 0, 1, 1, 0, 1, 0]
    assert eval_zero_delay(nl, partial).po_values == (0, 0)
    tr = simulate(nl, DelayModel(), [(0, valid), (1000, spacer)], initial_pis=spacer)
    done = nl.pos[1]
    (t_rise, _), (t_fall, _) = tr.transitions(done)
    raw = tr.transitions(nl.pos[0])
    assert t_rise == raw[0][0]  # zero rise delay through the element
    assert t_fall == raw[1][0] + 40


# -- clause block ------------------------------------------------------------------------

def test_clause_block_single_rail_and_mapped():
    for F in (1, 2, 3):
        single = build_clause_block(F)
        mapped, binding = map_clause_block(F)
        assert path_inversions(mapped) == {1}
        pol = compute_spacer_polarity(mapped, binding)
        assert all(pol[p] is ALL1 for p in mapped.pos)
        for f in assignments(F):
            for e in assignments(2 * F):
                want = clause_eval(f, e)
                assert eval_zero_delay(single, list(f) + list(e)).po_values == (want,)
                assert undual(eval_zero_delay(mapped, dual(list(f) + list(e))).po_values) == [want]


def test_clause_gate_styles():
    mapped, _ = map_clause_block(4)
    kinds = {g.kind for g in mapped.gates}
    assert kinds <= {K.AOI22, K.OAI22, K.AND2, K.OR2, K.AND3, K.OR3, K.AND4, K.OR4}


def test_clause_all_exclude_timed():
    mapped, binding = map_clause_block(2)
    sp = spacer_of(mapped, binding)
    tr = simulate(mapped, DelayModel(), [(0, dual([0, 1, 1, 1, 1, 1]))], initial_pis=sp)
    assert undual([tr.final_values()[p] for p in mapped.pos]) == [1]


# -- full datapath ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def dp24():
    return build_inference_datapath((2, 4))


def test_datapath_random_matrices(dp24):
    rng = np.random.default_rng(0)
    fs = np.array(list(assignments(2)), dtype=np.uint8)
    for _ in range(50):
        ex = rng.integers(0, 2, (4, 4), dtype=np.uint8)
        got = outcome_codes(dp24, fs, ex)
        ref = [OUTCOME_CODES.index(infer(list(f), TmConfig(2, 4, ex)).outcome) for f in fs]
        assert got.tolist() == ref


def test_datapath_all_excluded_is_equal(dp24):
    v = eval_zero_delay(dp24.netlist, dp24.pi_vector([1, 0], np.ones((4, 4)))).values
    assert decode_outcome(v, dp24) is Outcome.EQUAL


@pytest.mark.parametrize("F,C", [(1, 2), (1, 4), (2, 2), (3, 2), (1, 6)])
def test_datapath_exhaustive_small(F, C):
    dp = build_inference_datapath((F, C))
    nbits = C * 2 * F
    codes = np.arange(1 << nbits, dtype=np.uint64)
    ex = ((codes[:, None] >> np.arange(nbits, dtype=np.uint64)) & np.uint64(1)).astype(np.uint8)
    ex = ex.reshape(-1, C, 2 * F)
    for f in assignments(F):
        fv = np.broadcast_to(np.array(f, dtype=np.uint8), (len(ex), F))
        assert np.array_equal(outcome_codes(dp, fv, ex), infer_batch(fv, ex))


@pytest.mark.parametrize("F,C", [(3, 6), (4, 8), (5, 10), (8, 16), (6, 12)])
def test_datapath_random(F, C):
    dp = build_inference_datapath((F, C))
    rng = np.random.default_rng(F * 100 + C)
    f = rng.integers(0, 2, (1000, F), dtype=np.uint8)
    ex = rng.integers(0, 2, (1000, C, 2 * F), dtype=np.uint8)
    assert np.array_equal(outcome_codes(dp, f, ex), infer_batch(f, ex))


def test_datapath_structure(dp24):
    counts = dp24.gate_counts_by_block()
    assert set(counts) == {"clause", "popcount", "comparator", "cd"}
    assert sum(counts.values()) == len(dp24.netlist.gates)
    assert set(dp24.block_map) == {g.id for g in dp24.netlist.gates}
    assert find_parity_conflicts(dp24.netlist, dp24.binding) == []
    assert eval_zero_delay(dp24.netlist, dp24.spacer_vector()).po_values == (0, 0, 0, 0)


def test_popcount_blocks_by_size():
    dp = build_inference_datapath((2, 16))
    for tree in ("pcpos/", "pcneg/"):
        assert block_counts(dp.block_map, tree) == {"ha": 9, "fa": 2, "or": 2, "spinv": 2}
    dp = build_inference_datapath((4, 8))
    for tree in ("pcpos/", "pcneg/"):
        assert block_counts(dp.block_map, tree) == {"ha": 4, "fa": 0, "or": 1, "spinv": 0}


def test_bundle_round_trip(tmp_path, dp24):
    dp24.save(tmp_path)
    again = DatapathBundle.load(tmp_path)
    assert again.netlist == dp24.netlist and again.binding == dp24.binding
    assert again.block_map == dp24.block_map and again.po_group == dp24.po_group
    rng = np.random.default_rng(1)
    f = rng.integers(0, 2, (64, 2))
    ex = rng.integers(0, 2, (64, 4, 4))
    assert np.array_equal(outcome_codes(again, f, ex), outcome_codes(dp24, f, ex))


def test_bad_shapes():
    with pytest.raises(ValueError):
        build_inference_datapath((2, 3))
    with pytest.raises(ValueError):
        build_clause_block(0)


@pytest.mark.parametrize("F,C", [(4, 16), (3, 6), (2, 10)])
def test_every_bound_pair_is_a_codeword(F, C):
    dp = build_inference_datapath((F, C))
    rng = np.random.default_rng(C)
    for _ in range(40):
        f = rng.integers(0, 2, F)
        ex = rng.integers(0, 2, (C, 2 * F))
        v = eval_zero_delay(dp.netlist, dp.pi_vector(f, ex)).values
        for name, rp in dp.binding.signals.items():
            assert v[rp.pos] != v[rp.neg], name
