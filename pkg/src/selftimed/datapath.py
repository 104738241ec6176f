"""Generators for the dual-rail Tsetlin Machine inference datapath.

Blocks are emitted into a :class:`DualRailBuilder`, which tracks every
logical signal as a :class:`RailPair` together with its spacer polarity and
labels each gate with the block it belongs to.

Half adders and full adders follow one fixed convention:

* a half adder needs both operands at one polarity ``P``; the *positive*
  style keeps ``P`` on its outputs, the *negative* style (NAND/NOR/AOI)
  produces ``not P``;
* a full adder needs ``a``, ``b`` at ``P`` and the carry-in at ``not P``; the
  sum leaves at ``P`` and the carry-out at ``not P``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dualrail import (ALL0, ALL1, DualRailBinding, RailPair, SpacerPolarity,
                       compute_spacer_polarity, direct_map, negative_gate_optimize,
                       path_inversion_counts)
from .golden import OUTCOME_CODES, Outcome, TmConfig
from .netlist import GateKind as K
from .netlist import Netlist, NetlistBuilder, and_kind, eval_bitparallel, or_kind

MAX_FANIN = 4


class UnknownPolarity(ValueError):
    pass


class DualRailBuilder:
    """Netlist builder that works on dual-rail signals."""

    def __init__(self, meta: Mapping[str, str] | None = None):
        self.nb = NetlistBuilder(meta)
        self.signals: dict[str, RailPair] = {}
        self._counters: dict[str, int] = {}
        self.prefix = ""

    # -- naming and blocks --------------------------------------------------
    def next_label(self, kind: str) -> str:
        key = self.prefix + kind
        n = self._counters.get(key, 0)
        self._counters[key] = n + 1
        return f"{key}{n}"

    def block(self, label: str | None) -> None:
        self.nb.block = label

    @property
    def block_map(self) -> dict[int, str]:
        return self.nb.block_map

    # -- nets -----------------------------------------------------------------
    def pi(self, name: str, spacer: SpacerPolarity = ALL0) -> RailPair:
        rp = RailPair(self.nb.pi(f"{name}__p"), self.nb.pi(f"{name}__n"), spacer)
        self.signals[name] = rp
        return rp

    def wire_pi(self, name: str) -> int:
        return self.nb.pi(name)

    def po(self, rp: RailPair) -> None:
        self.nb.po(rp.pos)
        self.nb.po(rp.neg)

    def g(self, kind: K, inputs: Sequence[int], name: str | None = None) -> int:
        return self.nb.gate(kind, inputs, name=name)

    def pair(self, name: str, pos_kind: K, pos_in: Sequence[int], neg_kind: K,
             neg_in: Sequence[int], spacer: SpacerPolarity) -> RailPair:
        rp = RailPair(self.g(pos_kind, pos_in, f"{name}__p"), self.g(neg_kind, neg_in, f"{name}__n"), spacer)
        self.signals[name] = rp
        return rp

    def build(self) -> Netlist:
        return self.nb.build()

    def binding(self, inverting: bool = False) -> DualRailBinding:
        return DualRailBinding(dict(self.signals), inverting)


# -- arithmetic cells --------------------------------------------------------

def spacer_inverter(b: DualRailBuilder, x: RailPair, name: str, label: str | None = None) -> RailPair:
    """Two inverters and a rail swap: same logical value, opposite spacer."""
    prev = b.nb.block
    b.block(label or b.next_label("spinv"))
    out = b.pair(name, K.INV, [x.neg], K.INV, [x.pos], x.spacer.flipped())
    b.block(prev)
    return out


def half_adder(b: DualRailBuilder, x: RailPair, y: RailPair, name: str,
               negative: bool = False) -> tuple[RailPair, RailPair]:
    """(sum, carry); two complex and two simple gates."""
    if x.spacer is not y.spacer:
        raise UnknownPolarity(f"half adder {name}: operand polarities differ")
    ap, an, bp, bn = x.pos, x.neg, y.pos, y.neg
    if not negative:
        pol = x.spacer
        c = b.pair(f"{name}_c", K.AND2, [ap, bp], K.OR2, [an, bn], pol)
        s = b.pair(f"{name}_s", K.AO22, [ap, bn, an, bp], K.AO22, [ap, bp, an, bn], pol)
    else:
        pol = x.spacer.flipped()
        c = b.pair(f"{name}_c", K.NOR2, [an, bn], K.NAND2, [ap, bp], pol)
        s = b.pair(f"{name}_s", K.AOI22, [ap, bp, an, bn], K.AOI22, [ap, bn, an, bp], pol)
    return s, c


def full_adder(b: DualRailBuilder, x: RailPair, y: RailPair, cin: RailPair,
               name: str) -> tuple[RailPair, RailPair]:
    """(sum, carry-out); six complex, two simple gates and four inverters."""
    if x.spacer is not y.spacer or cin.spacer is x.spacer:
        raise UnknownPolarity(f"full adder {name}: carry-in must oppose the operand polarity")
    pol = x.spacer
    ap, an, bp, bn = x.pos, x.neg, y.pos, y.neg
    # a+b and ~a+~b are both high when a != b: two monotonic wires, not a codeword
    o_any = b.g(K.OR2, [ap, bp], f"{name}_o1")
    o_none = b.g(K.OR2, [an, bn], f"{name}_o0")
    ci = b.pair(f"{name}_ci", K.INV, [cin.neg], K.INV, [cin.pos], pol)
    cout = b.pair(f"{name}_co", K.AOI22, [an, bn, ci.neg, o_none], K.AOI22, [ap, bp, ci.pos, o_any],
                  pol.flipped())
    k = b.pair(f"{name}_k", K.AOI22, [ap, bp, an, bn], K.AOI22, [ap, bn, an, bp], pol.flipped())
    h = b.pair(f"{name}_h", K.INV, [k.neg], K.INV, [k.pos], pol)
    s = b.pair(f"{name}_s", K.AO22, [h.pos, ci.neg, h.neg, ci.pos], K.AO22,
               [h.pos, ci.pos, h.neg, ci.neg], pol)
    return s, cout


def or_block(b: DualRailBuilder, x: RailPair, y: RailPair, name: str) -> RailPair:
    if x.spacer is not y.spacer:
        raise UnknownPolarity(f"or block {name}: operand polarities differ")
    return b.pair(name, K.OR2, [x.pos, y.pos], K.AND2, [x.neg, y.neg], x.spacer)


def _ha(b, x, y, negative=False):
    label = b.next_label("ha")
    prev = b.nb.block
    b.block(label)
    out = half_adder(b, x, y, label.replace("/", "_"), negative=negative)
    b.block(prev)
    return out


def _fa(b, x, y, c):
    label = b.next_label("fa")
    prev = b.nb.block
    b.block(label)
    out = full_adder(b, x, y, c, label.replace("/", "_"))
    b.block(prev)
    return out


def _or(b, x, y):
    label = b.next_label("or")
    prev = b.nb.block
    b.block(label)
    out = or_block(b, x, y, label.replace("/", "_"))
    b.block(prev)
    return out


def _spinv(b, x):
    label = b.next_label("spinv")
    return spacer_inverter(b, x, label.replace("/", "_"), label=label)


def _fix(b, x: RailPair, target: SpacerPolarity) -> RailPair:
    return x if x.spacer is target else _spinv(b, x)


# -- population counts ---------------------------------------------------------

def _counter4(b, xs: Sequence[RailPair], target: SpacerPolarity) -> list[RailPair]:
    """Four-input counter: four half adders and one OR block, 3-bit result."""
    neg = xs[0].spacer is not target
    s1, c1 = _ha(b, xs[0], xs[1], negative=neg)
    s2, c2 = _ha(b, xs[2], xs[3], negative=neg)
    z0, c3 = _ha(b, s1, s2)
    t1, z2 = _ha(b, c1, c2)
    z1 = _or(b, t1, c3)  # t1 and c3 are never both 1
    return [z0, z1, z2]


def popcount8_into(b: DualRailBuilder, xs: Sequence[RailPair],
                   target: SpacerPolarity | None = None) -> list[RailPair]:
    """Eight-input population count: 9 HA + 2 FA + 2 OR + 2 spacer inverters."""
    if len(xs) != 8 or len({x.spacer for x in xs}) != 1:
        raise ValueError("popcount8 needs eight operands of one polarity")
    target = xs[0].spacer if target is None else target
    z = _counter4(b, xs[:4], target)
    w = _counter4(b, xs[4:], target)
    y0, k0 = _ha(b, z[0], w[0])
    k0 = _spinv(b, k0)  # carry into fa0 must oppose the operand polarity
    y1, k1 = _fa(b, z[1], w[1], k0)
    y2, k2 = _fa(b, z[2], w[2], k1)
    y3 = _spinv(b, k2)
    return [y0, y1, y2, y3]


def popcount_into(b: DualRailBuilder, xs: Sequence[RailPair],
                  target: SpacerPolarity | None = None) -> list[RailPair]:
    """Population count of ``len(xs)`` operands, LSB first.

    Uses the fixed 8-input topology for ``n == 8`` and the 4-input counter
    for ``n == 4``; otherwise columns are compressed with full adders (three
    bits) and half adders (two bits), inserting spacer inverters where the
    cell polarity conventions require them.
    """
    n = len(xs)
    if n < 1:
        raise ValueError("popcount needs at least one operand")
    if len({x.spacer for x in xs}) != 1:
        raise UnknownPolarity("popcount operands must share one spacer polarity")
    src = xs[0].spacer
    target = src if target is None else target
    if n == 8:
        return popcount8_into(b, xs, target)
    if n == 4:
        return _counter4(b, xs, target)
    width = n.bit_length()
    cols: list[list[RailPair]] = [list(xs)] + [[] for _ in range(width)]
    for i in range(width):
        col = cols[i]
        while len(col) > 1:
            if len(col) >= 3:
                trio = col[:3]
                del col[:3]
                pols = [x.spacer for x in trio]
                odd = [x for x in trio if pols.count(x.spacer) == 1]
                if odd:
                    cin = odd[0]
                    a, c = [x for x in trio if x is not cin]
                else:
                    a, c, cin = trio[0], trio[1], _spinv(b, trio[2])
                s, co = _fa(b, a, c, cin)
            else:
                x, y = col
                del col[:2]
                if x.spacer is not y.spacer:
                    x, y = (_spinv(b, x), y) if x.spacer is not target else (x, _spinv(b, y))
                s, co = _ha(b, x, y, negative=x.spacer is not target)
            col.append(s)
            if i + 1 < width:
                cols[i + 1].append(co)
    return [_fix(b, cols[i][0], target) for i in range(width)]


def _standalone(n: int, polarity: SpacerPolarity, fn) -> tuple[Netlist, DualRailBinding, dict[int, str]]:
    b = DualRailBuilder({"block": f"popcount{n}"})
    xs = [b.pi(f"x{i}", polarity) for i in range(n)]
    ys = fn(b, xs)
    for i, y in enumerate(ys):
        b.signals[f"y{i}"] = y
        b.po(y)
    nl = _prune_dead(b.build())
    return nl, b.binding(), _restrict(b.block_map, nl)


def build_popcount8(polarity: SpacerPolarity = ALL0):
    """(netlist, binding, block_map) of the 8-input count; outputs ``y0..y3``."""
    return _standalone(8, polarity, popcount8_into)


def build_popcount(n: int, polarity: SpacerPolarity = ALL0):
    return _standalone(n, polarity, popcount_into)


def build_half_adder_dr(polarity: SpacerPolarity = ALL0, negative: bool = False):
    """Stand-alone half adder; PIs ``a``, ``b``; POs sum then carry."""
    b = DualRailBuilder({"block": "ha"})
    x, y = b.pi("a", polarity), b.pi("b", polarity)
    s, c = half_adder(b, x, y, "ha", negative)
    b.signals.update(sum=s, carry=c)
    b.po(s)
    b.po(c)
    return b.build(), b.binding()


def build_full_adder_dr(polarity: SpacerPolarity = ALL0):
    """Stand-alone full adder; PIs ``a``, ``b``, ``cin`` (opposite spacer)."""
    b = DualRailBuilder({"block": "fa"})
    x, y = b.pi("a", polarity), b.pi("b", polarity)
    c = b.pi("cin", polarity.flipped())
    s, co = full_adder(b, x, y, c, "fa")
    b.signals.update(sum=s, cout=co)
    b.po(s)
    b.po(co)
    return b.build(), b.binding()


# -- comparator ------------------------------------------------------------------

def _or_tree(b: DualRailBuilder, nets: Sequence[int], name: str) -> int:
    nets = list(nets)
    if len(nets) == 1:
        return b.g(K.BUF, nets, name)
    level = 0
    while len(nets) > 1:
        groups = _groups(nets)
        nets = [g[0] if len(g) == 1 else b.g(or_kind(len(g)), g,
                                              name if len(groups) == 1 else f"{name}_l{level}_{k}")
                for k, g in enumerate(groups)]
        level += 1
    return nets[0]


def _groups(nets: Sequence[int]) -> list[list[int]]:
    """Split into the fewest contiguous groups of at most MAX_FANIN, balanced."""
    n = len(nets)
    k = math.ceil(n / MAX_FANIN)
    base, extra = divmod(n, k)
    out, i = [], 0
    for j in range(k):
        size = base + (1 if j < extra else 0)
        out.append(list(nets[i:i + size]))
        i += size
    return out


def comparator_into(b: DualRailBuilder, a: Sequence[RailPair], c: Sequence[RailPair],
                    stage_prefix: str = "cmp_stage") -> tuple[int, int, int]:
    """MSB-first bit-pair comparator with a forwarded equality request.

    ``a`` and ``c`` are LSB-first operands with all-zero spacers.  Returns
    the (greater, equal, less) wires.  Stage ``i`` (bit ``i``) only switches
    while the request from the stage above is high, so stages below the
    first differing bit stay at spacer.
    """
    w = len(a)
    if len(c) != w or w < 1:
        raise ValueError("comparator operands must have equal, non-zero width")
    if any(x.spacer is not ALL0 for x in list(a) + list(c)):
        raise UnknownPolarity("comparator operands need all-zero spacers")
    gts, lts = [], []
    req = None
    for i in reversed(range(w)):
        b.block(f"{stage_prefix}{i}")
        x, y = a[i], c[i]
        if req is None:
            gts.append(b.g(K.AND2, [x.pos, y.neg], f"gt{i}"))
            lts.append(b.g(K.AND2, [x.neg, y.pos], f"lt{i}"))
            req = b.g(K.AO22, [x.pos, y.pos, x.neg, y.neg], f"req{i}")
        else:
            gts.append(b.g(K.AND3, [req, x.pos, y.neg], f"gt{i}"))
            lts.append(b.g(K.AND3, [req, x.neg, y.pos], f"lt{i}"))
            e1 = b.g(K.AND3, [req, x.pos, y.pos], f"eq{i}_1")
            e0 = b.g(K.AND3, [req, x.neg, y.neg], f"eq{i}_0")
            req = b.g(K.OR2, [e1, e0], f"req{i}")
    b.block("cmp_out")
    greater = _or_tree(b, gts, "greater")
    less = _or_tree(b, lts, "less")
    b.block(f"{stage_prefix}0")
    equal = b.g(K.BUF, [req], "equal")
    b.block(None)
    return greater, equal, less


def build_comparator(w: int):
    """(netlist, binding, block_map); PIs ``a{i}``, ``b{i}`` LSB first; POs gt, eq, lt."""
    b = DualRailBuilder({"block": f"comparator{w}"})
    a = [b.pi(f"a{i}") for i in range(w)]
    c = [b.pi(f"b{i}") for i in range(w)]
    outs = comparator_into(b, a, c)
    for o in outs:
        b.nb.po(o)
    nl = b.build()
    return nl, b.binding(), dict(b.block_map)


# -- completion detection ----------------------------------------------------

def completion_detector_into(b: DualRailBuilder, po_pairs: Sequence[RailPair],
                             po_1of3: Sequence[int] | None, t_d: int) -> tuple[int, int]:
    """Reduced completion detector; returns (done_raw, done).

    Each output pair contributes OR (all-zero spacer) or NAND (all-one
    spacer) of its rails, a 1-of-n group contributes the OR of its wires.
    The AND of all validity wires is ``done_raw``; ``done`` follows it
    through a delay element with zero rise and ``t_d`` fall delay.
    """
    b.block("cd")
    valid = []
    for k, rp in enumerate(po_pairs):
        if rp.spacer is ALL0:
            valid.append(b.g(K.OR2, [rp.pos, rp.neg], f"cd_v{k}"))
        elif rp.spacer is ALL1:
            valid.append(b.g(K.NAND2, [rp.pos, rp.neg], f"cd_v{k}"))
        else:
            raise UnknownPolarity(f"output pair {k} has no resolved spacer polarity")
    if po_1of3:
        valid.append(_or_tree(b, po_1of3, "cd_group"))
    if not valid:
        raise ValueError("completion detector needs at least one output")
    while len(valid) > 1:
        valid = [g[0] if len(g) == 1 else b.g(and_kind(len(g)), g) for g in _groups(valid)]
    done_raw = valid[0]
    done = b.nb.gate(K.DELAY, [done_raw], name="done", delay=(0, int(t_d)))
    b.block(None)
    return done_raw, done


def build_completion_detector(po_pairs: Sequence[tuple[int, int, SpacerPolarity | None]],
                              n_1of3: int = 0, t_d: int = 0) -> Netlist:
    """Stand-alone detector over fresh inputs; POs ``done_raw``, ``done``."""
    b = DualRailBuilder({"block": "cd"})
    pairs = []
    for k, (_, _, pol) in enumerate(po_pairs):
        if pol is None:
            raise UnknownPolarity(f"output pair {k} has no resolved spacer polarity")
        pairs.append(b.pi(f"o{k}", SpacerPolarity(pol)))
    wires = [b.wire_pi(f"g{k}") for k in range(n_1of3)]
    done_raw, done = completion_detector_into(b, pairs, wires, t_d)
    b.nb.po(done_raw)
    b.nb.po(done)
    return b.build()


# -- clause block ------------------------------------------------------------------

def build_clause_block(F: int) -> Netlist:
    """Single-rail clause: OR masks per literal, AND tree over features.

    PIs are ``f0..f{F-1}`` then ``e0..e{2F-1}``; the PO is ``clause``.  The
    complement literal uses an inverter that becomes a rail swap once the
    block is dual-rail mapped.
    """
    if F < 1:
        raise ValueError("F must be >= 1")
    nb = NetlistBuilder({"block": "clause"})
    f = [nb.pi(f"f{m}") for m in range(F)]
    e = [nb.pi(f"e{i}") for i in range(2 * F)]
    terms = []
    for m in range(F):
        nf = nb.gate(K.INV, [f[m]], name=f"nf{m}")
        lit = nb.gate(K.OR2, [e[2 * m], f[m]], name=f"l{2 * m}")
        nlit = nb.gate(K.OR2, [e[2 * m + 1], nf], name=f"l{2 * m + 1}")
        terms.append(nb.gate(K.AND2, [lit, nlit], name=f"t{m}"))
    level = 0
    while len(terms) > 1:
        groups = _groups(terms)
        terms = [g[0] if len(g) == 1 else nb.gate(and_kind(len(g)), g, name=f"a{level}_{k}")
                 for k, g in enumerate(groups)]
        level += 1
    out = terms[0]
    nb.rename(out, "clause")
    nb.po(out)
    return nb.build()


def map_clause_block(F: int) -> tuple[Netlist, DualRailBinding]:
    """Dual-rail clause block after negative-gate optimisation (inverting spacer)."""
    nl, binding = direct_map(build_clause_block(F))
    return negative_gate_optimize(nl, binding)


def path_inversions(netlist: Netlist) -> set[int]:
    """Set of inverting-stage counts over every PI-to-PO path."""
    counts = path_inversion_counts(netlist)
    out: set[int] = set()
    for p in netlist.pos:
        out |= counts[p]
    return out


# -- full datapath -----------------------------------------------------------------

@dataclass(frozen=True)
class DatapathBundle:
    netlist: Netlist
    binding: DualRailBinding
    F: int
    C: int
    f_rails: tuple[tuple[int, int], ...]
    e_rails: tuple[tuple[tuple[int, int], ...], ...]
    po_group: Mapping[str, int]
    block_map: Mapping[int, str]
    done_raw: int
    meta: Mapping[str, str] = field(default_factory=dict)

    @property
    def outcome_nets(self) -> tuple[int, int, int]:
        return self.po_group["greater"], self.po_group["equal"], self.po_group["less"]

    @property
    def done(self) -> int:
        return self.po_group["done"]

    @property
    def width(self) -> int:
        return (self.C // 2).bit_length()

    def pi_vector(self, f: Sequence[int], exclude: np.ndarray) -> np.ndarray:
        """Valid primary-input levels (in ``netlist.pis`` order) for one operand."""
        ex = np.asarray(exclude, dtype=np.int8)
        level = {}
        for m, (p, n) in enumerate(self.f_rails):
            level[p], level[n] = int(f[m]), 1 - int(f[m])
        for j, row in enumerate(self.e_rails):
            for i, (p, n) in enumerate(row):
                level[p], level[n] = int(ex[j, i]), 1 - int(ex[j, i])
        return np.array([level[p] for p in self.netlist.pis], dtype=np.int8)

    def pi_words(self, features: np.ndarray, exclude: np.ndarray) -> np.ndarray:
        """Bit-packed PI words for many operands (see ``eval_bitparallel``).

        ``features`` is ``(N, F)``; ``exclude`` is ``(C, 2F)`` or ``(N, C, 2F)``.
        """
        f = np.asarray(features, dtype=bool)
        ex = np.asarray(exclude, dtype=bool)
        n = f.shape[0]
        if ex.ndim == 2:
            ex = np.broadcast_to(ex, (n,) + ex.shape)
        col = {}
        for m, (p, q) in enumerate(self.f_rails):
            col[p], col[q] = f[:, m], ~f[:, m]
        for j, row in enumerate(self.e_rails):
            for i, (p, q) in enumerate(row):
                col[p], col[q] = ex[:, j, i], ~ex[:, j, i]
        bits = np.stack([col[p] for p in self.netlist.pis])
        return pack_bits(bits)

    def spacer_vector(self) -> np.ndarray:
        pol = self.binding.net_polarity()
        return np.array([pol[p].value_bit for p in self.netlist.pis], dtype=np.int8)

    def gate_counts_by_block(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for label in self.block_map.values():
            group = _block_group(label)
            counts[group] = counts.get(group, 0) + 1
        return dict(sorted(counts.items()))

    # -- serialization ---------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "netlist": self.netlist.to_dict(),
            "binding": self.binding.to_list(),
            "inverting": self.binding.inverting,
            "F": self.F, "C": self.C,
            "pi_groups": {"f": [list(x) for x in self.f_rails],
                          "e": [[list(x) for x in row] for row in self.e_rails]},
            "po_group": dict(self.po_group),
            "done_raw": self.done_raw,
            "block_map": {str(k): v for k, v in sorted(self.block_map.items())},
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DatapathBundle":
        allowed = {"netlist", "binding", "inverting", "F", "C", "pi_groups", "po_group",
                   "done_raw", "block_map", "meta"}
        extra = set(d) - allowed
        if extra:
            raise ValueError(f"unknown bundle field(s): {sorted(extra)}")
        return cls(
            netlist=Netlist.from_dict(d["netlist"]),
            binding=DualRailBinding.from_list(d["binding"], bool(d.get("inverting", False))),
            F=int(d["F"]), C=int(d["C"]),
            f_rails=tuple(tuple(x) for x in d["pi_groups"]["f"]),
            e_rails=tuple(tuple(tuple(x) for x in row) for row in d["pi_groups"]["e"]),
            po_group={k: int(v) for k, v in d["po_group"].items()},
            block_map={int(k): v for k, v in d["block_map"].items()},
            done_raw=int(d["done_raw"]),
            meta=dict(d.get("meta", {})),
        )

    def save(self, directory) -> Path:
        path = Path(directory)
        path.mkdir(parents=True, exist_ok=True)
        out = path / "bundle.json"
        out.write_text(json.dumps(self.to_dict()) + "\n")
        return out

    @classmethod
    def load(cls, directory) -> "DatapathBundle":
        path = Path(directory)
        if path.is_dir():
            path = path / "bundle.json"
        return cls.from_dict(json.loads(path.read_text()))


def _block_group(label: str) -> str:
    """Coarse block group of a label: clause, popcount, comparator, cd."""
    head = label.split("/", 1)[0]
    if head.startswith("clause"):
        return "clause"
    if head.startswith("pc"):
        return "popcount"
    if head.startswith("cmp"):
        return "comparator"
    return head


def block_counts(block_map: Mapping[int, str], prefix: str = "") -> dict[str, int]:
    """Number of distinct HA/FA/OR/spinv block instances under ``prefix``."""
    kinds = {"ha": set(), "fa": set(), "or": set(), "spinv": set()}
    for label in block_map.values():
        if not label.startswith(prefix):
            continue
        leaf = label[len(prefix):]
        for k in ("spinv", "ha", "fa", "or"):
            if leaf.startswith(k) and leaf[len(k):].isdigit():
                kinds[k].add(leaf)
                break
    return {k: len(v) for k, v in kinds.items()}


def _restrict(block_map: Mapping[int, str], nl: Netlist) -> dict[int, str]:
    ids = {g.id for g in nl.gates}
    return {k: v for k, v in block_map.items() if k in ids}


def _prune_dead(nl: Netlist) -> Netlist:
    """Drop gates that drive nothing observable."""
    from .netlist import build

    gates = list(nl.gates)
    while True:
        used = set(nl.pos)
        for g in gates:
            used.update(g.inputs)
        kept = [g for g in gates if g.output in used]
        if len(kept) == len(gates):
            break
        gates = kept
    if len(gates) == len(nl.gates):
        return nl
    live = set(nl.pis) | set(nl.pos) | {g.output for g in gates}
    for g in gates:
        live.update(g.inputs)
    return build(gates, nl.pis, nl.pos, nets=[n for n in nl.nets if n.id in live], meta=nl.meta)


def build_inference_datapath(config: TmConfig | tuple[int, int], t_d: int | None = None,
                             delay_model=None) -> DatapathBundle:
    """Clause blocks, two population counts, comparator and completion detector.

    Only the shape (F, C) of ``config`` matters: exclude bits are primary
    inputs.  The clause outputs carry all-one spacers; the first adder layer
    of each count uses the inverting cell style so counts leave with all-zero
    spacers.  ``t_d`` sets the fall delay of the ``done`` element; by default
    it is sized by :func:`selftimed.timing.size_done_delay` for
    ``delay_model`` (the nominal model when ``None``).
    """
    F, C = (config.F, config.C) if isinstance(config, TmConfig) else config
    if C < 2 or C % 2:
        raise ValueError("C must be even and >= 2")
    clause_nl, clause_b = map_clause_block(F)
    b = DualRailBuilder({"block": "tm-datapath", "F": str(F), "C": str(C)})
    f = [b.pi(f"f{m}") for m in range(F)]
    e = [[b.pi(f"e{j}_{i}") for i in range(2 * F)] for j in range(C)]
    clause_out = []
    for j in range(C):
        b.block(f"clause{j}")
        clause_out.append(_instantiate(b, clause_nl, clause_b, f + e[j], f"c{j}"))
    b.block(None)
    counts = []
    for name, xs in (("pcpos", clause_out[:C // 2]), ("pcneg", clause_out[C // 2:])):
        b.prefix = f"{name}/"
        ys = popcount_into(b, xs, ALL0)
        b.prefix = ""
        for i, y in enumerate(ys):
            b.signals[f"{name}_y{i}"] = y
        counts.append(ys)
    greater, equal, less = comparator_into(b, counts[0], counts[1])
    for n, name in ((greater, "greater"), (equal, "equal"), (less, "less")):
        b.nb.po(n)
    done_raw, done = completion_detector_into(b, [], [greater, equal, less], t_d or 0)
    b.nb.po(done)
    nl = b.build()
    binding = b.binding(inverting=False)
    compute_spacer_polarity(nl, binding)
    bundle = DatapathBundle(
        netlist=nl, binding=binding, F=F, C=C,
        f_rails=tuple((x.pos, x.neg) for x in f),
        e_rails=tuple(tuple((x.pos, x.neg) for x in row) for row in e),
        po_group={"greater": greater, "equal": equal, "less": less, "done": done},
        block_map=dict(b.block_map), done_raw=done_raw, meta=dict(nl.meta))
    if t_d is None:
        from .timing import size_done_delay

        bundle = with_done_delay(bundle, size_done_delay(bundle, delay_model))
    return bundle


def with_done_delay(bundle: DatapathBundle, t_d: int) -> DatapathBundle:
    """Copy of the bundle with the ``done`` element's fall delay set to ``t_d``."""
    from dataclasses import replace

    from .netlist import build

    nl = bundle.netlist
    gates = [replace(g, delay=(0, int(t_d))) if g.output == bundle.done else g for g in nl.gates]
    meta = dict(nl.meta)
    meta["t_d"] = str(int(t_d))
    new = build(gates, nl.pis, nl.pos, nets=nl.nets, meta=meta)
    return replace(bundle, netlist=new, meta=meta)


def _instantiate(b: DualRailBuilder, sub: Netlist, sub_binding: DualRailBinding,
                 inputs: Sequence[RailPair], name: str) -> RailPair:
    """Copy a mapped block into ``b`` with its rail-pair PIs bound to ``inputs``."""
    net_map: dict[int, int] = {}
    for k, rp in enumerate(inputs):
        net_map[sub.pis[2 * k]] = rp.pos
        net_map[sub.pis[2 * k + 1]] = rp.neg
    for gid in sub.topo_order:
        g = sub.gate_by_id[gid]
        out = b.g(g.kind, [net_map[i] for i in g.inputs], f"{name}_{sub.name_of(g.output)}")
        net_map[g.output] = out
    pos, neg = sub.pos
    pol = sub_binding.net_polarity().get(pos, ALL0)
    rp = RailPair(net_map[pos], net_map[neg], pol)
    b.signals[name] = rp
    return rp


# -- functional evaluation ---------------------------------------------------------

def outcome_codes(bundle: DatapathBundle, features: np.ndarray, exclude: np.ndarray) -> np.ndarray:
    """Zero-delay 1-of-3 outcome per operand: 0 greater, 1 equal, 2 less, -1 invalid."""
    n = np.asarray(features).shape[0]
    words = bundle.pi_words(features, exclude)
    vals = eval_bitparallel(bundle.netlist, words)
    pos_of = {int(nid): k for k, nid in enumerate(bundle.netlist.compiled.net_ids)}
    rows = [vals[pos_of[net]] for net in bundle.outcome_nets]
    bits = np.stack([_unpack(r, n) for r in rows])
    code = np.full(n, -1, dtype=np.int8)
    one_hot = bits.sum(axis=0) == 1
    code[one_hot] = np.argmax(bits[:, one_hot], axis=0)
    return code


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """``(rows, n)`` booleans -> ``(rows, ceil(n/64))`` uint64, element ``j`` at bit ``j % 64``."""
    bits = np.asarray(bits, dtype=bool)
    pad = (-bits.shape[1]) % 64
    if pad:
        bits = np.concatenate([bits, np.zeros((bits.shape[0], pad), bool)], axis=1)
    packed = np.packbits(bits, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64)


def _unpack(words: np.ndarray, n: int) -> np.ndarray:
    raw = np.ascontiguousarray(words.astype("<u8")).view(np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def decode_outcome(values: Mapping[int, int] | np.ndarray, bundle: DatapathBundle) -> Outcome | None:
    bits = [int(values[n]) for n in bundle.outcome_nets]
    if sum(bits) != 1:
        return None
    return OUTCOME_CODES[bits.index(1)]
