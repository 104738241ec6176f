"""Single-rail to dual-rail mapping passes and spacer-polarity bookkeeping.

Encoding: logical 0 is ``{pos=0, neg=1}`` and logical 1 is ``{pos=1, neg=0}``.
The spacer is ``{0, 0}`` (:attr:`SpacerPolarity.ALL0`) or ``{1, 1}``
(:attr:`SpacerPolarity.ALL1`); the remaining codeword is forbidden.

A gate that is negative-unate (INV, NAND, NOR, AOI, OAI) flips the spacer
polarity of the signal it drives.  All inputs of a gate must share one
polarity, otherwise the gate may switch non-monotonically between spacer and
valid phases; :func:`compute_spacer_polarity` reports such parity conflicts
and :func:`repair_spacer_parity` fixes them with spacer inverters.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .netlist import Gate, GateKind, Net, Netlist, build, check_unate_only


class NonUnateGate(ValueError):
    pass


class ParityConflict(ValueError):
    """A gate sees inputs with different spacer polarities."""

    def __init__(self, message: str, net: int | None = None, gate: int | None = None):
        super().__init__(message)
        self.net = net
        self.gate = gate


class SpacerPolarity(str, enum.Enum):
    ALL0 = "ALL0"
    ALL1 = "ALL1"

    @property
    def value_bit(self) -> int:
        """Logic level of each rail during the spacer."""
        return 1 if self is SpacerPolarity.ALL1 else 0

    def flipped(self) -> "SpacerPolarity":
        return SpacerPolarity.ALL0 if self is SpacerPolarity.ALL1 else SpacerPolarity.ALL1


ALL0, ALL1 = SpacerPolarity.ALL0, SpacerPolarity.ALL1


@dataclass(frozen=True)
class RailPair:
    pos: int
    neg: int
    spacer: SpacerPolarity = ALL0

    def encode(self, value: int | None) -> tuple[int, int]:
        """Rail levels for a logical value, or for the spacer when ``None``."""
        if value is None:
            s = self.spacer.value_bit
            return s, s
        return (1, 0) if value else (0, 1)

    def swapped(self) -> "RailPair":
        return RailPair(self.neg, self.pos, self.spacer)


@dataclass(frozen=True)
class DualRailBinding:
    """Logical signal name -> rail pair, plus the block's overall spacer parity."""

    signals: Mapping[str, RailPair] = field(default_factory=dict)
    inverting: bool = False

    def __getitem__(self, name: str) -> RailPair:
        return self.signals[name]

    def __contains__(self, name: str) -> bool:
        return name in self.signals

    def rail_owner(self) -> dict[int, tuple[str, str]]:
        """Net -> (signal, "pos" | "neg") for the first signal owning it."""
        owner: dict[int, tuple[str, str]] = {}
        for name, rp in self.signals.items():
            owner.setdefault(rp.pos, (name, "pos"))
            owner.setdefault(rp.neg, (name, "neg"))
        return owner

    def net_polarity(self) -> dict[int, SpacerPolarity]:
        pol: dict[int, SpacerPolarity] = {}
        for rp in self.signals.values():
            pol.setdefault(rp.pos, rp.spacer)
            pol.setdefault(rp.neg, rp.spacer)
        return pol

    def to_list(self) -> list[dict]:
        return [{"signal": n, "pos": rp.pos, "neg": rp.neg, "spacer": rp.spacer.value}
                for n, rp in self.signals.items()]

    @classmethod
    def from_list(cls, items: Iterable[Mapping], inverting: bool = False) -> "DualRailBinding":
        sig = {}
        for it in items:
            extra = set(it) - {"signal", "pos", "neg", "spacer"}
            if extra:
                raise ValueError(f"unknown binding field(s): {sorted(extra)}")
            sig[str(it["signal"])] = RailPair(int(it["pos"]), int(it["neg"]), SpacerPolarity(it["spacer"]))
        return cls(sig, inverting)


# -- polarity analysis -------------------------------------------------------

def _propagate(netlist: Netlist, pi_pol: Mapping[int, SpacerPolarity]):
    """Forward polarity propagation; returns (net polarity, conflicts).

    A conflicting gate takes the polarity of its first input so propagation
    can continue; conflicts are listed in topological order.
    """
    pol: dict[int, SpacerPolarity] = {}
    for p in netlist.pis:
        pol[p] = pi_pol.get(p, ALL0)
    conflicts: list[Gate] = []
    pending = [netlist.gate_by_id[g] for g in netlist.topo_order]
    for _ in range(len(pending) + 1):
        deferred = []
        for g in pending:
            if not g.kind.unate:
                raise NonUnateGate(f"gate {g.id} ({g.kind.value}) is not unate")
            ins = [pol.get(i) for i in g.inputs]
            known = [p for p in ins if p is not None]
            if len(known) < len(ins) and g.kind.sequential and known:
                ins = known
            elif len(known) < len(ins):
                deferred.append(g)
                continue
            first = ins[0]
            if any(p is not first for p in ins):
                conflicts.append(g)
            pol[g.output] = first.flipped() if g.kind.inverting else first
        if not deferred or len(deferred) == len(pending):
            pending = deferred
            break
        pending = deferred
    for g in pending:  # unreachable from primary inputs
        pol.setdefault(g.output, ALL0)
    return pol, conflicts


def _pi_polarity(netlist: Netlist, binding: DualRailBinding | None,
                 pi_polarity: Mapping | None) -> dict[int, SpacerPolarity]:
    out: dict[int, SpacerPolarity] = {}
    if binding is not None:
        pis = set(netlist.pis)
        for name, rp in binding.signals.items():
            for r in (rp.pos, rp.neg):
                if r in pis:
                    out.setdefault(r, rp.spacer)
    if pi_polarity:
        for key, p in pi_polarity.items():
            p = SpacerPolarity(p)
            if isinstance(key, str):
                rp = binding[key]
                out[rp.pos] = out[rp.neg] = p
            else:
                out[key] = p
    return out


def compute_spacer_polarity(dual_rail: Netlist, binding: DualRailBinding | None = None,
                            pi_polarity: Mapping | None = None) -> dict[int, SpacerPolarity]:
    """Spacer polarity of every net, or :class:`ParityConflict`.

    Primary-input polarities come from ``binding`` and may be overridden by
    ``pi_polarity`` (signal name or rail net -> polarity); unlisted inputs are
    ``ALL0``.
    """
    pol, conflicts = _propagate(dual_rail, _pi_polarity(dual_rail, binding, pi_polarity))
    if conflicts:
        g = conflicts[0]
        detail = ", ".join(f"net {i}={pol[i].value}" for i in g.inputs)
        raise ParityConflict(
            f"net {g.output} (gate {g.id}, {g.kind.value}) is reached with conflicting spacer "
            f"polarities ({detail}); a spacer inverter is missing", net=g.output, gate=g.id)
    return pol


def find_parity_conflicts(dual_rail: Netlist, binding: DualRailBinding | None = None,
                          pi_polarity: Mapping | None = None) -> list[Gate]:
    return _propagate(dual_rail, _pi_polarity(dual_rail, binding, pi_polarity))[1]


def path_inversion_counts(netlist: Netlist) -> dict[int, set[int]]:
    """Net -> set of inverting-stage counts over all paths from primary inputs."""
    counts: dict[int, set[int]] = {p: {0} for p in netlist.pis}
    for gid in netlist.topo_order:
        g = netlist.gate_by_id[gid]
        acc: set[int] = set()
        for i in g.inputs:
            acc |= counts.get(i, set())
        step = 1 if g.kind.inverting else 0
        counts[g.output] = {c + step for c in acc}
    return counts


# -- mutable editing form ------------------------------------------------------

class _Edit:
    """Mutable copy of a netlist that passes rewrite in place."""

    def __init__(self, nl: Netlist):
        self.gates: dict[int, list] = {g.id: [g.kind, list(g.inputs), g.output] for g in nl.gates}
        self.delays = {g.id: g.delay for g in nl.gates if g.delay is not None}
        self.pis = list(nl.pis)
        self.pos = list(nl.pos)
        self.names = {n.id: n.name for n in nl.nets}
        self.meta = dict(nl.meta)
        self.next_net = max(self.names, default=-1) + 1
        self.next_gate = max(self.gates, default=-1) + 1

    def driver(self) -> dict[int, int]:
        return {g[2]: gid for gid, g in self.gates.items()}

    def uses(self) -> dict[int, int]:
        u: dict[int, int] = {}
        for g in self.gates.values():
            for i in g[1]:
                u[i] = u.get(i, 0) + 1
        for p in self.pos:
            u[p] = u.get(p, 0) + 1
        return u

    def new_net(self, name: str | None = None) -> int:
        n = self.next_net
        self.next_net += 1
        self.names[n] = name
        return n

    def new_gate(self, kind: GateKind, inputs: list[int], output: int) -> int:
        gid = self.next_gate
        self.next_gate += 1
        self.gates[gid] = [kind, list(inputs), output]
        return gid

    def substitute(self, old: int, new: int) -> None:
        for g in self.gates.values():
            g[1] = [new if i == old else i for i in g[1]]
        self.pos = [new if p == old else p for p in self.pos]

    def to_netlist(self) -> Netlist:
        used = set(self.pis) | set(self.pos)
        for g in self.gates.values():
            used.update(g[1])
            used.add(g[2])
        nets = [Net(n, self.names.get(n)) for n in sorted(used)]
        gates = [Gate(gid, g[0], tuple(g[1]), g[2], self.delays.get(gid))
                 for gid, g in sorted(self.gates.items())]
        return build(gates, self.pis, self.pos, nets=nets, meta=self.meta)


def _prune_binding(binding: DualRailBinding, nl: Netlist, **changes) -> DualRailBinding:
    live = {n.id for n in nl.nets}
    sig = {k: v for k, v in binding.signals.items() if v.pos in live and v.neg in live}
    return replace(binding, signals=sig, **changes)


def _with_polarity(binding: DualRailBinding, nl: Netlist) -> DualRailBinding:
    pol, _ = _propagate(nl, _pi_polarity(nl, binding, None))
    sig = {k: RailPair(v.pos, v.neg, pol.get(v.pos, v.spacer)) for k, v in binding.signals.items()}
    pis = set(nl.pis)
    pi_pols = {pol[p] for p in nl.pis}
    po_pols = {pol[p] for p in nl.pos if p not in pis}
    inverting = len(pi_pols) == 1 and len(po_pols) == 1 and pi_pols != po_pols
    return DualRailBinding(sig, inverting)


# -- direct mapping ------------------------------------------------------------

def direct_map(single_rail: Netlist, pi_polarity: Mapping | None = None) -> tuple[Netlist, DualRailBinding]:
    """Map a unate combinational netlist onto dual-rail gate pairs.

    Each gate becomes a pair: a positive kind ``K`` yields ``K`` over the
    positive rails and its De Morgan dual over the negative rails; an
    inverting kind yields the same pair with the rails swapped.  ``INV`` and
    ``BUF`` cost no gates (rail swap / rail alias).  Rails are named
    ``<signal>__p`` and ``<signal>__n``.
    """
    bad = check_unate_only(single_rail)
    if bad:
        raise NonUnateGate("non-unate gate(s) cannot be dual-rail mapped: "
                           + ", ".join(f"{g.id} ({g.kind.value})" for g in bad))
    if not single_rail.is_combinational():
        raise ValueError("direct mapping needs a combinational netlist")

    nets: list[Net] = []
    gates: list[Gate] = []
    rails: dict[int, tuple[int, int]] = {}
    names: dict[int, str] = {}

    def signame(n: int) -> str:
        return single_rail.name_of(n)

    def new_net(name: str) -> int:
        nets.append(Net(len(nets), name))
        return len(nets) - 1

    pis = []
    for p in single_rail.pis:
        pos, neg = new_net(f"{signame(p)}__p"), new_net(f"{signame(p)}__n")
        rails[p] = (pos, neg)
        names[p] = signame(p)
        pis += [pos, neg]
    for gid in single_rail.topo_order:
        g = single_rail.gate_by_id[gid]
        names[g.output] = signame(g.output)
        if g.kind is GateKind.BUF:
            rails[g.output] = rails[g.inputs[0]]
            continue
        if g.kind is GateKind.INV:
            p, n = rails[g.inputs[0]]
            rails[g.output] = (n, p)
            continue
        base = g.kind.negated() if g.kind.inverting else g.kind
        pos_net = new_net(f"{signame(g.output)}__p")
        neg_net = new_net(f"{signame(g.output)}__n")
        pos_in = tuple(rails[i][0] for i in g.inputs)
        neg_in = tuple(rails[i][1] for i in g.inputs)
        pair = [(base, pos_in), (base.dual(), neg_in)]
        if g.kind.inverting:
            pair.reverse()
        gates.append(Gate(len(gates), pair[0][0], pair[0][1], pos_net))
        gates.append(Gate(len(gates), pair[1][0], pair[1][1], neg_net))
        rails[g.output] = (pos_net, neg_net)
    pos = [r for p in single_rail.pos for r in rails[p]]
    meta = dict(single_rail.meta)
    meta["style"] = "dual-rail"
    nl = build(gates, pis, pos, nets=nets, meta=meta)
    binding = DualRailBinding({names[s]: RailPair(*rails[s]) for s in rails})
    pin = _pi_polarity(nl, binding, pi_polarity) if pi_polarity else {}
    if pin:
        sig = {k: RailPair(v.pos, v.neg, pin.get(v.pos, v.spacer)) for k, v in binding.signals.items()}
        binding = DualRailBinding(sig)
    return nl, _with_polarity(binding, nl)


# -- spacer inverters ----------------------------------------------------------

def _add_spinv(ed: _Edit, rp: RailPair, name: str) -> RailPair:
    pos = ed.new_net(f"{name}__p")
    neg = ed.new_net(f"{name}__n")
    ed.new_gate(GateKind.INV, [rp.neg], pos)
    ed.new_gate(GateKind.INV, [rp.pos], neg)
    return RailPair(pos, neg, rp.spacer.flipped())


def insert_spacer_inverter(dual_rail: Netlist, binding: DualRailBinding, signal: str,
                           consumers: Iterable[int] | None = None) -> tuple[Netlist, DualRailBinding]:
    """Flip the spacer of ``signal`` with two inverters and a rail swap.

    The new rails carry the same logical value; consumers (all gates and
    primary outputs by default, or only the given gate ids) are redirected
    to them.  The binding maps ``signal`` to the new pair and keeps the old
    pair as ``<signal>__pre``.
    """
    old = binding[signal]
    ed = _Edit(dual_rail)
    new = _add_spinv(ed, old, f"{signal}__si")
    targets = set(ed.gates) - set(range(ed.next_gate - 2, ed.next_gate)) if consumers is None else set(consumers)
    for gid in targets:
        g = ed.gates[gid]
        g[1] = [new.pos if i == old.pos else new.neg if i == old.neg else i for i in g[1]]
    if consumers is None:
        ed.pos = [new.pos if p == old.pos else new.neg if p == old.neg else p for p in ed.pos]
    nl = ed.to_netlist()
    sig = dict(binding.signals)
    sig[f"{signal}__pre"] = old
    sig[signal] = new
    return nl, _with_polarity(DualRailBinding(sig, binding.inverting), nl)


def repair_spacer_parity(dual_rail: Netlist, binding: DualRailBinding,
                         max_rounds: int = 10_000) -> tuple[Netlist, DualRailBinding, list[str]]:
    """Insert spacer inverters until no gate sees mixed input polarities.

    For each conflicting gate (in topological order) the inputs holding the
    minority polarity are routed through a spacer inverter; ties keep the
    ``ALL0`` inputs.  Returns the repaired netlist, binding and the names of
    the signals that received an inverter.
    """
    nl, b = dual_rail, binding
    inserted: list[str] = []
    cache: dict[str, RailPair] = {}
    for _ in range(max_rounds):
        pol, conflicts = _propagate(nl, _pi_polarity(nl, b, None))
        if not conflicts:
            return nl, b, inserted
        g = conflicts[0]
        ins = list(dict.fromkeys(g.inputs))
        n1 = sum(pol[i] is ALL1 for i in ins)
        keep = ALL1 if n1 > len(ins) - n1 else ALL0
        owner = b.rail_owner()
        ed = _Edit(nl)
        sig = dict(b.signals)
        redirect: dict[int, int] = {}
        for i in ins:
            if pol[i] is keep:
                continue
            if i not in owner:
                raise ParityConflict(f"net {i} is not a bound rail; cannot insert a spacer inverter", net=i)
            name, _rail = owner[i]
            rp = b[name]
            if name not in cache:
                cache[name] = _add_spinv(ed, rp, f"{name}__si")
                sig[f"{name}__si"] = cache[name]
                inserted.append(name)
            new = cache[name]
            redirect[rp.pos] = new.pos
            redirect[rp.neg] = new.neg
        # redirect the conflicting gate and its rail partner (same signal, other rail)
        partners = {g.id}
        owner_out = owner.get(g.output)
        if owner_out is not None:
            rp_out = b[owner_out[0]]
            drv = ed.driver()
            for r in (rp_out.pos, rp_out.neg):
                if r in drv:
                    partners.add(drv[r])
        for gid in partners:
            eg = ed.gates[gid]
            eg[1] = [redirect.get(i, i) for i in eg[1]]
        nl = ed.to_netlist()
        b = _with_polarity(DualRailBinding(sig, b.inverting), nl)
    raise RuntimeError("spacer-parity repair did not converge")


# -- negative gate optimization ----------------------------------------------

_FUSE = {  # (outer family, outer inverting, inner family) -> (kind for 1 inner, kind for 2 inners)
    ("OR", False, "AND"): (GateKind.AO21, GateKind.AO22),
    ("OR", True, "AND"): (GateKind.AOI21, GateKind.AOI22),
    ("AND", False, "OR"): (GateKind.OA21, GateKind.OA22),
    ("AND", True, "OR"): (GateKind.OAI21, GateKind.OAI22),
}


def _collapse_inverters(ed: _Edit) -> bool:
    changed = False
    for gid in sorted(ed.gates):
        g = ed.gates.get(gid)
        if g is None or g[0] is not GateKind.INV:
            continue
        x = g[1][0]
        drv = ed.driver()
        h_id = drv.get(x)
        if h_id is None or ed.uses().get(x, 0) != 1:
            continue
        h = ed.gates[h_id]
        kind = h[0]
        if kind.sequential or not kind.unate:
            continue
        if kind is GateKind.INV:
            y = h[1][0]
            del ed.gates[gid], ed.gates[h_id]
            ed.substitute(g[2], y)
        elif kind is GateKind.BUF:
            h[0] = GateKind.INV
            h[2] = g[2]
            del ed.gates[gid]
        else:
            h[0] = kind.negated()
            h[2] = g[2]
            del ed.gates[gid]
        changed = True
    return changed


def _fuse_cones(ed: _Edit) -> bool:
    changed = False
    for gid in sorted(ed.gates):
        g = ed.gates.get(gid)
        if g is None or g[0].arity != 2 or g[0].family not in ("AND", "OR"):
            continue
        inner_fam = "AND" if g[0].family == "OR" else "OR"
        drv, uses = ed.driver(), ed.uses()
        inner = []
        for i in g[1]:
            h_id = drv.get(i)
            if (h_id is not None and h_id not in inner and uses.get(i, 0) == 1
                    and ed.gates[h_id][0].family == inner_fam and ed.gates[h_id][0].arity == 2
                    and not ed.gates[h_id][0].inverting):
                inner.append(h_id)
        if not inner:
            continue
        kind21, kind22 = _FUSE[(g[0].family, g[0].inverting, inner_fam)]
        if len(inner) == 2:
            ins = ed.gates[inner[0]][1] + ed.gates[inner[1]][1]
            kind = kind22
        else:
            h = ed.gates[inner[0]]
            other = [i for i in g[1] if i != h[2]]
            ins = h[1] + other
            kind = kind21
        for h_id in inner:
            del ed.gates[h_id]
        g[0], g[1] = kind, list(ins)
        changed = True
    return changed


def _negative_candidates(nl: Netlist, binding: DualRailBinding) -> list[str]:
    drv = nl.driver
    out = []
    for name, rp in binding.signals.items():
        gp, gn = drv.get(rp.pos), drv.get(rp.neg)
        if gp is None or gn is None or gp.id == gn.id:
            continue
        if gp.kind.complex and gn.kind.complex and not gp.kind.inverting and not gn.kind.inverting:
            out.append(name)
    # one entry per rail pair
    seen, uniq = set(), []
    for name in out:
        key = frozenset((binding[name].pos, binding[name].neg))
        if key not in seen:
            seen.add(key)
            uniq.append(name)
    return uniq


def _convert_pairs(nl: Netlist, binding: DualRailBinding, names: Iterable[str]) -> Netlist:
    ed = _Edit(nl)
    drv = ed.driver()
    for name in names:
        rp = binding[name]
        gp, gn = ed.gates[drv[rp.pos]], ed.gates[drv[rp.neg]]
        (kp, ip), (kn, in_) = (gp[0], gp[1]), (gn[0], gn[1])
        gp[0], gp[1] = kn.negated(), list(in_)
        gn[0], gn[1] = kp.negated(), list(ip)
    return ed.to_netlist()


def _fanin_cone(nl: Netlist, net: int) -> set[int]:
    seen, stack = set(), [net]
    drv = nl.driver
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        g = drv.get(n)
        if g is not None:
            stack.extend(g.inputs)
    return seen


def _negate_complex_pairs(nl: Netlist, binding: DualRailBinding) -> Netlist:
    cands = _negative_candidates(nl, binding)
    if not cands:
        return nl
    pi_pol = _pi_polarity(nl, binding, None)
    base = {g.id for g in _propagate(nl, pi_pol)[1]}
    while cands:
        trial = _convert_pairs(nl, binding, cands)
        new = [g for g in _propagate(trial, pi_pol)[1] if g.id not in base]
        if not new:
            return trial
        cone: set[int] = set()
        for g in new:
            for i in g.inputs:
                cone |= _fanin_cone(trial, i)
        kept = [c for c in cands if binding[c].pos not in cone and binding[c].neg not in cone]
        if len(kept) == len(cands):  # conflict not caused by a candidate
            kept = cands[:-1]
        cands = kept
    return nl


def negative_gate_optimize(dual_rail: Netlist, binding: DualRailBinding) -> tuple[Netlist, DualRailBinding]:
    """Peephole pass towards inverting (negative) gates.

    Applied to convergence:

    * a gate whose only load is an inverter absorbs it (AND+INV -> NAND,
      INV+INV -> wire, ...);
    * two-level AND/OR cones with single-fanout inner gates fuse into
      AO/OA/AOI/OAI complex gates.

    Finally each rail pair driven by non-inverting complex gates is replaced
    by the inverting pair with rails swapped (AO22 -> AOI22 and so on), which
    flips that signal's spacer polarity.  Pairs are only converted where
    every affected gate keeps a single input polarity.
    """
    ed = _Edit(dual_rail)
    while _collapse_inverters(ed) | _fuse_cones(ed):
        pass
    nl = ed.to_netlist()
    b = _prune_binding(binding, nl)
    nl = _negate_complex_pairs(nl, b)
    return nl, _with_polarity(b, nl)
