"""Gate-level netlist model shared by every other module.

A :class:`Netlist` is an immutable directed gate graph.  Nets are identified by
non-negative integers; every net has exactly one driver (a gate output or a
primary input).  The combinational part (every gate except ``C2`` and
``DELAY``) must be acyclic.

Logic values are ``0``, ``1`` and ``X`` (:data:`X`, unknown).  ``X`` propagates
pessimistically: ``AND(0, X) = 0`` but ``AND(1, X) = X``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

X = 2
"""The unknown logic value."""


class NetlistError(ValueError):
    """Base class for structural netlist errors."""


class MultipleDrivers(NetlistError):
    pass


class FloatingNet(NetlistError):
    pass


class ArityMismatch(NetlistError):
    pass


class CombinationalCycle(NetlistError):
    pass


class Oscillation(RuntimeError):
    """Fixed-point evaluation did not settle (unstable sequential loop)."""


class Unate(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NON_UNATE = "non-unate"


# name -> (arity, operator family, inverting)
_KIND_TABLE = {
    "INV": (1, "BUF", True),
    "BUF": (1, "BUF", False),
    "AND2": (2, "AND", False), "AND3": (3, "AND", False), "AND4": (4, "AND", False),
    "OR2": (2, "OR", False), "OR3": (3, "OR", False), "OR4": (4, "OR", False),
    "NAND2": (2, "AND", True), "NAND3": (3, "AND", True), "NAND4": (4, "AND", True),
    "NOR2": (2, "OR", True), "NOR3": (3, "OR", True), "NOR4": (4, "OR", True),
    "AO21": (3, "AO21", False), "AO22": (4, "AO22", False),
    "OA21": (3, "OA21", False), "OA22": (4, "OA22", False),
    "AOI21": (3, "AO21", True), "AOI22": (4, "AO22", True),
    "OAI21": (3, "OA21", True), "OAI22": (4, "OA22", True),
    "C2": (2, "C2", False),
    "XOR2": (2, "XOR", False), "XNOR2": (2, "XOR", True),
    "DELAY": (1, "DELAY", False),
}

_DUAL_FAMILY = {"AND": "OR", "OR": "AND", "AO21": "OA21", "OA21": "AO21",
                "AO22": "OA22", "OA22": "AO22", "BUF": "BUF"}


class GateKind(str, enum.Enum):
    """Cell kinds of the fixed gate library (maximum fan-in 4)."""

    INV = "INV"
    BUF = "BUF"
    AND2 = "AND2"
    AND3 = "AND3"
    AND4 = "AND4"
    OR2 = "OR2"
    OR3 = "OR3"
    OR4 = "OR4"
    NAND2 = "NAND2"
    NAND3 = "NAND3"
    NAND4 = "NAND4"
    NOR2 = "NOR2"
    NOR3 = "NOR3"
    NOR4 = "NOR4"
    AO21 = "AO21"
    AO22 = "AO22"
    OA21 = "OA21"
    OA22 = "OA22"
    AOI21 = "AOI21"
    AOI22 = "AOI22"
    OAI21 = "OAI21"
    OAI22 = "OAI22"
    C2 = "C2"
    XOR2 = "XOR2"
    XNOR2 = "XNOR2"
    DELAY = "DELAY"

    @property
    def arity(self) -> int:
        return _KIND_TABLE[self.value][0]

    @property
    def family(self) -> str:
        return _KIND_TABLE[self.value][1]

    @property
    def inverting(self) -> bool:
        """True for kinds whose output is negative-unate in every input."""
        return _KIND_TABLE[self.value][2] and self.family != "XOR"

    @property
    def unate(self) -> bool:
        return self.family != "XOR"

    @property
    def sequential(self) -> bool:
        return self in (GateKind.C2, GateKind.DELAY)

    @property
    def complex(self) -> bool:
        return self.family in ("AO21", "AO22", "OA21", "OA22")

    def unateness(self) -> tuple[Unate, ...]:
        if not self.unate:
            u = Unate.NON_UNATE
        elif self.inverting:
            u = Unate.NEGATIVE
        else:
            u = Unate.POSITIVE
        return (u,) * self.arity

    def negated(self) -> "GateKind":
        """The kind computing the complement of this kind's function."""
        fam, n = self.family, self.arity
        if fam in ("C2", "DELAY", "XOR"):
            if fam == "XOR":
                return GateKind.XNOR2 if self is GateKind.XOR2 else GateKind.XOR2
            raise ValueError(f"{self.value} has no negated form")
        return _family_kind(fam, n, not self.inverting)

    def dual(self) -> "GateKind":
        """The De Morgan dual (AND<->OR, AO<->OA), keeping the inversion."""
        fam = _DUAL_FAMILY.get(self.family)
        if fam is None:
            raise ValueError(f"{self.value} has no dual")
        return _family_kind(fam, self.arity, self.inverting)


def _family_kind(family: str, arity: int, inverting: bool) -> GateKind:
    for name, (n, fam, inv) in _KIND_TABLE.items():
        if fam == family and n == arity and inv == inverting:
            return GateKind(name)
    raise ValueError(f"no {'inverting ' if inverting else ''}{family} kind of arity {arity}")


def and_kind(n: int, inverting: bool = False) -> GateKind:
    return _family_kind("AND", n, inverting)


def or_kind(n: int, inverting: bool = False) -> GateKind:
    return _family_kind("OR", n, inverting)


KIND_CODES = {k: i for i, k in enumerate(GateKind)}
"""Integer code of each kind used by the compiled simulation kernels."""

# Opcodes shared with the kernels (see _kernels_py / _kernels_c).
OP_BUF, OP_AND, OP_OR, OP_AO21, OP_AO22, OP_OA21, OP_OA22, OP_C2, OP_XOR, OP_DELAY = range(10)
_OP_OF_FAMILY = {"BUF": OP_BUF, "AND": OP_AND, "OR": OP_OR, "AO21": OP_AO21,
                 "AO22": OP_AO22, "OA21": OP_OA21, "OA22": OP_OA22, "C2": OP_C2,
                 "XOR": OP_XOR, "DELAY": OP_DELAY}


@dataclass(frozen=True)
class Gate:
    id: int
    kind: GateKind
    inputs: tuple[int, ...]
    output: int
    delay: tuple[int, int] | None = None
    """(rise, fall) of a ``DELAY`` gate; ``None`` for every other kind."""


@dataclass(frozen=True)
class Net:
    id: int
    name: str | None = None


@dataclass(frozen=True)
class CompiledNetlist:
    """Dense-array form of a netlist consumed by the simulation kernels.

    Net indices are dense positions into ``net_ids``; gate indices are
    positions into ``gate_ids``.
    """

    net_ids: np.ndarray
    gate_ids: np.ndarray
    op: np.ndarray
    inv: np.ndarray
    in_ptr: np.ndarray
    in_idx: np.ndarray
    out: np.ndarray
    fan_ptr: np.ndarray
    fan_idx: np.ndarray
    order: np.ndarray
    pi: np.ndarray
    po: np.ndarray
    driver: np.ndarray

    @property
    def n_nets(self) -> int:
        return len(self.net_ids)

    @property
    def n_gates(self) -> int:
        return len(self.gate_ids)


@dataclass(frozen=True, eq=False)
class Netlist:
    """Validated, immutable gate graph.  Construct with :func:`build`."""

    gates: tuple[Gate, ...]
    nets: tuple[Net, ...]
    pis: tuple[int, ...]
    pos: tuple[int, ...]
    meta: Mapping[str, str] = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, Netlist):
            return NotImplemented
        return (self.gates == other.gates and self.nets == other.nets and self.pis == other.pis
                and self.pos == other.pos and dict(self.meta) == dict(other.meta))

    __hash__ = None

    @cached_property
    def gate_by_id(self) -> dict[int, Gate]:
        return {g.id: g for g in self.gates}

    @cached_property
    def net_by_id(self) -> dict[int, Net]:
        return {n.id: n for n in self.nets}

    @cached_property
    def driver(self) -> dict[int, Gate]:
        """Net id -> driving gate (primary inputs are absent)."""
        return {g.output: g for g in self.gates}

    @cached_property
    def fanout(self) -> dict[int, tuple[Gate, ...]]:
        out: dict[int, list[Gate]] = {n.id: [] for n in self.nets}
        for g in self.gates:
            for i in dict.fromkeys(g.inputs):
                out[i].append(g)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def topo_order(self) -> tuple[int, ...]:
        """Gate ids in evaluation order; C2/DELAY outputs act as sources."""
        return _topological_gates(self.gates, set(self.pis))

    @cached_property
    def topo_index(self) -> dict[int, int]:
        return {gid: i for i, gid in enumerate(self.topo_order)}

    def name_of(self, net: int) -> str:
        name = self.net_by_id[net].name
        return name if name is not None else f"n{net}"

    @cached_property
    def net_by_name(self) -> dict[str, int]:
        return {n.name: n.id for n in self.nets if n.name is not None}

    def is_combinational(self) -> bool:
        return not any(g.kind.sequential for g in self.gates)

    def gate_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for g in self.gates:
            counts[g.kind.value] = counts.get(g.kind.value, 0) + 1
        return dict(sorted(counts.items()))

    @cached_property
    def compiled(self) -> CompiledNetlist:
        return _compile(self)

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        gates = []
        for g in self.gates:
            d = {"id": g.id, "kind": g.kind.value, "inputs": list(g.inputs), "output": g.output}
            if g.delay is not None:
                d["delay"] = {"rise": g.delay[0], "fall": g.delay[1]}
            gates.append(d)
        nets = [{"id": n.id, **({"name": n.name} if n.name is not None else {})} for n in self.nets]
        return {"nets": nets, "gates": gates, "pis": list(self.pis), "pos": list(self.pos),
                "meta": dict(self.meta)}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: Mapping) -> "Netlist":
        _reject_unknown(data, {"nets", "gates", "pis", "pos", "meta"}, "netlist")
        nets = []
        for n in data["nets"]:
            _reject_unknown(n, {"id", "name"}, "net")
            nets.append(Net(_net_id(n["id"]), n.get("name")))
        gates = []
        for g in data["gates"]:
            _reject_unknown(g, {"id", "kind", "inputs", "output", "delay"}, "gate")
            try:
                kind = GateKind(g["kind"])
            except ValueError:
                raise NetlistError(f"gate {g['id']}: unknown kind {g['kind']!r}") from None
            delay = None
            if "delay" in g:
                _reject_unknown(g["delay"], {"rise", "fall"}, "delay")
                delay = (int(g["delay"]["rise"]), int(g["delay"]["fall"]))
            gates.append(Gate(int(g["id"]), kind, tuple(_net_id(i) for i in g["inputs"]),
                              _net_id(g["output"]), delay))
        meta = data.get("meta", {})
        if not all(isinstance(k, str) and isinstance(v, str) for k, v in meta.items()):
            raise NetlistError("meta must be a string map")
        return build(gates, data["pis"], data["pos"], nets=nets, meta=meta)

    @classmethod
    def from_json(cls, text: str) -> "Netlist":
        return cls.from_dict(json.loads(text))


def _reject_unknown(obj: Mapping, allowed: set[str], what: str) -> None:
    extra = set(obj) - allowed
    if extra:
        raise NetlistError(f"unknown {what} field(s): {sorted(extra)}")


def _net_id(v) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise NetlistError(f"net ids must be non-negative integers, got {v!r}")
    return v


def _topological_gates(gates: Sequence[Gate], pis: set[int]) -> tuple[int, ...]:
    driver = {g.output: g for g in gates}
    indeg: dict[int, int] = {}
    users: dict[int, list[int]] = {}
    for g in gates:
        deps = 0
        for i in dict.fromkeys(g.inputs):
            d = driver.get(i)
            if d is not None and not d.kind.sequential:
                deps += 1
                users.setdefault(d.id, []).append(g.id)
        indeg[g.id] = deps
    # sources first in id order: keeps builds deterministic
    ready = sorted(gid for gid, d in indeg.items() if d == 0)
    order: list[int] = []
    import heapq

    heapq.heapify(ready)
    while ready:
        gid = heapq.heappop(ready)
        order.append(gid)
        for u in users.get(gid, ()):
            indeg[u] -= 1
            if indeg[u] == 0:
                heapq.heappush(ready, u)
    if len(order) != len(gates):
        stuck = sorted(gid for gid, d in indeg.items() if d > 0)
        raise CombinationalCycle(f"combinational cycle through gate(s) {stuck[:8]}")
    return tuple(order)


def build(gates: Iterable, pis: Iterable[int], pos: Iterable[int], *,
          nets: Iterable[Net] | None = None, meta: Mapping[str, str] | None = None) -> Netlist:
    """Validate a gate list and return a :class:`Netlist`.

    ``gates`` holds :class:`Gate` objects or ``(id, kind, inputs, output[, delay])``
    tuples.  When ``nets`` is omitted every referenced net is declared unnamed.
    """
    glist: list[Gate] = []
    for g in gates:
        if not isinstance(g, Gate):
            gid, kind, ins, out, *rest = g
            g = Gate(int(gid), GateKind(kind), tuple(ins), int(out), tuple(rest[0]) if rest and rest[0] else None)
        if g.kind is GateKind.DELAY and g.delay is None:
            g = Gate(g.id, g.kind, g.inputs, g.output, (0, 0))
        glist.append(g)
    pis, pos = tuple(pis), tuple(pos)

    if nets is None:
        ids = set(pis) | set(pos)
        for g in glist:
            ids.update(g.inputs)
            ids.add(g.output)
        nets = [Net(i) for i in sorted(ids)]
    nets = tuple(nets)
    declared = {n.id for n in nets}
    if len(declared) != len(nets):
        raise NetlistError("duplicate net id in net list")

    seen_gate: set[int] = set()
    driver: dict[int, str] = {}
    for p in pis:
        if p not in declared:
            raise FloatingNet(f"primary input net {p} is not declared")
        if p in driver:
            raise MultipleDrivers(f"net {p} is listed twice as a primary input")
        driver[p] = "primary input"
    for g in glist:
        if g.id in seen_gate:
            raise NetlistError(f"duplicate gate id {g.id}")
        seen_gate.add(g.id)
        if len(g.inputs) != g.kind.arity:
            raise ArityMismatch(f"gate {g.id} ({g.kind.value}) has {len(g.inputs)} inputs, expects {g.kind.arity}")
        if g.delay is not None and g.kind is not GateKind.DELAY:
            raise NetlistError(f"gate {g.id}: only DELAY gates carry a delay")
        if g.delay is not None and min(g.delay) < 0:
            raise NetlistError(f"gate {g.id}: negative delay")
        for n in (*g.inputs, g.output):
            if n not in declared:
                raise FloatingNet(f"gate {g.id} references undeclared net {n}")
        if g.output in driver:
            raise MultipleDrivers(f"net {g.output} driven by gate {g.id} and {driver[g.output]}")
        driver[g.output] = f"gate {g.id}"
    for g in glist:
        for i in g.inputs:
            if i not in driver:
                raise FloatingNet(f"net {i} (input of gate {g.id}) has no driver")
    for p in pos:
        if p not in driver:
            raise FloatingNet(f"primary output net {p} has no driver")

    _topological_gates(glist, set(pis))
    return Netlist(tuple(glist), nets, pis, pos, dict(meta or {}))


def _compile(nl: Netlist) -> CompiledNetlist:
    net_ids = np.array([n.id for n in nl.nets], dtype=np.int64)
    index = {nid: i for i, nid in enumerate(net_ids.tolist())}
    # gates are stored in topological order so a single pass settles combinational logic
    order_ids = nl.topo_order
    gates = [nl.gate_by_id[gid] for gid in order_ids]
    op = np.array([_OP_OF_FAMILY[g.kind.family] for g in gates], dtype=np.int32)
    inv = np.array([1 if (g.kind.inverting or g.kind is GateKind.XNOR2) else 0 for g in gates], dtype=np.int32)
    in_ptr = np.zeros(len(gates) + 1, dtype=np.int32)
    in_idx = []
    for k, g in enumerate(gates):
        in_idx.extend(index[i] for i in g.inputs)
        in_ptr[k + 1] = len(in_idx)
    out = np.array([index[g.output] for g in gates], dtype=np.int32)
    fan: list[list[int]] = [[] for _ in net_ids]
    for k, g in enumerate(gates):
        for i in dict.fromkeys(g.inputs):
            fan[index[i]].append(k)
    fan_ptr = np.zeros(len(net_ids) + 1, dtype=np.int32)
    for i, f in enumerate(fan):
        fan_ptr[i + 1] = fan_ptr[i] + len(f)
    driver = np.full(len(net_ids), -1, dtype=np.int32)
    driver[out] = np.arange(len(gates), dtype=np.int32)
    return CompiledNetlist(
        net_ids=net_ids,
        gate_ids=np.array(order_ids, dtype=np.int64),
        op=op, inv=inv, in_ptr=in_ptr,
        in_idx=np.array(in_idx, dtype=np.int32),
        out=out, fan_ptr=fan_ptr,
        fan_idx=np.array([k for f in fan for k in f], dtype=np.int32),
        order=np.arange(len(gates), dtype=np.int32),
        pi=np.array([index[p] for p in nl.pis], dtype=np.int32),
        po=np.array([index[p] for p in nl.pos], dtype=np.int32),
        driver=driver,
    )


class NetlistBuilder:
    """Incremental netlist construction used by generators and passes."""

    def __init__(self, meta: Mapping[str, str] | None = None):
        self._nets: dict[int, Net] = {}
        self._gates: list[Gate] = []
        self._pis: list[int] = []
        self._pos: list[int] = []
        self.meta = dict(meta or {})
        self._next_net = 0
        self._next_gate = 0
        self.block: str | None = None
        self.block_map: dict[int, str] = {}

    def net(self, name: str | None = None) -> int:
        nid = self._next_net
        self._next_net += 1
        self._nets[nid] = Net(nid, name)
        return nid

    def pi(self, name: str | None = None) -> int:
        nid = self.net(name)
        self._pis.append(nid)
        return nid

    def po(self, net: int) -> int:
        self._pos.append(net)
        return net

    def gate(self, kind, inputs: Sequence[int], output: int | None = None, *,
             name: str | None = None, delay: tuple[int, int] | None = None) -> int:
        kind = GateKind(kind)
        if output is None:
            output = self.net(name)
        gid = self._next_gate
        self._next_gate += 1
        self._gates.append(Gate(gid, kind, tuple(inputs), output, delay))
        if self.block is not None:
            self.block_map[gid] = self.block
        return output

    def rename(self, net: int, name: str) -> None:
        self._nets[net] = Net(net, name)

    @property
    def gates(self) -> list[Gate]:
        return self._gates

    def build(self) -> Netlist:
        return build(self._gates, self._pis, self._pos, nets=self._nets.values(), meta=self.meta)


# -- zero-delay evaluation -------------------------------------------------

@dataclass(frozen=True)
class Evaluation:
    po_values: tuple[int, ...]
    values: Mapping[int, int]


def eval_zero_delay(netlist: Netlist, pi_values: Sequence[int] | Mapping[int, int],
                    c2_initial_state: int | Mapping[int, int] = 0) -> Evaluation:
    """Settle the netlist for a fully defined primary-input assignment.

    ``c2_initial_state`` is the starting output of every C-element (or a
    gate-id -> value map).  Raises :class:`Oscillation` when no fixed point
    is reached within ``2 * gate_count + 4`` sweeps.
    """
    from . import kernels

    c = netlist.compiled
    values = np.full(c.n_nets, X, dtype=np.int8)
    if isinstance(pi_values, Mapping):
        pv = [pi_values[p] for p in netlist.pis]
    else:
        pv = list(pi_values)
    if len(pv) != len(netlist.pis):
        raise ValueError(f"expected {len(netlist.pis)} primary-input values, got {len(pv)}")
    if any(v not in (0, 1) for v in pv):
        raise ValueError("primary-input values must be 0 or 1")
    values[c.pi] = pv
    _seed_c2(netlist, c, values, c2_initial_state)
    kernels.settle(c, values, 2 * c.n_gates + 4)
    return Evaluation(tuple(int(values[i]) for i in c.po),
                      {int(nid): int(v) for nid, v in zip(c.net_ids, values)})


def _seed_c2(netlist: Netlist, c: CompiledNetlist, values: np.ndarray, state) -> None:
    for k in np.flatnonzero(c.op == OP_C2):
        gid = int(c.gate_ids[k])
        v = state.get(gid, 0) if isinstance(state, Mapping) else state
        values[c.out[k]] = v


def eval_topological(netlist: Netlist, pi_values: Sequence[int]) -> dict[int, int]:
    """Single topological pass, for combinational netlists only."""
    if not netlist.is_combinational():
        raise ValueError("single-pass evaluation needs a combinational netlist")
    vals = dict(zip(netlist.pis, pi_values))
    for gid in netlist.topo_order:
        g = netlist.gate_by_id[gid]
        vals[g.output] = gate_function(g.kind, [vals[i] for i in g.inputs])
    return vals


def _and3(vs) -> int:
    if 0 in vs:
        return 0
    return X if X in vs else 1


def _or3(vs) -> int:
    if 1 in vs:
        return 1
    return X if X in vs else 0


def _not3(v: int) -> int:
    return v if v == X else 1 - v


def gate_function(kind: GateKind, ins: Sequence[int], state: int = X) -> int:
    """Ternary output of one gate (``state`` is the held output of a C2)."""
    fam = kind.family
    if fam in ("BUF", "DELAY"):
        v = ins[0]
    elif fam == "AND":
        v = _and3(ins)
    elif fam == "OR":
        v = _or3(ins)
    elif fam == "AO21":
        v = _or3([_and3(ins[:2]), ins[2]])
    elif fam == "AO22":
        v = _or3([_and3(ins[:2]), _and3(ins[2:])])
    elif fam == "OA21":
        v = _and3([_or3(ins[:2]), ins[2]])
    elif fam == "OA22":
        v = _and3([_or3(ins[:2]), _or3(ins[2:])])
    elif fam == "C2":
        a, b = ins
        return a if (a == b and a != X) else state
    elif fam == "XOR":
        v = X if X in ins else ins[0] ^ ins[1]
    else:  # pragma: no cover
        raise ValueError(kind)
    return _not3(v) if (kind.inverting or kind is GateKind.XNOR2) else v


def eval_bitparallel(netlist: Netlist, pi_words: np.ndarray) -> np.ndarray:
    """Evaluate a combinational netlist on many assignments at once.

    ``pi_words`` has shape ``(n_pis, n_words)`` of ``uint64``; bit ``j`` of
    word ``w`` is one assignment.  Returns the ``(n_nets, n_words)`` value
    words in compiled (dense) net order.  ``DELAY`` gates act as buffers.
    """
    if any(g.kind is GateKind.C2 for g in netlist.gates):
        raise ValueError("bit-parallel evaluation does not model C-elements")
    c = netlist.compiled
    pi_words = np.asarray(pi_words, dtype=np.uint64)
    vals = np.zeros((c.n_nets, pi_words.shape[1]), dtype=np.uint64)
    vals[c.pi] = pi_words
    ones = np.uint64(0xFFFFFFFFFFFFFFFF)
    for k in range(c.n_gates):
        ins = vals[c.in_idx[c.in_ptr[k]:c.in_ptr[k + 1]]]
        o = c.op[k]
        if o in (OP_BUF, OP_DELAY):
            v = ins[0].copy()
        elif o == OP_AND:
            v = np.bitwise_and.reduce(ins, axis=0)
        elif o == OP_OR:
            v = np.bitwise_or.reduce(ins, axis=0)
        elif o == OP_AO21:
            v = (ins[0] & ins[1]) | ins[2]
        elif o == OP_AO22:
            v = (ins[0] & ins[1]) | (ins[2] & ins[3])
        elif o == OP_OA21:
            v = (ins[0] | ins[1]) & ins[2]
        elif o == OP_OA22:
            v = (ins[0] | ins[1]) & (ins[2] | ins[3])
        elif o == OP_XOR:
            v = ins[0] ^ ins[1]
        else:  # pragma: no cover
            raise ValueError(o)
        vals[c.out[k]] = v ^ ones if c.inv[k] else v
    return vals


def check_unate_only(netlist: Netlist) -> list[Gate]:
    """Gates whose kind is non-unate; an empty list means mapping is legal."""
    return [g for g in netlist.gates if not g.kind.unate]


def load(path) -> Netlist:
    with open(path) as fh:
        return Netlist.from_json(fh.read())


def save(netlist: Netlist, path) -> None:
    with open(path, "w") as fh:
        fh.write(netlist.to_json(indent=1))
