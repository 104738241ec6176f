"""Delay models, supply-voltage scaling and static timing analysis.

All times are integers in picosecond units.  A net's transition direction
follows from its spacer level: a net whose spacer is 1 *rises* when it
returns to spacer, so valid-to-spacer paths use rise delays for it and fall
delays otherwise (and vice versa for spacer-to-valid).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .netlist import GateKind, Netlist, eval_zero_delay

_EPS = 1e-9


class OutOfRange(ValueError):
    pass


class CyclicTiming(ValueError):
    pass


def nominal_delay(kind: GateKind) -> tuple[int, int]:
    """Built-in (rise, fall) placeholder delays."""
    if kind in (GateKind.INV, GateKind.BUF):
        return 10, 10
    if kind is GateKind.C2:
        return 30, 30
    if kind is GateKind.DELAY:
        return 0, 0
    if kind.complex or kind.arity > 2:
        return 25, 25
    return 15, 15


@dataclass(frozen=True)
class Jitter:
    min: float = 1.0
    max: float = 1.0
    seed: int = 0


@dataclass(frozen=True)
class DelayModel:
    """Per-kind delays, per-gate overrides, static jitter and a voltage multiplier.

    Effective delay of a gate = ``max(1, ceil(base * jitter * vdd_multiplier))``
    where ``jitter`` is drawn once per gate instance.  ``DELAY`` elements take
    their base from the netlist (or an override), skip jitter and may be 0.
    """

    default: Mapping[GateKind, tuple[int, int]] = field(default_factory=dict)
    overrides: Mapping[int, tuple[int, int]] = field(default_factory=dict)
    jitter: Jitter | None = None
    vdd_multiplier: float = 1.0

    def base(self, kind: GateKind) -> tuple[int, int]:
        return tuple(self.default.get(kind, nominal_delay(kind)))

    def with_jitter(self, lo: float, hi: float, seed: int) -> "DelayModel":
        return replace(self, jitter=Jitter(lo, hi, seed))

    def without_jitter(self) -> "DelayModel":
        return replace(self, jitter=None)

    def scaled(self, multiplier: float) -> "DelayModel":
        return replace(self, vdd_multiplier=self.vdd_multiplier * multiplier)

    def gate_delays(self, netlist: Netlist) -> tuple[np.ndarray, np.ndarray]:
        """(rise, fall) int64 arrays in compiled gate order."""
        c = netlist.compiled
        n = c.n_gates
        rise = np.empty(n, dtype=np.int64)
        fall = np.empty(n, dtype=np.int64)
        if self.jitter is not None and (self.jitter.min, self.jitter.max) != (1.0, 1.0):
            rng = np.random.default_rng(self.jitter.seed)
            jit = rng.uniform(self.jitter.min, self.jitter.max, n)
        else:
            jit = np.ones(n)
        m = self.vdd_multiplier
        for k, gid in enumerate(c.gate_ids.tolist()):
            g = netlist.gate_by_id[gid]
            if g.kind is GateKind.DELAY:
                r, f = self.overrides.get(gid, g.delay or (0, 0))
                rise[k], fall[k] = _scale(r, m, 0), _scale(f, m, 0)
                continue
            r, f = self.overrides.get(gid, self.base(g.kind))
            rise[k], fall[k] = _scale(r, jit[k] * m, 1), _scale(f, jit[k] * m, 1)
        return rise, fall

    # -- JSON ------------------------------------------------------------------
    def to_dict(self) -> dict:
        d: dict = {"default": {k.value: {"rise": r, "fall": f} for k, (r, f) in self.default.items()},
                   "overrides": {str(g): {"rise": r, "fall": f} for g, (r, f) in self.overrides.items()},
                   "vdd_multiplier": self.vdd_multiplier}
        if self.jitter is not None:
            d["jitter"] = {"min": self.jitter.min, "max": self.jitter.max, "seed": self.jitter.seed}
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "DelayModel":
        extra = set(d) - {"default", "overrides", "jitter", "vdd_multiplier"}
        if extra:
            raise ValueError(f"unknown delay-model field(s): {sorted(extra)}")
        default = {GateKind(k): _rf(v) for k, v in d.get("default", {}).items()}
        overrides = {int(k): _rf(v) for k, v in d.get("overrides", {}).items()}
        j = d.get("jitter")
        jitter = Jitter(float(j["min"]), float(j["max"]), int(j.get("seed", 0))) if j else None
        if jitter is not None and not 0 < jitter.min <= jitter.max:
            raise ValueError("jitter range must satisfy 0 < min <= max")
        return cls(default, overrides, jitter, float(d.get("vdd_multiplier", 1.0)))

    @classmethod
    def load(cls, path) -> "DelayModel":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def _rf(v) -> tuple[int, int]:
    r, f = int(v["rise"]), int(v["fall"])
    if r < 0 or f < 0:
        raise ValueError("delays must be non-negative")
    return r, f


def _scale(base: int, mult: float, floor: int) -> int:
    return max(floor, math.ceil(base * mult - _EPS))


# -- supply voltage ---------------------------------------------------------------

@dataclass(frozen=True)
class VddTable:
    """Delay multiplier versus supply voltage, log-linear between rows."""

    rows: tuple[tuple[float, float], ...]

    def __post_init__(self):
        rows = tuple(sorted((float(v), float(m)) for v, m in self.rows))
        if len(rows) < 1:
            raise ValueError("VddTable needs at least one row")
        if len({v for v, _ in rows}) != len(rows):
            raise ValueError("duplicate vdd in table")
        mults = [m for _, m in rows]
        if any(m <= 0 for m in mults) or any(a < b for a, b in zip(mults, mults[1:])):
            raise ValueError("multipliers must be positive and non-increasing in vdd")
        if abs(mults[-1] - 1.0) > _EPS:
            raise ValueError("the multiplier at the nominal (highest) vdd must be 1")
        object.__setattr__(self, "rows", rows)

    @property
    def nominal(self) -> float:
        return self.rows[-1][0]

    def multiplier(self, vdd: float) -> float:
        lo, hi = self.rows[0][0], self.rows[-1][0]
        if not lo - _EPS <= vdd <= hi + _EPS:
            raise OutOfRange(f"vdd {vdd} outside table range [{lo}, {hi}]")
        for v, m in self.rows:
            if abs(v - vdd) <= _EPS:
                return m
        for (v0, m0), (v1, m1) in zip(self.rows, self.rows[1:]):
            if v0 <= vdd <= v1:
                x = (vdd - v0) / (v1 - v0)
                return math.exp(math.log(m0) + x * (math.log(m1) - math.log(m0)))
        raise OutOfRange(vdd)  # pragma: no cover

    def to_dict(self) -> dict:
        return {"rows": [{"vdd": v, "multiplier": m} for v, m in self.rows]}

    @classmethod
    def from_dict(cls, d) -> "VddTable":
        rows = d["rows"] if isinstance(d, Mapping) else d
        return cls(tuple((float(r["vdd"]), float(r["multiplier"])) for r in rows))

    @classmethod
    def load(cls, path) -> "VddTable":
        text = Path(path).read_text()
        if str(path).endswith(".csv"):
            reader = csv.DictReader(io.StringIO(text))
            return cls(tuple((float(r["vdd"]), float(r["multiplier"])) for r in reader))
        return cls.from_dict(json.loads(text))


DEFAULT_VDD_TABLE = VddTable(((1.2, 1.0), (0.9, 1.5), (0.6, 4.0), (0.4, 60.0), (0.25, 3000.0)))


def scale_delay_model(model: DelayModel, vdd: float, table: VddTable = DEFAULT_VDD_TABLE) -> DelayModel:
    return replace(model, vdd_multiplier=model.vdd_multiplier * table.multiplier(vdd))


# -- static timing ----------------------------------------------------------------

@dataclass(frozen=True)
class TimingReport:
    t_io: int
    t_int: int
    t_d: int
    t_done_fall: int
    max_t_spcw: int
    critical_path_io: tuple[int, ...]
    critical_path_int: tuple[int, ...]
    critical_path_spcw: tuple[int, ...]

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def spacer_levels(netlist: Netlist, pi_spacer: Sequence[int] | None = None) -> dict[int, int]:
    """Spacer level of every net (zero-delay evaluation of the all-spacer input)."""
    pv = [0] * len(netlist.pis) if pi_spacer is None else [int(v) for v in pi_spacer]
    return eval_zero_delay(netlist, pv).values


def _analysis_gates(netlist: Netlist) -> list:
    """Combinational gates in topological order, excluding delay elements and their cones."""
    if any(g.kind is GateKind.C2 for g in netlist.gates):
        raise CyclicTiming("C-element loops cannot be analysed topologically")
    excluded: set[int] = set()
    out = []
    for gid in netlist.topo_order:
        g = netlist.gate_by_id[gid]
        if g.kind is GateKind.DELAY or any(i in excluded for i in g.inputs):
            excluded.add(g.output)
            continue
        out.append(g)
    return out


def _directional_delays(netlist: Netlist, model: DelayModel, spacer: Mapping[int, int],
                        to_spacer: bool) -> dict[int, int]:
    """Gate id -> delay of its output moving to (or away from) spacer."""
    rise, fall = model.gate_delays(netlist)
    c = netlist.compiled
    out = {}
    for k, gid in enumerate(c.gate_ids.tolist()):
        g = netlist.gate_by_id[gid]
        goes_high = (spacer[g.output] == 1) == to_spacer
        out[gid] = int(rise[k] if goes_high else fall[k])
    return out


def path_search(netlist: Netlist, delay: Mapping[int, int], longest: bool = True):
    """Arrival time and predecessor gate for every net reachable from the PIs."""
    arr: dict[int, int] = {p: 0 for p in netlist.pis}
    pred: dict[int, int | None] = {p: None for p in netlist.pis}
    pick = max if longest else min
    for g in _analysis_gates(netlist):
        src = [i for i in g.inputs if i in arr]
        if not src:
            continue
        best = pick(src, key=lambda i: arr[i])
        arr[g.output] = arr[best] + delay[g.id]
        pred[g.output] = g.id
    return arr, pred


def _trace(netlist: Netlist, pred, arr, net: int, longest: bool = True) -> tuple[int, ...]:
    path = []
    pick = max if longest else min
    while pred.get(net) is not None:
        gid = pred[net]
        path.append(gid)
        g = netlist.gate_by_id[gid]
        net = pick((i for i in g.inputs if i in arr), key=lambda i: arr[i])
    return tuple(reversed(path))


def compute_timing(netlist: Netlist, model: DelayModel | None = None,
                   pi_spacer: Sequence[int] | None = None,
                   spacer: Mapping[int, int] | None = None) -> TimingReport:
    """Topological longest-path analysis of the reset and evaluation phases.

    ``t_io`` is the latest valid-to-spacer arrival on a primary output and
    ``t_int`` the latest over every analysed net (false paths included).
    Delay elements and anything they drive are left out.
    """
    model = model or DelayModel()
    spacer = spacer if spacer is not None else spacer_levels(netlist, pi_spacer)
    analysed = {g.output for g in _analysis_gates(netlist)} | set(netlist.pis)
    d_vs = _directional_delays(netlist, model, spacer, to_spacer=True)
    d_sv = _directional_delays(netlist, model, spacer, to_spacer=False)
    arr, pred = path_search(netlist, d_vs)
    pos = [p for p in netlist.pos if p in analysed]
    po_io = max(pos, key=lambda n: arr.get(n, 0))
    net_int = max(analysed, key=lambda n: (arr.get(n, 0), -n))
    t_io, t_int = arr.get(po_io, 0), arr.get(net_int, 0)
    t_d = max(0, t_int - t_io)
    arr_sv, pred_sv = path_search(netlist, d_sv)
    po_sv = max(pos, key=lambda n: arr_sv.get(n, 0))
    return TimingReport(
        t_io=t_io, t_int=t_int, t_d=t_d, t_done_fall=t_io + t_d,
        max_t_spcw=arr_sv.get(po_sv, 0),
        critical_path_io=_trace(netlist, pred, arr, po_io),
        critical_path_int=_trace(netlist, pred, arr, net_int),
        critical_path_spcw=_trace(netlist, pred_sv, arr_sv, po_sv))


def size_done_delay(bundle, model: DelayModel | None = None, margin: float = 1.1,
                    corners: tuple[float, float] | None = None) -> int:
    """Fall delay for the ``done`` element that covers every internal reset.

    ``done_raw`` falls as soon as the first output returns to spacer, so the
    element must bridge from the earliest possible fall of ``done_raw``
    (shortest path, fast corner) to the latest internal reset (longest
    path, slow corner).  Corners default to the model's jitter range, or
    [0.5, 1.5] when the model has none.
    """
    model = model or DelayModel()
    if corners is None:
        corners = (model.jitter.min, model.jitter.max) if model.jitter else (0.5, 1.5)
    lo, hi = corners
    nl = bundle.netlist
    spacer = spacer_levels(nl, bundle.spacer_vector())
    unit = replace(model, jitter=None, vdd_multiplier=1.0)  # the element itself is vdd-scaled
    slow, fast = unit.scaled(hi), unit.scaled(lo)
    t_int = compute_timing(nl, slow, spacer=spacer).t_int
    arr_min, _ = path_search(nl, _directional_delays(nl, fast, spacer, to_spacer=True), longest=False)
    earliest = arr_min[bundle.done_raw]
    return math.ceil(margin * max(0, t_int - earliest) - _EPS)
