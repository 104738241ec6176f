"""Event-driven timed simulation, four-phase handshake driver and protocol checkers."""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .datapath import DatapathBundle
from .dualrail import DualRailBinding
from .golden import OUTCOME_CODES, Outcome
from .netlist import Netlist, eval_zero_delay
from .timing import DelayModel, compute_timing, spacer_levels

EventExplosion = kernels.EventExplosion
DEFAULT_MAX_EVENTS = 50_000_000


class SimulationStall(RuntimeError):
    """The circuit stopped switching before the awaited handshake edge."""


class ViolationKind(str, enum.Enum):
    NON_MONOTONIC = "NonMonotonic"
    FORBIDDEN_STATE = "ForbiddenState"
    PREMATURE_INPUT = "PrematureInput"
    MISSING_RESET = "MissingReset"
    ONE_HOT = "OneHotViolation"


@dataclass(frozen=True)
class ProtocolViolation:
    kind: ViolationKind
    net: int | tuple[int, ...]
    time: int
    detail: str = ""


class Mode(str, enum.Enum):
    DONE_SIGNALLED = "done"
    ORACLE_TIMED = "oracle"


@dataclass
class Trace:
    """Every net transition of a run, in processing order.

    ``nets`` holds net ids.  ``initial`` is the level of every net before
    the first event.  ``markers`` lists ``(time, label, operand)`` tuples.
    """

    times: np.ndarray
    nets: np.ndarray
    values: np.ndarray
    initial: Mapping[int, int]
    markers: list[tuple[int, str, int]] = field(default_factory=list)

    def transitions(self, net: int) -> list[tuple[int, int]]:
        sel = self.nets == net
        return list(zip(self.times[sel].tolist(), self.values[sel].tolist()))

    def value_at(self, net: int, time: int) -> int:
        """Level of ``net`` after all events at ``time`` have been applied."""
        sel = (self.nets == net) & (self.times <= time)
        idx = np.flatnonzero(sel)
        return int(self.values[idx[-1]]) if len(idx) else int(self.initial[net])

    def final_values(self) -> dict[int, int]:
        out = dict(self.initial)
        for n, v in zip(self.nets.tolist(), self.values.tolist()):
            out[n] = v
        return out

    def scaled_times(self, k: int) -> np.ndarray:
        return self.times * k

    def to_vcd(self, netlist: Netlist, timescale: str = "1ps") -> str:
        """Value-change dump of every named net."""
        ids = {}
        out = io.StringIO()
        out.write(f"$timescale {timescale} $end\n$scope module top $end\n")
        for k, net in enumerate(sorted(self.initial)):
            code = _vcd_code(k)
            ids[net] = code
            name = netlist.name_of(net).replace(" ", "_")
            out.write(f"$var wire 1 {code} {name} $end\n")
        out.write("$upscope $end\n$enddefinitions $end\n#0\n$dumpvars\n")
        for net, code in ids.items():
            out.write(f"{_vcd_val(self.initial[net])}{code}\n")
        out.write("$end\n")
        last = None
        for t, n, v in zip(self.times.tolist(), self.nets.tolist(), self.values.tolist()):
            if t != last:
                out.write(f"#{t}\n")
                last = t
            out.write(f"{_vcd_val(v)}{ids[n]}\n")
        return out.getvalue()


def _vcd_code(k: int) -> str:
    chars = [chr(c) for c in range(33, 127)]
    s = ""
    k += 1
    while k:
        k, r = divmod(k - 1, len(chars))
        s = chars[r] + s
    return s


def _vcd_val(v: int) -> str:
    return "x" if v == 2 else str(v)


# -- plain simulation ---------------------------------------------------------------

class Simulator:
    """Stateful wrapper around a kernel ``EventSim`` working in net ids."""

    def __init__(self, netlist: Netlist, model: DelayModel | None = None,
                 initial_pis: Sequence[int] | None = None, max_events: int = DEFAULT_MAX_EVENTS,
                 backend: str | None = None):
        self.netlist = netlist
        c = netlist.compiled
        self.c = c
        self.dense = {int(n): k for k, n in enumerate(c.net_ids.tolist())}
        pv = [0] * len(netlist.pis) if initial_pis is None else list(initial_pis)
        init = eval_zero_delay(netlist, pv).values
        values = np.array([init[int(n)] for n in c.net_ids], dtype=np.int8)
        self.initial = {int(n): int(v) for n, v in zip(c.net_ids, values)}
        rise, fall = (model or DelayModel()).gate_delays(netlist)
        gkey = np.arange(1, c.n_gates + 1, dtype=np.int64)  # by compiled (topological) index
        order_key = np.empty(c.n_gates, dtype=np.int64)
        order_key[np.argsort(c.gate_ids, kind="stable")] = gkey
        self.sim = kernels.EventSim(c, order_key, rise, fall, values, max_events, backend=backend)
        self._pi_dense = [self.dense[p] for p in netlist.pis]
        self.markers: list[tuple[int, str, int]] = []
        self._chunks: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []

    @property
    def now(self) -> int:
        return int(self.sim.now)

    def apply(self, time: int, pi_values: Sequence[int] | Mapping[int, int]) -> None:
        if isinstance(pi_values, Mapping):
            for net, v in pi_values.items():
                self.sim.schedule(int(time), self.dense[net], int(v))
        else:
            for k, v in zip(self._pi_dense, pi_values):
                self.sim.schedule(int(time), k, int(v))

    def run(self, until_net: int | None = None, value: int = 0, t_stop: int = -1) -> int:
        stop = -1 if until_net is None else self.dense[until_net]
        return self.sim.run(stop, value, t_stop)

    def values(self) -> dict[int, int]:
        v = self.sim.values
        return {int(n): int(x) for n, x in zip(self.c.net_ids, v)}

    def values_dense(self) -> np.ndarray:
        return self.sim.values

    def _flush(self) -> None:
        t, n, v = self.sim.take_transitions()
        if len(t):
            self._chunks.append((t, self.c.net_ids[n], v))

    def trace(self) -> Trace:
        self._flush()
        if self._chunks:
            t = np.concatenate([c[0] for c in self._chunks])
            n = np.concatenate([c[1] for c in self._chunks])
            v = np.concatenate([c[2] for c in self._chunks])
            self._chunks = [(t, n, v)]
        else:
            t, n, v = (np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int8))
        return Trace(t, n.astype(np.int64), v, dict(self.initial), list(self.markers))


def simulate(netlist: Netlist, model: DelayModel | None,
             stimulus: Iterable[tuple[int, Sequence[int] | Mapping[int, int]]],
             initial_pis: Sequence[int] | None = None, max_events: int = DEFAULT_MAX_EVENTS,
             backend: str | None = None) -> Trace:
    """Transport-delay simulation of ``(time, pi_values)`` steps (non-decreasing times).

    The circuit starts settled on ``initial_pis`` (all zero by default).
    Raises :class:`EventExplosion` beyond ``max_events`` processed events.
    """
    sim = Simulator(netlist, model, initial_pis, max_events, backend)
    last = None
    for t, pv in stimulus:
        if last is not None and t < last:
            raise ValueError("stimulus times must be non-decreasing")
        sim.run(t_stop=t - 1)
        sim.apply(t, pv)
        sim.markers.append((int(t), "stimulus", -1))
        last = t
    sim.run()
    return sim.trace()


# -- handshake environment ---------------------------------------------------------

@dataclass(frozen=True)
class OperandMeasurement:
    index: int
    t_valid: int
    t_spacer: int
    t_spcw: int
    t_cwsp: int
    done_rise: int
    done_fall: int
    outcome: Outcome | None


@dataclass
class HandshakeResult:
    trace: Trace
    measurements: list[OperandMeasurement]
    violations: list[ProtocolViolation]

    @property
    def outcomes(self) -> list[Outcome | None]:
        return [m.outcome for m in self.measurements]

    def t_spcw(self) -> np.ndarray:
        return np.array([m.t_spcw for m in self.measurements], dtype=np.int64)


def run_handshake(bundle: DatapathBundle, operands: Sequence[tuple[Sequence[int], np.ndarray]],
                  model: DelayModel | None = None, mode: Mode | str = Mode.DONE_SIGNALLED,
                  check: bool = True, max_events: int = DEFAULT_MAX_EVENTS,
                  backend: str | None = None) -> HandshakeResult:
    """Drive operands through the four-phase protocol and check it.

    Each operand goes spacer -> valid -> (done rises) -> spacer -> next valid.
    The next valid is applied when ``done`` falls (``"done"`` mode) or
    ``t_int`` after the spacer (``"oracle"`` mode, ``t_int`` from static timing
    of the same delay model).  Before every valid the environment checks
    that all nets are back at spacer; the first one still pending is a
    ``PrematureInput`` violation.
    """
    mode = Mode(mode)
    model = model or DelayModel()
    nl = bundle.netlist
    spacer_pis = bundle.spacer_vector()
    spacer = spacer_levels(nl, spacer_pis)
    sim = Simulator(nl, model, spacer_pis, max_events, backend)
    c = sim.c
    spacer_dense = np.array([spacer[int(n)] for n in c.net_ids], dtype=np.int8)
    done = bundle.done
    # with the environment timing the reset, the delay element plays no part
    watch = done if mode is Mode.DONE_SIGNALLED else bundle.done_raw
    if mode is Mode.ORACLE_TIMED:
        spacer_dense[sim.dense[done]] = -1
    outs = bundle.outcome_nets
    t_int = compute_timing(nl, model, spacer=spacer).t_int if mode is Mode.ORACLE_TIMED else 0
    violations: list[ProtocolViolation] = []
    phases = []  # (t_valid, t_spacer, done_rise, done_fall)
    t = 0
    for k, (f, ex) in enumerate(operands):
        sim.run(t_stop=t)
        _check_spacer(sim, spacer_dense, t, violations, ViolationKind.PREMATURE_INPUT,
                      "input applied before the reset finished")
        sim.apply(t, bundle.pi_vector(f, ex))
        sim.markers.append((t, "valid", k))
        t_valid = t
        if sim.run(watch, 1) != kernels.STOPPED:
            raise SimulationStall(f"operand {k}: done never rose")
        t_rise = sim.now
        vals = sim.values_dense()
        hot = [int(vals[sim.dense[o]]) for o in outs]
        if sum(hot) != 1:
            violations.append(ProtocolViolation(ViolationKind.PREMATURE_INPUT, outs, t_rise,
                                                "done rose before the outputs were valid"))
        # the environment returns to spacer as soon as done is seen
        sim.run(t_stop=t_rise)
        sim.apply(t_rise, spacer_pis)
        sim.markers.append((t_rise, "spacer", k))
        if mode is Mode.DONE_SIGNALLED:
            if sim.run(done, 0) != kernels.STOPPED:
                raise SimulationStall(f"operand {k}: done never fell")
            t_fall = sim.now
            t = t_fall
        else:
            t = t_rise + t_int
            sim.run(t_stop=t)
            t_fall = -1
        phases.append((t_valid, t_rise, t_rise, t_fall))
    sim.run()
    t_end = sim.now
    _check_spacer(sim, spacer_dense, t_end, violations, ViolationKind.MISSING_RESET,
                  "net not at spacer after the final reset")
    trace = sim.trace()
    meas = _measure(trace, phases, bundle, t_end)
    if mode is Mode.ORACLE_TIMED:
        meas = [_with_done_fall(m, trace, done) for m in meas]
    if check:
        ignore = () if mode is Mode.DONE_SIGNALLED else (done,)
        violations += check_monotonic(trace, spacer, [p[0] for p in phases], [p[1] for p in phases],
                                      ignore=ignore)
        violations += check_forbidden(trace, bundle.binding)
        violations += check_one_hot(trace, outs)
    return HandshakeResult(trace, meas, violations)


def _with_done_fall(m: OperandMeasurement, trace: Trace, done: int) -> OperandMeasurement:
    from dataclasses import replace

    sel = (trace.nets == done) & (trace.values == 0) & (trace.times >= m.t_spacer)
    idx = np.flatnonzero(sel)
    return replace(m, done_fall=int(trace.times[idx[0]]) if len(idx) else -1)


def _check_spacer(sim: Simulator, spacer_dense: np.ndarray, t: int,
                  violations: list[ProtocolViolation], kind: ViolationKind, detail: str) -> None:
    bad = np.flatnonzero((sim.values_dense() != spacer_dense) & (spacer_dense >= 0))
    if len(bad):
        violations.append(ProtocolViolation(kind, int(sim.c.net_ids[bad[0]]), int(t),
                                            f"{detail} ({len(bad)} nets)"))


def _measure(trace: Trace, phases, bundle: DatapathBundle, t_end: int) -> list[OperandMeasurement]:
    """Per-operand latencies from the transition record."""
    outs = np.array(bundle.outcome_nets)
    times, nets, vals = trace.times, trace.nets, trace.values
    is_out_rise = np.isin(nets, outs) & (vals == 1)
    out_rise_t = times[is_out_rise]
    out_rise_n = nets[is_out_rise]
    reset_ok = nets != bundle.done
    reset_t = times[reset_ok]
    res = []
    starts = [p[0] for p in phases] + [t_end + 1]
    for k, (t_valid, t_sp, t_rise, t_fall) in enumerate(phases):
        lo = np.searchsorted(out_rise_t, t_valid, side="left")
        hi = np.searchsorted(out_rise_t, t_sp, side="right")
        if hi > lo:
            t_cw = int(out_rise_t[lo])
            winner = int(out_rise_n[lo])
            outcome = OUTCOME_CODES[list(bundle.outcome_nets).index(winner)]
        else:
            t_cw, outcome = t_rise, None
        a = np.searchsorted(reset_t, t_sp, side="left")
        b = np.searchsorted(reset_t, starts[k + 1], side="left")
        last = int(reset_t[b - 1]) if b > a else t_sp
        res.append(OperandMeasurement(k, t_valid, t_sp, t_cw - t_valid, last - t_sp,
                                      t_rise, t_fall, outcome))
    return res


# -- protocol checkers ----------------------------------------------------------------

def check_monotonic(trace: Trace, spacer: Mapping[int, int], valid_times: Sequence[int],
                    spacer_times: Sequence[int], ignore: Iterable[int] = ()) -> list[ProtocolViolation]:
    """Per operand cycle each net leaves spacer at most once, and never returns early.

    A cycle runs from one valid application to the next.  Levels alternate,
    so it suffices to flag a second departure within a cycle and a return
    to spacer before the cycle's spacer was applied.  A net that departs
    late, after the spacer, and then resets is legal.
    """
    if not len(trace.times) or not len(valid_times):
        return []
    vt = np.asarray(valid_times, dtype=np.int64)
    st = np.asarray(spacer_times, dtype=np.int64)
    keep = ~np.isin(trace.nets, np.fromiter(ignore, dtype=np.int64))
    times, nets, vals = trace.times[keep], trace.nets[keep], trace.values[keep]
    sp_of = np.vectorize(lambda n: spacer[int(n)], otypes=[np.int8])
    sp = sp_of(nets)
    depart = vals != sp
    # a return at the instant of the next valid still belongs to the previous cycle
    cycle = np.where(depart, np.searchsorted(vt, times, side="right"),
                     np.searchsorted(vt, times, side="left")) - 1
    early = (~depart) & (cycle >= 0) & (times < st[np.clip(cycle, 0, None)])
    out = [ProtocolViolation(ViolationKind.NON_MONOTONIC, int(nets[i]), int(times[i]),
                             f"returned to spacer during the valid phase of operand {int(cycle[i])}")
           for i in np.flatnonzero(early)[:1000].tolist()]
    d = np.flatnonzero(depart & (cycle >= 0))
    key = nets[d] * (len(vt) + 1) + cycle[d]
    order = np.argsort(key, kind="stable")
    dup = np.flatnonzero(key[order][1:] == key[order][:-1]) + 1
    for j in dup[:1000].tolist():
        i = d[order[j]]
        out.append(ProtocolViolation(ViolationKind.NON_MONOTONIC, int(nets[i]), int(times[i]),
                                     f"left spacer twice in operand {int(cycle[i])}"))
    return out


def check_forbidden(trace: Trace, binding: DualRailBinding) -> list[ProtocolViolation]:
    """No rail pair may ever settle (after a time step) in its forbidden codeword."""
    pairs = {(rp.pos, rp.neg, rp.spacer.value_bit) for rp in binding.signals.values()}
    times, nets, vals = trace.times, trace.nets, trace.values
    by_net = _index_by_net(nets)
    out = []
    for pos, neg, sp in sorted(pairs):
        bad_level = 1 - sp
        idx = np.concatenate([by_net.get(pos, _EMPTY), by_net.get(neg, _EMPTY)])
        if trace.initial.get(pos) == bad_level and trace.initial.get(neg) == bad_level:
            out.append(ProtocolViolation(ViolationKind.FORBIDDEN_STATE, (pos, neg), 0))
            continue
        if not len(idx):
            continue
        idx.sort()
        lv = _levels_after_steps(times[idx], nets[idx], vals[idx], (pos, neg),
                                 (trace.initial[pos], trace.initial[neg]))
        hit = np.flatnonzero((lv[0] == bad_level) & (lv[1] == bad_level))
        if len(hit):
            out.append(ProtocolViolation(ViolationKind.FORBIDDEN_STATE, (pos, neg), int(lv[2][hit[0]])))
    return out


def check_one_hot(trace: Trace, wires: Sequence[int]) -> list[ProtocolViolation]:
    """At most one of ``wires`` high after every time step."""
    wires = tuple(wires)
    by_net = _index_by_net(trace.nets)
    idx = np.sort(np.concatenate([by_net.get(w, _EMPTY) for w in wires]))
    init = tuple(trace.initial[w] for w in wires)
    if sum(init) > 1:
        return [ProtocolViolation(ViolationKind.ONE_HOT, wires, 0)]
    if not len(idx):
        return []
    lv = _levels_after_steps(trace.times[idx], trace.nets[idx], trace.values[idx], wires, init)
    hit = np.flatnonzero(np.sum(lv[:-1], axis=0) > 1)
    return [ProtocolViolation(ViolationKind.ONE_HOT, wires, int(lv[-1][hit[0]]))] if len(hit) else []


_EMPTY = np.zeros(0, dtype=np.int64)


def _index_by_net(nets: np.ndarray) -> dict[int, np.ndarray]:
    order = np.argsort(nets, kind="stable")
    sn = nets[order]
    bounds = np.flatnonzero(np.diff(sn)) + 1
    out = {}
    for chunk in np.split(order, bounds):
        if len(chunk):
            out[int(nets[chunk[0]])] = chunk
    return out


def _levels_after_steps(times, nets, vals, wires, init):
    """Levels of ``wires`` after the last event of each distinct time; last row is the time."""
    n = len(times)
    rows = []
    for w, v0 in zip(wires, init):
        sel = nets == w
        pos = np.where(sel, np.arange(n), -1)
        last = np.maximum.accumulate(pos)
        rows.append(np.where(last >= 0, vals[np.clip(last, 0, None)], v0))
    end = np.ones(n, dtype=bool)
    end[:-1] = times[1:] != times[:-1]
    return [r[end] for r in rows] + [times[end]]


# -- latency distributions -------------------------------------------------------------

Sampler = Callable[[np.random.Generator, int], tuple[np.ndarray, np.ndarray]]


def uniform_features(exclude: np.ndarray | None = None, p_exclude: float = 0.5) -> Sampler:
    """Uniform feature vectors; the exclude matrix is fixed for the run.

    When ``exclude`` is ``None`` it is drawn once per run with each bit set
    with probability ``p_exclude``.
    """
    def sample(rng: np.random.Generator, n: int, F: int, C: int):
        ex = exclude if exclude is not None else (rng.random((C, 2 * F)) < p_exclude).astype(np.uint8)
        f = rng.integers(0, 2, (n, F), dtype=np.uint8)
        return f, np.broadcast_to(np.asarray(ex, dtype=np.uint8), (n, C, 2 * F))
    return sample


def uniform_inputs() -> Sampler:
    """Every primary input (features and exclude bits) uniform per operand."""
    def sample(rng: np.random.Generator, n: int, F: int, C: int):
        return (rng.integers(0, 2, (n, F), dtype=np.uint8),
                rng.integers(0, 2, (n, C, 2 * F), dtype=np.uint8))
    return sample


def _realize_counts(rng: np.random.Generator, f: np.ndarray, counts: np.ndarray, F: int, C: int) -> np.ndarray:
    """Exclude matrices giving exactly ``counts[i] = (pos, neg)`` true clauses for ``f[i]``."""
    n, h = len(f), C // 2
    ex = np.ones((n, C, 2 * F), dtype=np.uint8)
    for i in range(n):
        p, q = (int(x) for x in counts[i])
        false = [j for j in range(h) if j >= p] + [h + j for j in range(h) if j >= q]
        for j in false:
            m = int(rng.integers(0, F))
            ex[i, j, 2 * m + int(f[i, m])] = 0  # include the literal that is false
    return ex


def equal_counts() -> Sampler:
    """Tied vote counts: every comparator stage is exercised."""
    def sample(rng: np.random.Generator, n: int, F: int, C: int):
        f = rng.integers(0, 2, (n, F), dtype=np.uint8)
        k = rng.integers(0, C // 2 + 1, n)
        return f, _realize_counts(rng, f, np.stack([k, k], 1), F, C)
    return sample


def msb_skewed() -> Sampler:
    """Vote counts that differ in the most significant bit."""
    def sample(rng: np.random.Generator, n: int, F: int, C: int):
        h = C // 2
        top = 1 << (h.bit_length() - 1)
        f = rng.integers(0, 2, (n, F), dtype=np.uint8)
        hi = rng.integers(top, h + 1, n)
        lo = rng.integers(0, top, n)
        swap = rng.integers(0, 2, n).astype(bool)
        counts = np.stack([np.where(swap, lo, hi), np.where(swap, hi, lo)], 1)
        return f, _realize_counts(rng, f, counts, F, C)
    return sample


SAMPLERS = {"uniform": uniform_features, "uniform-all": uniform_inputs, "equal": equal_counts,
            "msb": msb_skewed}


@dataclass(frozen=True)
class LatencyDistribution:
    t_spcw: np.ndarray
    t_cwsp: np.ndarray
    outcomes: tuple[Outcome | None, ...]
    violations: tuple[ProtocolViolation, ...]
    histogram: tuple[np.ndarray, np.ndarray]
    result: HandshakeResult | None = None

    @property
    def mean(self) -> float:
        return float(self.t_spcw.mean())

    @property
    def max(self) -> int:
        return int(self.t_spcw.max())


def measure_latency_distribution(bundle: DatapathBundle, sampler: Sampler, n: int,
                                 model: DelayModel | None = None, seed: int = 0,
                                 mode: Mode | str = Mode.DONE_SIGNALLED, bin_width: int = 10,
                                 operands=None, keep_result: bool = False,
                                 backend: str | None = None) -> LatencyDistribution:
    """Run ``n`` sampled operands back to back and summarise ``t_spcw``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if operands is None:
        f, ex = sampler(np.random.default_rng(seed), n, bundle.F, bundle.C)
        operands = list(zip(f, ex))
    res = run_handshake(bundle, operands, model, mode, backend=backend)
    lat = res.t_spcw()
    cw = np.array([m.t_cwsp for m in res.measurements], dtype=np.int64)
    return LatencyDistribution(lat, cw, tuple(res.outcomes), tuple(res.violations),
                               histogram(lat, bin_width), res if keep_result else None)


def histogram(values: np.ndarray, bin_width: int) -> tuple[np.ndarray, np.ndarray]:
    """(bin lower edges, counts) with bins of ``bin_width`` starting at 0."""
    if bin_width < 1:
        raise ValueError("bin width must be >= 1")
    values = np.asarray(values, dtype=np.int64)
    nb = int(values.max() // bin_width) + 1 if len(values) else 1
    counts = np.bincount(values // bin_width, minlength=nb)
    return np.arange(nb, dtype=np.int64) * bin_width, counts


def write_csv(path, text: str) -> None:
    Path(path).write_text(text)
