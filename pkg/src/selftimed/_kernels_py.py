"""Pure-Python simulation kernels (fallback for the compiled extension).

Values are ``0``, ``1`` and ``2`` (unknown).  Both backends expose the same
``settle`` function and ``EventSim`` class over the dense arrays of
:class:`selftimed.netlist.CompiledNetlist`.
"""

from __future__ import annotations

import heapq

import numpy as np

X = 2
QUIESCENT, STOPPED, TIME_LIMIT = 0, 1, 2


class EventExplosion(RuntimeError):
    """More events than the configured bound: the circuit oscillates."""


def _eval(op: int, inv: int, ins: list, state: int) -> int:
    if op == 0 or op == 9:  # BUF, DELAY
        v = ins[0]
    elif op == 1:  # AND
        if 0 in ins:
            v = 0
        elif X in ins:
            v = X
        else:
            v = 1
    elif op == 2:  # OR
        if 1 in ins:
            v = 1
        elif X in ins:
            v = X
        else:
            v = 0
    elif op == 7:  # C2
        a, b = ins
        return a if (a == b and a != X) else state
    elif op == 8:  # XOR
        v = X if (ins[0] == X or ins[1] == X) else ins[0] ^ ins[1]
    else:
        if op == 3 or op == 4:  # AO21 / AO22
            p = _and(ins[0], ins[1])
            q = ins[2] if op == 3 else _and(ins[2], ins[3])
            v = _or(p, q)
        else:  # OA21 / OA22
            p = _or(ins[0], ins[1])
            q = ins[2] if op == 5 else _or(ins[2], ins[3])
            v = _and(p, q)
    if inv and v != X:
        v = 1 - v
    return v


def _and(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return X if (a == X or b == X) else 1


def _or(a: int, b: int) -> int:
    if a == 1 or b == 1:
        return 1
    return X if (a == X or b == X) else 0


def settle(op, inv, in_ptr, in_idx, out, values, max_sweeps: int) -> int:
    """Sweep gates in stored (topological) order until nothing changes.

    Returns the number of sweeps, or ``-1`` when ``max_sweeps`` is exceeded.
    """
    n = len(op)
    op_l, inv_l = op.tolist(), inv.tolist()
    ptr, idx, out_l = in_ptr.tolist(), in_idx.tolist(), out.tolist()
    vals = values.tolist()
    for sweep in range(1, max_sweeps + 1):
        changed = False
        for k in range(n):
            o = out_l[k]
            v = _eval(op_l[k], inv_l[k], [vals[i] for i in idx[ptr[k]:ptr[k + 1]]], vals[o])
            if v != vals[o]:
                vals[o] = v
                changed = True
        if not changed:
            values[:] = vals
            return sweep
    values[:] = vals
    return -1


class EventSim:
    """Transport-delay event-driven simulator over a compiled netlist.

    A gate whose evaluated output changes at time ``t`` schedules the new
    value at ``t + rise`` (new value 1) or ``t + fall`` (new value 0).
    Scheduling on a net cancels that net's pending events at the same or a
    later time.  Ties are ordered by (time, gate key, scheduling order).
    """

    def __init__(self, op, inv, in_ptr, in_idx, out, fan_ptr, fan_idx, gkey,
                 rise, fall, values, max_events: int):
        self._op, self._inv = op.tolist(), inv.tolist()
        self._ptr, self._idx, self._out = in_ptr.tolist(), in_idx.tolist(), out.tolist()
        self._fptr, self._fidx = fan_ptr.tolist(), fan_idx.tolist()
        self._key = [int(k) for k in gkey]
        self._rise, self._fall = [int(r) for r in rise], [int(f) for f in fall]
        self._vals = [int(v) for v in values]
        self._pending: list[list] = [[] for _ in self._vals]
        self._heap: list = []
        self._token = 0
        self.max_events = max_events
        self.events = 0
        self.now = 0
        self._tt: list[int] = []
        self._tn: list[int] = []
        self._tv: list[int] = []

    @property
    def values(self) -> np.ndarray:
        return np.array(self._vals, dtype=np.int8)

    def _projected(self, net: int) -> int:
        p = self._pending[net]
        return p[-1][2] if p else self._vals[net]

    def _schedule(self, time: int, net: int, value: int, key: int) -> None:
        p = self._pending[net]
        while p and p[-1][0] >= time:
            p.pop()
        if value == (p[-1][2] if p else self._vals[net]):
            return
        self._token += 1
        p.append((time, self._token, value))
        heapq.heappush(self._heap, (time, key, self._token, net, value))

    def schedule(self, time: int, net: int, value: int) -> None:
        """Drive a primary input (sorted ahead of gate events at equal time)."""
        self._schedule(int(time), int(net), int(value), 0)

    def next_time(self) -> int:
        heap = self._heap
        while heap:
            t, _, tok, net, _ = heap[0]
            p = self._pending[net]
            if p and p[0][1] == tok:
                return t
            heapq.heappop(heap)
        return -1

    def pending(self) -> int:
        return sum(len(p) for p in self._pending)

    def run(self, stop_net: int = -1, stop_value: int = 0, t_stop: int = -1) -> int:
        heap, pending, vals = self._heap, self._pending, self._vals
        op, inv, ptr, idx, out = self._op, self._inv, self._ptr, self._idx, self._out
        fptr, fidx, key, rise, fall = self._fptr, self._fidx, self._key, self._rise, self._fall
        while heap:
            t, _, tok, net, value = heap[0]
            p = pending[net]
            if not p or p[0][1] != tok:
                heapq.heappop(heap)
                continue
            if t_stop >= 0 and t > t_stop:
                return TIME_LIMIT
            heapq.heappop(heap)
            p.pop(0)
            self.now = t
            self.events += 1
            if self.events > self.max_events:
                raise EventExplosion(f"more than {self.max_events} events")
            if vals[net] == value:
                continue
            vals[net] = value
            self._tt.append(t)
            self._tn.append(net)
            self._tv.append(value)
            for j in range(fptr[net], fptr[net + 1]):
                k = fidx[j]
                o = out[k]
                pj = pending[o]
                state = pj[-1][2] if pj else vals[o]
                v = _eval(op[k], inv[k], [vals[i] for i in idx[ptr[k]:ptr[k + 1]]], state)
                d = rise[k] if v == 1 else fall[k] if v == 0 else max(rise[k], fall[k])
                self._schedule(t + d, o, v, key[k])
            if net == stop_net and value == stop_value:
                return STOPPED
        return QUIESCENT

    def take_transitions(self):
        out = (np.array(self._tt, dtype=np.int64), np.array(self._tn, dtype=np.int32),
               np.array(self._tv, dtype=np.int8))
        self._tt, self._tn, self._tv = [], [], []
        return out
