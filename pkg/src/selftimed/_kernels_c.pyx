# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled simulation kernels; behaviour mirrors ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int8_t, int32_t, int64_t
from libcpp.deque cimport deque
from libcpp.pair cimport pair
from libcpp.queue cimport priority_queue
from libcpp.vector cimport vector

from ._kernels_py import EventExplosion

cnp.import_array()

cdef enum:
    XV = 2
    KEY_BITS = 21
    NET_BITS = 22

cdef enum:
    QUIESCENT = 0
    STOPPED = 1
    TIME_LIMIT = 2


cdef inline int8_t _and2(int8_t a, int8_t b) nogil:
    if a == 0 or b == 0:
        return 0
    if a == XV or b == XV:
        return XV
    return 1


cdef inline int8_t _or2(int8_t a, int8_t b) nogil:
    if a == 1 or b == 1:
        return 1
    if a == XV or b == XV:
        return XV
    return 0


cdef inline int8_t _eval(int32_t op, int32_t inv, const int32_t* idx, int32_t lo, int32_t hi,
                         const int8_t* vals, int8_t state) nogil:
    cdef int8_t v, a, b
    cdef int32_t j
    if op == 0 or op == 9:
        v = vals[idx[lo]]
    elif op == 1:
        v = 1
        for j in range(lo, hi):
            v = _and2(v, vals[idx[j]])
    elif op == 2:
        v = 0
        for j in range(lo, hi):
            v = _or2(v, vals[idx[j]])
    elif op == 7:
        a = vals[idx[lo]]
        b = vals[idx[lo + 1]]
        if a == b and a != XV:
            return a
        return state
    elif op == 8:
        a = vals[idx[lo]]
        b = vals[idx[lo + 1]]
        if a == XV or b == XV:
            v = XV
        else:
            v = a ^ b
    elif op == 3:
        v = _or2(_and2(vals[idx[lo]], vals[idx[lo + 1]]), vals[idx[lo + 2]])
    elif op == 4:
        v = _or2(_and2(vals[idx[lo]], vals[idx[lo + 1]]), _and2(vals[idx[lo + 2]], vals[idx[lo + 3]]))
    elif op == 5:
        v = _and2(_or2(vals[idx[lo]], vals[idx[lo + 1]]), vals[idx[lo + 2]])
    else:
        v = _and2(_or2(vals[idx[lo]], vals[idx[lo + 1]]), _or2(vals[idx[lo + 2]], vals[idx[lo + 3]]))
    if inv and v != XV:
        v = 1 - v
    return v


def settle(cnp.ndarray op, cnp.ndarray inv, cnp.ndarray in_ptr, cnp.ndarray in_idx,
           cnp.ndarray out, cnp.ndarray values, int max_sweeps):
    cdef const int32_t[::1] op_v = np.ascontiguousarray(op, dtype=np.int32)
    cdef const int32_t[::1] inv_v = np.ascontiguousarray(inv, dtype=np.int32)
    cdef const int32_t[::1] ptr_v = np.ascontiguousarray(in_ptr, dtype=np.int32)
    cdef const int32_t[::1] idx_v = np.ascontiguousarray(in_idx, dtype=np.int32)
    cdef const int32_t[::1] out_v = np.ascontiguousarray(out, dtype=np.int32)
    cdef int8_t[::1] vals = values
    cdef Py_ssize_t n = op_v.shape[0]
    cdef Py_ssize_t k
    cdef int sweep
    cdef bint changed
    cdef int8_t v
    cdef const int32_t* idxp = &idx_v[0] if idx_v.shape[0] > 0 else NULL
    for sweep in range(1, max_sweeps + 1):
        changed = False
        for k in range(n):
            v = _eval(op_v[k], inv_v[k], idxp, ptr_v[k], ptr_v[k + 1], &vals[0], vals[out_v[k]])
            if v != vals[out_v[k]]:
                vals[out_v[k]] = v
                changed = True
        if not changed:
            return sweep
    return -1


ctypedef pair[int64_t, int64_t] Entry


cdef class EventSim:
    cdef vector[int32_t] op, inv, ptr, idx, out, fptr, fidx
    cdef vector[int64_t] key, rise, fall
    cdef int8_t[::1] _vals
    cdef object _vals_arr
    cdef vector[deque[Entry]] pend
    cdef priority_queue[pair[int64_t, int64_t]] heap
    cdef int64_t token
    cdef public int64_t max_events
    cdef public int64_t events
    cdef public int64_t now
    cdef vector[int64_t] tt
    cdef vector[int32_t] tn
    cdef vector[int8_t] tv

    def __init__(self, op, inv, in_ptr, in_idx, out, fan_ptr, fan_idx, gkey,
                 rise, fall, values, max_events):
        self.op = (np.asarray(op, dtype=np.int32).tolist())
        self.inv = (np.asarray(inv, dtype=np.int32).tolist())
        self.ptr = (np.asarray(in_ptr, dtype=np.int32).tolist())
        self.idx = (np.asarray(in_idx, dtype=np.int32).tolist())
        self.out = (np.asarray(out, dtype=np.int32).tolist())
        self.fptr = (np.asarray(fan_ptr, dtype=np.int32).tolist())
        self.fidx = (np.asarray(fan_idx, dtype=np.int32).tolist())
        self.key = (np.asarray(gkey, dtype=np.int64).tolist())
        self.rise = (np.asarray(rise, dtype=np.int64).tolist())
        self.fall = (np.asarray(fall, dtype=np.int64).tolist())
        if len(values) >= (1 << NET_BITS):
            raise ValueError("too many nets for the compiled kernel")
        if self.key.size() and max(self.key) >= (1 << KEY_BITS):
            raise ValueError("too many gates for the compiled kernel")
        self._vals_arr = np.array(values, dtype=np.int8)
        self._vals = self._vals_arr
        self.pend.resize(len(values))
        self.token = 0
        self.max_events = max_events
        self.events = 0
        self.now = 0

    @property
    def values(self):
        return self._vals_arr.copy()

    cdef inline void _schedule(self, int64_t time, int32_t net, int8_t value, int64_t key):
        cdef deque[Entry]* p = &self.pend[net]
        while p.size() and p.back().first >= time:
            p.pop_back()
        cdef int8_t proj = <int8_t>(p.back().second & 3) if p.size() else self._vals[net]
        if value == proj:
            return
        self.token += 1
        p.push_back(Entry(time, (self.token << 2) | value))
        self.heap.push(pair[int64_t, int64_t](
            -((time << KEY_BITS) | key),
            -((self.token << (NET_BITS + 2)) | (<int64_t>net << 2) | value)))

    def schedule(self, time, net, value):
        if time >= (1 << 41):
            raise OverflowError("simulation time exceeds the compiled kernel range")
        self._schedule(time, net, value, 0)

    cdef inline bint _valid(self, pair[int64_t, int64_t] top, int32_t* net_out):
        cdef int64_t second = -top.second
        cdef int32_t net = <int32_t>((second >> 2) & ((1 << NET_BITS) - 1))
        cdef int64_t tok = second >> (NET_BITS + 2)
        net_out[0] = net
        cdef deque[Entry]* p = &self.pend[net]
        return p.size() > 0 and (p.front().second >> 2) == tok

    def next_time(self):
        cdef int32_t net
        while not self.heap.empty():
            if self._valid(self.heap.top(), &net):
                return (-self.heap.top().first) >> KEY_BITS
            self.heap.pop()
        return -1

    def pending(self):
        cdef Py_ssize_t total = 0
        cdef size_t i
        for i in range(self.pend.size()):
            total += self.pend[i].size()
        return total

    def run(self, int stop_net=-1, int stop_value=0, int64_t t_stop=-1):
        cdef pair[int64_t, int64_t] top
        cdef int32_t net, k, o, j
        cdef int64_t t, d, second
        cdef int8_t value, v, state
        cdef deque[Entry]* p
        cdef int8_t* vals = &self._vals[0]
        cdef const int32_t* idxp = self.idx.data()
        while not self.heap.empty():
            top = self.heap.top()
            if not self._valid(top, &net):
                self.heap.pop()
                continue
            t = (-top.first) >> KEY_BITS
            if t_stop >= 0 and t > t_stop:
                return TIME_LIMIT
            self.heap.pop()
            second = -top.second
            value = <int8_t>(second & 3)
            self.pend[net].pop_front()
            self.now = t
            self.events += 1
            if self.events > self.max_events:
                raise EventExplosion(f"more than {self.max_events} events")
            if vals[net] == value:
                continue
            vals[net] = value
            self.tt.push_back(t)
            self.tn.push_back(net)
            self.tv.push_back(value)
            for j in range(self.fptr[net], self.fptr[net + 1]):
                k = self.fidx[j]
                o = self.out[k]
                p = &self.pend[o]
                state = <int8_t>(p.back().second & 3) if p.size() else vals[o]
                v = _eval(self.op[k], self.inv[k], idxp, self.ptr[k], self.ptr[k + 1], vals, state)
                if v == 1:
                    d = self.rise[k]
                elif v == 0:
                    d = self.fall[k]
                else:
                    d = self.rise[k] if self.rise[k] > self.fall[k] else self.fall[k]
                self._schedule(t + d, o, v, self.key[k])
            if net == stop_net and value == stop_value:
                return STOPPED
        return QUIESCENT

    def take_transitions(self):
        n = self.tt.size()
        times = np.empty(n, dtype=np.int64)
        nets = np.empty(n, dtype=np.int32)
        vals = np.empty(n, dtype=np.int8)
        cdef int64_t[::1] tv_ = times
        cdef int32_t[::1] nv_ = nets
        cdef int8_t[::1] vv_ = vals
        cdef size_t i
        for i in range(n):
            tv_[i] = self.tt[i]
            nv_[i] = self.tn[i]
            vv_[i] = self.tv[i]
        self.tt.clear()
        self.tn.clear()
        self.tv.clear()
        return times, nets, vals
