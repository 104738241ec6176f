"""Compare the compiled and pure-Python simulation kernels.

Usage: python3 benchmarks/bench_kernels.py [-n OPERANDS]
"""

import argparse
import time

import numpy as np

from selftimed import kernels
from selftimed.datapath import build_inference_datapath
from selftimed.netlist import X
from selftimed.sim import run_handshake, uniform_inputs
from selftimed.timing import DelayModel


def _time(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-n", type=int, default=300)
    args = ap.parse_args()
    bundle = build_inference_datapath((8, 16))
    f, ex = uniform_inputs()(np.random.default_rng(0), args.n, bundle.F, bundle.C)
    ops = list(zip(f, ex))
    model = DelayModel().with_jitter(0.5, 1.5, 1)
    c = bundle.netlist.compiled
    backends = ["python"] + (["compiled"] if kernels.BACKEND == "compiled" else [])
    print(f"netlist: {c.n_gates} gates, {c.n_nets} nets; {args.n} handshakes")
    results = {}
    for name in backends:
        t_sim, res = _time(lambda: run_handshake(bundle, ops, model, check=False, backend=name), 1)
        vals = np.full(c.n_nets, X, dtype=np.int8)
        vals[c.pi] = bundle.spacer_vector()

        def settle():
            v = vals.copy()
            kernels.settle(c, v, 2 * c.n_gates + 4, backend=name)
            return v
        t_settle, _ = _time(settle)
        events = len(res.trace.times)
        results[name] = (t_sim, t_settle, res)
        print(f"{name:>9}: handshake {t_sim * 1e3:9.1f} ms ({events / t_sim / 1e6:6.2f} M transitions/s), "
              f"settle {t_settle * 1e3:8.2f} ms")
    if len(results) == 2:
        (a, sa, ra), (b, sb, rb) = results["python"], results["compiled"]
        same = np.array_equal(ra.trace.times, rb.trace.times) and np.array_equal(ra.trace.nets, rb.trace.nets)
        print(f"speedup: handshake x{a / b:.1f}, settle x{sa / sb:.1f}; identical traces: {same}")


if __name__ == "__main__":
    main()
