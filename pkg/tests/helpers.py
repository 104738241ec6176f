"""Shared generators for tests."""

import itertools
import random

from hypothesis import strategies as st

from selftimed.netlist import GateKind, NetlistBuilder

COMB_UNATE = [k for k in GateKind if k.unate and not k.sequential]


def random_unate_netlist(seed: int, max_pis: int = 8, max_gates: int = 25, kinds=COMB_UNATE):
    r = random.Random(seed)
    b = NetlistBuilder()
    n = r.randint(1, max_pis)
    nets = [b.pi(f"x{i}") for i in range(n)]
    for j in range(r.randint(1, max_gates)):
        k = r.choice(kinds)
        nets.append(b.gate(k, [r.choice(nets) for _ in range(k.arity)], name=f"g{j}"))
    for o in dict.fromkeys(nets[n:][-r.randint(1, 3):]):
        b.po(o)
    return b.build()


unate_netlists = st.integers(0, 2**32 - 1).map(random_unate_netlist)


def assignments(n: int):
    return itertools.product((0, 1), repeat=n)


def dual(values):
    """Logical values -> dual-rail levels (pos, neg per signal)."""
    out = []
    for v in values:
        out += [v, 1 - v]
    return out


def undual(levels):
    """Dual-rail levels -> logical values; asserts every pair is a codeword."""
    out = []
    for p, n in zip(levels[0::2], levels[1::2]):
        assert p != n, f"pair ({p},{n}) is not a valid codeword"
        out.append(p)
    return out


def to_int(bits_lsb_first):
    return sum(b << i for i, b in enumerate(bits_lsb_first))
