"""Toolkit for self-timed dual-rail circuits with early propagation.

Netlists, dual-rail mapping passes, a Tsetlin Machine reference model and
datapath generators, an event-driven timed simulator with protocol
checkers, static timing analysis and latency benchmarks.
"""

from .netlist import GateKind, Netlist, NetlistBuilder, build, eval_zero_delay
from .golden import TmConfig, infer
from .kernels import BACKEND

__all__ = ["BACKEND", "GateKind", "Netlist", "NetlistBuilder", "TmConfig", "build",
           "eval_zero_delay", "infer"]
__version__ = "0.1.0"
