"""Latency benchmarks against a worst-case clocked baseline, and supply sweeps."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .datapath import DatapathBundle, block_counts
from .golden import OUTCOME_CODES
from .sim import HandshakeResult, Mode, OperandMeasurement, Sampler, histogram, run_handshake
from .timing import DEFAULT_VDD_TABLE, DelayModel, VddTable, compute_timing, scale_delay_model

# published silicon figure for average-latency reduction; reported, never asserted
REFERENCE_SPEEDUP = 10.0


@dataclass(frozen=True)
class BenchReport:
    n: int
    seed: int
    mode: str
    mean_latency: float
    max_latency: int
    min_latency: int
    mean_max_ratio: float
    baseline_period: int
    speedup: float
    reference_speedup: float
    mean_t_cwsp: float
    max_t_cwsp: int
    throughput_period_spcw_spcw: float
    throughput_period_spcw_cwsp: float
    avg_period_mean_spcw_max_cwsp: float
    histogram_bin_width: int
    histogram: list[list[int]]
    gate_counts: dict[str, int]
    popcount_blocks: dict[str, dict[str, int]]
    t_io: int
    t_int: int
    t_d: int
    violation_count: int
    violations_by_kind: dict[str, int]
    outcome_counts: dict[str, int]

    def to_json(self, **kw) -> str:
        return json.dumps(asdict(self), **kw)


def _chunk_run(args):
    bundle_dict, ops, model_dict, mode = args
    bundle = DatapathBundle.from_dict(bundle_dict)
    model = DelayModel.from_dict(model_dict)
    return run_handshake(bundle, ops, model, mode)


def run_operands(bundle: DatapathBundle, operands: Sequence, model: DelayModel,
                 mode: Mode | str = Mode.DONE_SIGNALLED, workers: int = 1) -> list[HandshakeResult]:
    """Handshake runs, optionally split over a process pool.

    Every operand starts from the all-spacer state, so per-operand
    measurements do not depend on how the operands are chunked.
    """
    if workers <= 1 or len(operands) < 2 * workers:
        return [run_handshake(bundle, operands, model, mode)]
    bounds = np.linspace(0, len(operands), workers + 1).astype(int)
    jobs = [(bundle.to_dict(), operands[a:b], model.to_dict(), Mode(mode).value)
            for a, b in zip(bounds, bounds[1:])]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(_chunk_run, jobs))


def relative(results: Sequence[HandshakeResult]) -> list[dict]:
    """Per-operand rows with handshake edges relative to the operand's phases."""
    rows, base = [], 0
    for res in results:
        for m in res.measurements:
            rows.append({"operand_index": base + m.index, "t_spcw_ps": m.t_spcw, "t_cwsp_ps": m.t_cwsp,
                         "done_rise_ps": m.done_rise - m.t_valid,
                         "done_fall_ps": m.done_fall - m.t_spacer if m.done_fall >= 0 else -1,
                         "outcome": m.outcome.value if m.outcome else "INVALID"})
        base += len(res.measurements)
    return rows


def rows_csv(rows: Sequence[dict]) -> str:
    out = io.StringIO()
    w = csv.DictWriter(out, ["operand_index", "t_spcw_ps", "t_cwsp_ps", "done_rise_ps", "done_fall_ps",
                             "outcome"], lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return out.getvalue()


def histogram_csv(edges: np.ndarray, counts: np.ndarray, width: int) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["bin_lo_ps", "bin_hi_ps", "count"])
    for e, c in zip(edges.tolist(), counts.tolist()):
        w.writerow([e, e + width, c])
    return out.getvalue()


def bench(bundle: DatapathBundle, sampler: Sampler, n: int, seed: int = 0,
          model: DelayModel | None = None, mode: Mode | str = Mode.DONE_SIGNALLED,
          bin_width: int = 10, workers: int = 1) -> tuple[BenchReport, list[dict]]:
    """Run ``n`` sampled operands; returns the report and per-operand rows.

    The baseline clock period is the static worst-case spacer-to-valid
    delay of the same netlist and delay model.
    """
    model = model or DelayModel()
    f, ex = sampler(np.random.default_rng(seed), n, bundle.F, bundle.C)
    operands = list(zip(f, ex))
    results = run_operands(bundle, operands, model, mode, workers)
    rows = relative(results)
    lat = np.array([r["t_spcw_ps"] for r in rows], dtype=np.int64)
    cw = np.array([r["t_cwsp_ps"] for r in rows], dtype=np.int64)
    violations = [v for r in results for v in r.violations]
    timing = compute_timing(bundle.netlist, model, pi_spacer=bundle.spacer_vector())
    edges, counts = histogram(lat, bin_width)
    mean = float(lat.mean())
    by_kind: dict[str, int] = {}
    for v in violations:
        by_kind[v.kind.value] = by_kind.get(v.kind.value, 0) + 1
    outcomes = {o.value: 0 for o in OUTCOME_CODES}
    outcomes["INVALID"] = 0
    for r in rows:
        outcomes[r["outcome"]] += 1
    report = BenchReport(
        n=n, seed=seed, mode=Mode(mode).value,
        mean_latency=mean, max_latency=int(lat.max()), min_latency=int(lat.min()),
        mean_max_ratio=mean / float(lat.max()),
        baseline_period=timing.max_t_spcw, speedup=timing.max_t_spcw / mean,
        reference_speedup=REFERENCE_SPEEDUP,
        mean_t_cwsp=float(cw.mean()), max_t_cwsp=int(cw.max()),
        throughput_period_spcw_spcw=2 * mean,
        throughput_period_spcw_cwsp=mean + float(cw.mean()),
        avg_period_mean_spcw_max_cwsp=mean + float(cw.max()),
        histogram_bin_width=bin_width,
        histogram=[[int(e), int(c)] for e, c in zip(edges, counts)],
        gate_counts=bundle.gate_counts_by_block(),
        popcount_blocks={t: block_counts(bundle.block_map, f"{t}/") for t in ("pcpos", "pcneg")},
        t_io=timing.t_io, t_int=timing.t_int, t_d=timing.t_d,
        violation_count=len(violations), violations_by_kind=by_kind, outcome_counts=outcomes)
    return report, rows


@dataclass(frozen=True)
class SweepRow:
    vdd: float
    multiplier: float
    mean_latency: float
    max_latency: int
    violations: int
    decisions_identical: bool


def sweep_vdd(bundle: DatapathBundle, vdds: Sequence[float], sampler: Sampler, n: int, seed: int = 0,
              table: VddTable = DEFAULT_VDD_TABLE, model: DelayModel | None = None,
              mode: Mode | str = Mode.DONE_SIGNALLED) -> list[SweepRow]:
    """Benchmark at each supply voltage; decisions are compared with the first point."""
    model = model or DelayModel()
    f, ex = sampler(np.random.default_rng(seed), n, bundle.F, bundle.C)
    operands = list(zip(f, ex))
    out, ref = [], None
    for vdd in vdds:
        scaled = scale_delay_model(model, vdd, table)
        res = run_handshake(bundle, operands, scaled, mode)
        lat = res.t_spcw()
        outcomes = res.outcomes
        ref = outcomes if ref is None else ref
        out.append(SweepRow(float(vdd), table.multiplier(vdd), float(lat.mean()), int(lat.max()),
                            len(res.violations), outcomes == ref))
    return out


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["vdd", "multiplier", "mean_latency_ps", "max_latency_ps", "violations", "decisions_identical"])
    for r in rows:
        w.writerow([r.vdd, r.multiplier, f"{r.mean_latency:.3f}", r.max_latency, r.violations,
                    int(r.decisions_identical)])
    return out.getvalue()


def measurement_rows(measurements: Sequence[OperandMeasurement]) -> list[dict]:
    return relative([HandshakeResult(None, list(measurements), [])])
