"""Command-line front end: build, verify, bench and sweep-vdd."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .bench import bench as run_bench
from .bench import histogram_csv, rows_csv, sweep_csv, sweep_vdd
from .datapath import DatapathBundle, block_counts, build_inference_datapath, outcome_codes
from .golden import OUTCOME_CODES, TmConfig, infer, infer_batch
from .sim import SAMPLERS, Mode, uniform_features
from .timing import DEFAULT_VDD_TABLE, DelayModel, OutOfRange, VddTable

EXHAUSTIVE_LIMIT = 1 << 26


def _load_model(path) -> DelayModel:
    return DelayModel.load(path) if path else DelayModel()


def _load_bundle(directory) -> tuple[DatapathBundle, TmConfig | None]:
    d = Path(directory)
    try:
        bundle = DatapathBundle.load(d)
    except (OSError, ValueError, KeyError) as e:
        raise click.ClickException(f"cannot read bundle in {d}: {e}") from None
    cfg = d / "config.json"
    return bundle, (TmConfig.load(cfg) if cfg.exists() else None)


def _sampler(name: str, config: TmConfig | None):
    if name == "uniform":
        return uniform_features(config.exclude if config is not None else None)
    return SAMPLERS[name]()


@click.group()
def main() -> None:
    """Self-timed dual-rail inference datapath toolkit."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--delays", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Delay model used to size the completion delay.")
def build(config_path, out_dir, delays):
    """Generate the dual-rail datapath bundle for a TM configuration."""
    try:
        config = TmConfig.load(config_path)
    except (ValueError, KeyError, TypeError) as e:
        raise click.ClickException(f"invalid config {config_path}: {e}") from None
    bundle = build_inference_datapath(config, delay_model=_load_model(delays))
    out = Path(out_dir)
    bundle.save(out)
    config.save(out / "config.json")
    click.echo(f"wrote {out / 'bundle.json'}")
    click.echo(f"{'block':<12}{'gates':>8}")
    for block, n in bundle.gate_counts_by_block().items():
        click.echo(f"{block:<12}{n:>8}")
    click.echo(f"{'total':<12}{len(bundle.netlist.gates):>8}")
    for tree in ("pcpos", "pcneg"):
        c = block_counts(bundle.block_map, f"{tree}/")
        click.echo(f"{tree}: {c['ha']} HA, {c['fa']} FA, {c['or']} OR, {c['spinv']} spacer inverters")


def _verify_batches(bundle: DatapathBundle, exhaustive: bool, n: int, seed: int):
    F, C = bundle.F, bundle.C
    nbits = C * 2 * F
    if exhaustive:
        total = (1 << F) << nbits
        if total > EXHAUSTIVE_LIMIT:
            raise click.ClickException(f"exhaustive check needs {total} cases; use --random")
        fs = np.array([[(i >> m) & 1 for m in range(F)] for i in range(1 << F)], dtype=np.uint8)
        step = 1 << 16
        for start in range(0, 1 << nbits, step):
            codes = np.arange(start, min(start + step, 1 << nbits), dtype=np.uint64)
            shifts = np.arange(nbits, dtype=np.uint64)
            ex = ((codes[:, None] >> shifts) & np.uint64(1)).astype(np.uint8).reshape(-1, C, 2 * F)
            for f in fs:
                yield np.broadcast_to(f, (len(ex), F)), ex
    else:
        rng = np.random.default_rng(seed)
        step = 1 << 14
        for start in range(0, n, step):
            k = min(step, n - start)
            yield (rng.integers(0, 2, (k, F), dtype=np.uint8),
                   rng.integers(0, 2, (k, C, 2 * F), dtype=np.uint8))


@main.command()
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--exhaustive", is_flag=True, help="All feature vectors and exclude matrices.")
@click.option("--random", "n_random", type=int, default=None, help="Number of random operands.")
@click.option("--seed", type=int, default=0)
def verify(bundle_dir, exhaustive, n_random, seed):
    """Check the datapath against the reference model (exit 1 on mismatch)."""
    bundle, _ = _load_bundle(bundle_dir)
    if exhaustive == (n_random is not None):
        raise click.UsageError("give exactly one of --exhaustive or --random N")
    checked = 0
    for f, ex in _verify_batches(bundle, exhaustive, n_random or 0, seed):
        got = outcome_codes(bundle, f, ex)
        ref = infer_batch(f, ex)
        bad = np.flatnonzero(got != ref)
        if len(bad):
            i = int(bad[0])
            cfg = TmConfig(bundle.F, bundle.C, ex[i])
            res = infer([int(x) for x in f[i]], cfg)
            shown = OUTCOME_CODES[got[i]].value if got[i] >= 0 else "INVALID"
            click.echo("FAIL")
            click.echo(json.dumps({"features": [int(x) for x in f[i]], "config": cfg.to_dict(),
                                   "circuit": shown, "expected": res.outcome.value,
                                   "pos_count": res.pos_count, "neg_count": res.neg_count}))
            sys.exit(1)
        checked += len(f)
    click.echo(f"PASS ({checked} operands)")


@main.command("bench")
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("-n", "n", type=int, default=1000)
@click.option("--seed", type=int, default=0)
@click.option("--delays", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--mode", type=click.Choice(["done", "oracle"]), default="done")
@click.option("--sampler", type=click.Choice(sorted(SAMPLERS)), default="uniform")
@click.option("--bin-width", type=int, default=10)
@click.option("--workers", type=int, default=1)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def bench_cmd(bundle_dir, n, seed, delays, mode, sampler, bin_width, workers, out_dir):
    """Latency distribution against the worst-case clocked baseline."""
    bundle, config = _load_bundle(bundle_dir)
    report, rows = run_bench(bundle, _sampler(sampler, config), n, seed, _load_model(delays),
                             Mode(mode), bin_width, workers)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json(indent=2) + "\n")
    (out / "measurements.csv").write_text(rows_csv(rows))
    edges = np.array([h[0] for h in report.histogram])
    counts = np.array([h[1] for h in report.histogram])
    (out / "histogram.csv").write_text(histogram_csv(edges, counts, bin_width))
    click.echo(f"mean {report.mean_latency:.1f} ps, max {report.max_latency} ps, "
               f"ratio {report.mean_max_ratio:.3f}, baseline {report.baseline_period} ps, "
               f"speedup {report.speedup:.3f}, violations {report.violation_count}")
    if report.violation_count:
        sys.exit(1)


@main.command("sweep-vdd")
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--vdds", required=True, help="Comma-separated supply voltages.")
@click.option("--table", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("-n", "n", type=int, default=1000)
@click.option("--seed", type=int, default=0)
@click.option("--delays", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--sampler", type=click.Choice(sorted(SAMPLERS)), default="uniform")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def sweep_cmd(bundle_dir, vdds, table, n, seed, delays, sampler, out_dir):
    """Latency versus supply voltage, with decisions re-checked at every point."""
    bundle, config = _load_bundle(bundle_dir)
    vt = VddTable.load(table) if table else DEFAULT_VDD_TABLE
    try:
        points = [float(v) for v in vdds.split(",") if v.strip()]
        rows = sweep_vdd(bundle, points, _sampler(sampler, config), n, seed, vt, _load_model(delays))
    except OutOfRange as e:
        raise click.ClickException(str(e)) from None
    except ValueError as e:
        raise click.ClickException(f"bad --vdds: {e}") from None
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(sweep_csv(rows))
    for r in rows:
        click.echo(f"vdd {r.vdd:.3f} V  x{r.multiplier:g}  mean {r.mean_latency:.1f} ps  "
                   f"max {r.max_latency} ps  violations {r.violations}  "
                   f"decisions {'identical' if r.decisions_identical else 'DIFFER'}")
    if any(r.violations or not r.decisions_identical for r in rows):
        sys.exit(1)


if __name__ == "__main__":  # pragma: no cover
    main()
