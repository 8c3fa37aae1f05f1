"""Command-line front end: single runs, parameter sweeps, codebook and trace
generation, and re-summarizing saved frame logs.

Exit codes: 0 success, 1 configuration problem, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import math
import os
import sys

from .antenna import ArrayGeometry
from .codebook import CodebookFormatError, generate_sector_codebook, write_codebook
from .config import ConfigError, config_echo_lines, load_config
from .macsim import run, write_event_log
from .metrics import read_frame_records, summarize, write_outputs
from .mobility import TraceFormatError, generate_rotation_trace, save_trace, static_trace

PRESETS = ("paper-fig4",)


def _out_dir(args) -> str:
    d = args.out_dir or os.environ.get("XRSIM_OUT") or "."
    os.makedirs(d, exist_ok=True)
    return d


def _cell_seed(base_seed: int, cell_key: str) -> int:
    digest = hashlib.sha256(("%d|%s" % (base_seed, cell_key)).encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big") % (2**31)


def _quantile(sorted_values, p: float):
    if not sorted_values:
        return None
    idx = max(0, math.ceil(p * len(sorted_values)) - 1)
    return sorted_values[min(idx, len(sorted_values) - 1)]


def _fmt_ms(value) -> str:
    return "none" if value is None else "%.6f" % (value * 1e3)


# -- subcommands ----------------------------------------------------------


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config, args.set or [])
    result = run(cfg, collect_events=args.events)
    summary = summarize(result.frames, cfg.deadline)
    out = _out_dir(args)
    base = os.path.join(out, args.label)
    write_outputs(
        summary,
        result.frames,
        frames_path=base + "_frames.csv",
        cdf_path=base + "_cdf.csv",
        summary_path=base + "_summary.txt",
        header_lines=config_echo_lines(cfg),
    )
    if args.events:
        write_event_log(base + "_events.csv", result.events)
    print(
        "%s: frames=%d delivered=%d reliability=%.4f min=%s median=%s max=%s"
        % (
            args.label,
            summary.frame_count,
            summary.frame_count - summary.lost_count,
            summary.reliability,
            _fmt_ms(summary.min_latency),
            _fmt_ms(summary.median_latency),
            _fmt_ms(summary.max_latency),
        )
    )
    return 0


def _fig4_cells() -> list[dict]:
    cells = []
    for rate in ("2e9", "5e9", "7e9"):
        cells.append(
            {"data_rate": rate, "rx_beamforming": "covrage", "prediction": "device",
             "hmd_rows": "64", "hmd_cols": "64"}
        )
        cells.append(
            {"data_rate": rate, "rx_beamforming": "sectors", "prediction": "none",
             "hmd_rows": "8", "hmd_cols": "8"}
        )
        for shape in ("8", "64"):
            cells.append(
                {"data_rate": rate, "rx_beamforming": "quasi_omni", "prediction": "none",
                 "hmd_rows": shape, "hmd_cols": shape}
            )
    return cells


def _vary_cells(vary_args) -> list[dict]:
    axes = []
    for spec in vary_args:
        if "=" not in spec:
            raise ConfigError("--vary expects key=v1,v2,... got %r" % spec)
        key, _, values = spec.partition("=")
        parts = [v.strip() for v in values.split(",") if v.strip()]
        if not parts:
            raise ConfigError("--vary %r lists no values" % spec)
        axes.append([(key.strip(), v) for v in parts])
    return [dict(combo) for combo in itertools.product(*axes)]


def _cmd_sweep(args) -> int:
    if args.preset:
        cells = _fig4_cells()
    elif args.vary:
        cells = _vary_cells(args.vary)
    else:
        raise ConfigError("sweep needs --preset or at least one --vary axis")

    base_cfg = load_config(args.config, args.set or [])
    keyed = []
    for cell in cells:
        key = ",".join("%s=%s" % (k, cell[k]) for k in sorted(cell))
        keyed.append((key, cell))
    keyed.sort(key=lambda kv: kv[0])

    out = _out_dir(args)
    rows = []
    for key, cell in keyed:
        seed = _cell_seed(base_cfg.seed, key)
        overrides = (args.set or []) + ["%s=%s" % (k, v) for k, v in sorted(cell.items())]
        overrides.append("seed=%d" % seed)
        try:
            cfg = load_config(args.config, overrides)
            result = run(cfg)
            summary = summarize(result.frames, cfg.deadline)
            lats = sorted(
                r.completed - r.created for r in result.frames if r.completed is not None
            )
            row = (
                key,
                "%d" % seed,
                "%.6f" % summary.reliability,
                "%d" % (summary.frame_count - summary.lost_count),
                "%d" % summary.lost_count,
                _fmt_ms(_quantile(lats, 0.50)),
                _fmt_ms(_quantile(lats, 0.90)),
                _fmt_ms(_quantile(lats, 0.99)),
                _fmt_ms(summary.max_latency),
                "",
            )
        except Exception as exc:  # record the failure, keep sweeping
            row = (key, "%d" % seed, "none", "0", "0", "none", "none", "none", "none", str(exc))
        rows.append(row)
        print("%s: reliability=%s" % (key, row[2]))

    path = os.path.join(out, args.label + ".csv")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("cell,seed,reliability,delivered,lost,p50_ms,p90_ms,p99_ms,max_ms,error\n")
        for row in rows:
            fh.write(",".join('"%s"' % f if ("," in f) else f for f in row) + "\n")
    print("wrote %s (%d cells)" % (path, len(rows)))
    return 0


def _cmd_report(args) -> int:
    records = read_frame_records(args.frames)
    summary = summarize(records, args.deadline)
    print("frame_count=%d" % summary.frame_count)
    print("delivered_count=%d" % (summary.frame_count - summary.lost_count))
    print("lost_count=%d" % summary.lost_count)
    print("reliability=%.4f" % summary.reliability)
    print("min_latency_ms=%s" % _fmt_ms(summary.min_latency))
    print("median_latency_ms=%s" % _fmt_ms(summary.median_latency))
    print("max_latency_ms=%s" % _fmt_ms(summary.max_latency))
    return 0


def _cmd_generate_codebook(args) -> int:
    geometry = ArrayGeometry(args.rows, args.cols, args.spacing, args.freq)
    aims = [float(a) for a in args.aims.split(",")] if args.aims else None
    if aims:
        book = generate_sector_codebook(
            geometry, aims, aims, seed=args.seed, n_samples=args.samples, max_iters=args.iters
        )
    else:
        book = generate_sector_codebook(
            geometry, seed=args.seed, n_samples=args.samples, max_iters=args.iters
        )
    write_codebook(args.out, book)
    print("wrote %s (%d sectors + quasi-omni)" % (args.out, len(book.sectors)))
    return 0


def _cmd_generate_mobility(args) -> int:
    if args.kind == "static":
        trace = static_trace(args.duration)
    else:
        trace = generate_rotation_trace(
            args.peak_dps, args.duration, args.rate, args.seed, args.device_horizon
        )
    save_trace(args.out, trace)
    print("wrote %s (%d samples, %.1f s)" % (args.out, len(trace.samples), trace.duration))
    return 0


# -- parser ---------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xrsim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario")
    sim.add_argument("--config", help="key = value config file")
    sim.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")
    sim.add_argument("--out-dir", help="output directory (default $XRSIM_OUT or .)")
    sim.add_argument("--label", default="run", help="basename for output files")
    sim.add_argument("--events", action="store_true", help="also write the event log CSV")
    sim.set_defaults(func=_cmd_simulate)

    sw = sub.add_parser("sweep", help="run a cartesian parameter sweep")
    sw.add_argument("--config", help="base config file")
    sw.add_argument("--set", action="append", metavar="KEY=VALUE", help="base overrides")
    sw.add_argument("--vary", action="append", metavar="KEY=V1,V2", help="sweep axis")
    sw.add_argument("--preset", choices=PRESETS, help="named experiment matrix")
    sw.add_argument("--out-dir", help="output directory (default $XRSIM_OUT or .)")
    sw.add_argument("--label", default="sweep", help="basename for the combined CSV")
    sw.set_defaults(func=_cmd_sweep)

    rep = sub.add_parser("report", help="re-summarize a per-frame CSV")
    rep.add_argument("--frames", required=True, help="per-frame CSV path")
    rep.add_argument("--deadline", type=float, default=0.020)
    rep.set_defaults(func=_cmd_report)

    gc = sub.add_parser("generate-codebook", help="write a sector codebook file")
    gc.add_argument("--rows", type=int, default=8)
    gc.add_argument("--cols", type=int, default=8)
    gc.add_argument("--spacing", type=float, default=0.5)
    gc.add_argument("--freq", type=float, default=60e9)
    gc.add_argument("--samples", type=int, default=1000)
    gc.add_argument("--seed", type=int, default=7)
    gc.add_argument("--iters", type=int, default=40)
    gc.add_argument("--aims", help="comma-separated aim angles for both axes")
    gc.add_argument("--out", required=True)
    gc.set_defaults(func=_cmd_generate_codebook)

    gm = sub.add_parser("generate-mobility", help="write a rotation trace CSV")
    gm.add_argument("--kind", choices=("rotation", "static"), default="rotation")
    gm.add_argument("--peak-dps", type=float, default=300.0)
    gm.add_argument("--duration", type=float, default=20.0)
    gm.add_argument("--rate", type=float, default=1000.0)
    gm.add_argument("--seed", type=int, default=1)
    gm.add_argument("--device-horizon", type=float, default=0.1)
    gm.add_argument("--out", required=True)
    gm.set_defaults(func=_cmd_generate_mobility)

    return p


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ConfigError, TraceFormatError, CodebookFormatError, FileNotFoundError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 1
    except Exception as exc:
        print("runtime error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
