"""Frame-latency summaries: reliability, latency CDF, and CSV output.

A frame is delivered when its last packet lands within the deadline.  Frames
that complete late still contribute their latency to the CDF (the curve may
extend past the deadline); frames that never complete only enlarge the
denominator.
"""

from __future__ import annotations

import statistics
from bisect import bisect_right
from dataclasses import dataclass
from typing import Optional, Sequence

from .macsim import FrameRecord


@dataclass(frozen=True)
class RunSummary:
    reliability: float
    latency_cdf: tuple  # ((latency_s, cumulative_fraction), ...) ascending
    frame_count: int
    lost_count: int
    min_latency: Optional[float]
    median_latency: Optional[float]
    max_latency: Optional[float]


def summarize(records: Sequence[FrameRecord], deadline: float) -> RunSummary:
    """Aggregate frame records into reliability and a latency CDF.

    The CDF is normalized by the total frame count, so its final value is the
    fraction of frames that completed at all; its value at the deadline is the
    reliability.
    """
    if not records:
        raise ValueError("no frame records to summarize")
    total = len(records)
    latencies = sorted(r.completed - r.created for r in records if r.completed is not None)
    delivered = sum(1 for lat in latencies if lat <= deadline)

    cdf: list[tuple[float, float]] = []
    for i, lat in enumerate(latencies):
        frac = (i + 1) / total
        if cdf and cdf[-1][0] == lat:
            cdf[-1] = (lat, frac)
        else:
            cdf.append((lat, frac))

    return RunSummary(
        reliability=delivered / total,
        latency_cdf=tuple(cdf),
        frame_count=total,
        lost_count=total - delivered,
        min_latency=latencies[0] if latencies else None,
        median_latency=statistics.median(latencies) if latencies else None,
        max_latency=latencies[-1] if latencies else None,
    )


def cdf_value(cdf: Sequence[tuple], latency: float) -> float:
    """Step-function lookup: fraction of frames with latency <= the argument."""
    values = [pair[0] for pair in cdf]
    i = bisect_right(values, latency)
    return cdf[i - 1][1] if i else 0.0


def _fmt_opt_ms(value: Optional[float]) -> str:
    return "none" if value is None else "%.6f" % (value * 1e3)


def write_outputs(
    summary: RunSummary,
    records: Sequence[FrameRecord],
    frames_path=None,
    cdf_path=None,
    summary_path=None,
    header_lines: Sequence[str] = (),
) -> None:
    """Write per-frame CSV, CDF CSV and key-value summary (any subset).

    ``header_lines`` (typically the config echo) are prepended as comments to
    the per-frame CSV and the summary so every output names its provenance.
    Output is byte-deterministic for identical inputs.
    """
    if frames_path is not None:
        with open(frames_path, "w", encoding="ascii", newline="\n") as fh:
            for line in header_lines:
                fh.write("# %s\n" % line)
            fh.write("frame_id,created_s,completed_s,delivered\n")
            for r in records:
                completed = "" if r.completed is None else "%.17g" % r.completed
                fh.write("%d,%.17g,%s,%d\n" % (r.frame_id, r.created, completed, int(r.delivered)))
    if cdf_path is not None:
        with open(cdf_path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("latency_ms,fraction\n")
            for lat, frac in summary.latency_cdf:
                fh.write("%.9f,%.9f\n" % (lat * 1e3, frac))
    if summary_path is not None:
        with open(summary_path, "w", encoding="ascii", newline="\n") as fh:
            for line in header_lines:
                fh.write("# %s\n" % line)
            fh.write("frame_count=%d\n" % summary.frame_count)
            fh.write("delivered_count=%d\n" % (summary.frame_count - summary.lost_count))
            fh.write("lost_count=%d\n" % summary.lost_count)
            fh.write("reliability=%.4f\n" % summary.reliability)
            fh.write("min_latency_ms=%s\n" % _fmt_opt_ms(summary.min_latency))
            fh.write("median_latency_ms=%s\n" % _fmt_opt_ms(summary.median_latency))
            fh.write("max_latency_ms=%s\n" % _fmt_opt_ms(summary.max_latency))


def read_frame_records(path) -> list[FrameRecord]:
    """Read back a per-frame CSV written by :func:`write_outputs`."""
    records = []
    with open(path, "r", encoding="ascii") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#") or line.startswith("frame_id"):
                continue
            fields = line.split(",")
            if len(fields) != 4:
                raise ValueError("malformed frame row: %r" % line)
            completed = float(fields[2]) if fields[2] else None
            records.append(FrameRecord(int(fields[0]), float(fields[1]), completed, fields[3] == "1"))
    return records
