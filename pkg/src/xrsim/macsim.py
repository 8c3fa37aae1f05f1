"""Event-driven downlink simulator.

A single heap of ``(time, sequence)`` entries drives the beacon-interval
schedule, sector sweeps, burst traffic and per-MPDU transmission.  Every
stochastic input (codebooks, rotation trace, walk) is derived from the
scenario seed before the first event runs, so two runs of the same config
replay identically, down to the bytes of the event log.

Medium model: data MPDUs are non-preemptive.  A beacon header interval or a
sector sweep never cuts an MPDU short; the in-flight MPDU completes and the
next one waits.  Aside from that carry-over, no data transmission starts
inside a BHI or sweep.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .antenna import ArrayGeometry, Awv, AwvEvaluator
from .channel import link_snr_db
from .codebook import Codebook, cached_quasi_omni, generate_sector_codebook
from .config import ConfigError, ScenarioConfig
from .covrage import covrage_beam
from .geometry import Pose, Quaternion, ap_direction_in_hmd_frame, predict_pose
from .mobility import generate_rotation_trace, generate_walk, load_trace, pose_at, static_trace

EVENT_KINDS = (
    "beacon_start",
    "bhi_end",
    "burst_arrival",
    "mpdu_tx_done",
    "bf_trigger",
    "sls_done",
    "sim_end",
)

# ceiling-mounted array, boresight straight down (+x local -> -z world)
AP_ORIENTATION = Quaternion.from_axis_angle((0.0, 1.0, 0.0), math.pi / 2.0)

# past-motion window for the velocity estimate behind extrapolated prediction
_VELOCITY_EST_DT = 0.01


@dataclass(frozen=True)
class BiConfig:
    """Beacon-interval schedule knobs."""

    bi_duration: float
    bhi_duration: float = 2.0e-3
    sls_duration: float = 0.75e-3
    bf_location: str = "dti"
    dti_bf_interval: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.bhi_duration < self.bi_duration:
            raise ValueError("bhi_duration must lie strictly inside the beacon interval")
        if self.bf_location not in ("abft", "dti"):
            raise ValueError("bf_location must be 'abft' or 'dti'")


@dataclass(frozen=True)
class TrafficConfig:
    burst_interval: float = 0.01
    data_rate: float = 5e9
    deadline: float = 0.020


@dataclass(frozen=True)
class Mpdu:
    frame_id: int
    size_bits: int
    enqueue_t: float


@dataclass
class FrameRecord:
    """Lifecycle of one video frame; ``completed`` stays None if the sim ends
    or the queue drops it first."""

    frame_id: int
    created: float
    completed: Optional[float] = None
    delivered: bool = False


@dataclass(frozen=True)
class SimEvent:
    t: float
    kind: str
    payload: str = ""


@dataclass
class RunResult:
    config: ScenarioConfig
    frames: list
    counters: dict
    events: Optional[list] = None
    tx_intervals: Optional[list] = None  # (start, end, ok, frame_id)
    bhi_intervals: Optional[list] = None
    sls_intervals: Optional[list] = None


def mpdu_sizes_bits(config: ScenarioConfig) -> list[int]:
    """Per-MPDU on-air sizes for one burst: payload chunks plus the fixed
    per-MPDU header."""
    chunk = config.mpdu_bytes * 8
    header = config.header_bytes * 8
    total = config.burst_bits
    n_full, rem = divmod(total, chunk)
    sizes = [chunk + header] * n_full
    if rem:
        sizes.append(rem + header)
    return sizes


def frame_airtime(config: ScenarioConfig) -> float:
    """Uninterrupted service time of one whole burst."""
    rate = config.mcs.phy_rate_bps
    sizes = mpdu_sizes_bits(config)
    return sum(sizes) / rate + len(sizes) * config.per_mpdu_overhead


def best_sector(evals, direction, fixed_term_db: float = 0.0) -> int:
    """Sweep winner: highest combined gain, ties broken toward the lowest id.

    ``evals`` is a list of (sector_id, AwvEvaluator) pairs in ascending id
    order, so a strictly-greater scan lands on the first of any tied group.
    """
    best_id, best_metric = None, None
    for sid, ev in evals:
        metric = ev.gain_db(direction) + fixed_term_db
        if best_metric is None or metric > best_metric:
            best_id, best_metric = sid, metric
    return best_id


def write_event_log(path, events) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("t,kind,detail\n")
        for ev in events:
            fh.write("%.9f,%s,%s\n" % (ev.t, ev.kind, ev.payload))


class Simulator:
    """One scenario run.  Build with a validated config, call :meth:`run`."""

    def __init__(self, config: ScenarioConfig, collect_events: bool = False):
        config.validate()
        self.cfg = config
        self.bi = BiConfig(
            config.bi_duration,
            config.bhi_duration,
            config.sls_duration,
            config.bf_location,
            config.bf_interval,
        )
        self.traffic = TrafficConfig(config.burst_interval, config.data_rate, config.deadline)
        self.collect = collect_events

        self._build_motion()
        self._build_arrays()

        self.queue: deque = deque()
        self.frames: dict[int, FrameRecord] = {}
        self.remaining: dict[int, int] = {}
        self.mpdu_count: dict[int, int] = {}

        self.in_bhi = False
        self.sls_active = False
        self.pending_sls = False
        self.postponed_bf = False
        self.tx_busy = False

        self.counters = {
            "frames_total": 0,
            "frames_delivered": 0,
            "frames_dropped": 0,
            "mpdu_attempts": 0,
            "mpdu_failures": 0,
            "sls_runs": 0,
            "bf_updates": 0,
            "bhi_count": 0,
        }
        self.events: list[SimEvent] = []
        self.tx_intervals: list = []
        self.bhi_intervals: list = []
        self.sls_intervals: list = []

        self._heap: list = []
        self._seq = itertools.count()

    # -- setup ------------------------------------------------------------

    def _build_motion(self) -> None:
        cfg = self.cfg
        ss = np.random.SeedSequence(cfg.seed)
        trace_seed, walk_seed = ss.spawn(2)
        if cfg.rotation == "static":
            self.trace = static_trace(max(cfg.sim_time, 1.0))
        elif cfg.rotation == "low":
            self.trace = generate_rotation_trace(
                cfg.peak_dps_low, cfg.sim_time, cfg.trace_sample_rate, trace_seed
            )
        elif cfg.rotation == "high":
            self.trace = generate_rotation_trace(
                cfg.peak_dps_high, cfg.sim_time, cfg.trace_sample_rate, trace_seed
            )
        else:
            self.trace = load_trace(cfg.rotation)
        if cfg.prediction == "device" and not self.trace.has_device:
            raise ConfigError("prediction = device needs a trace with device-prediction columns")
        self.walk = generate_walk(
            cfg.x_bounds,
            cfg.y_bounds,
            cfg.walk_speed,
            cfg.walk_step_interval,
            cfg.sim_time,
            walk_seed,
        )
        self.ap_position = np.array(cfg.ap_position, dtype=float)
        self.ap_pose = Pose(0.0, self.ap_position, AP_ORIENTATION)

    def _qo(self, geometry: ArrayGeometry) -> Awv:
        cfg = self.cfg
        iters = cfg.qo_iters_large if geometry.n_elements >= 1024 else cfg.qo_iters
        return cached_quasi_omni(
            geometry.rows,
            geometry.cols,
            geometry.spacing_wavelengths,
            geometry.carrier_hz,
            cfg.qo_samples,
            cfg.codebook_seed,
            iters,
        )

    def _build_arrays(self) -> None:
        cfg = self.cfg
        self.ap_geometry = ArrayGeometry(cfg.ap_rows, cfg.ap_cols, cfg.spacing, cfg.carrier_hz)
        self.ap_codebook = generate_sector_codebook(
            self.ap_geometry, quasi_omni=self._qo(self.ap_geometry)
        )
        self.ap_evals = [
            (sid, AwvEvaluator(self.ap_geometry, awv)) for sid, awv in self.ap_codebook.all_awvs()
        ]
        self.ap_qo_eval = self.ap_evals[-1][1]

        rows, cols = cfg.hmd_shape()
        self.hmd_geometry = ArrayGeometry(rows, cols, cfg.spacing, cfg.carrier_hz)
        self.hmd_qo_eval = AwvEvaluator(self.hmd_geometry, self._qo(self.hmd_geometry))
        if cfg.rx_beamforming == "sectors":
            book = generate_sector_codebook(
                self.hmd_geometry, quasi_omni=self._qo(self.hmd_geometry)
            )
            self.hmd_evals = [(sid, AwvEvaluator(self.hmd_geometry, awv)) for sid, awv in book.all_awvs()]
        else:
            self.hmd_evals = None

        # discovery state until the first sweep completes
        self.ap_sector = self.ap_codebook.quasi_omni_id
        self.ap_eval = self.ap_qo_eval
        self.hmd_eval = self.hmd_qo_eval
        self.hmd_label = "qo"

    # -- event plumbing ---------------------------------------------------

    def _push(self, t: float, kind: str, payload=None) -> None:
        heapq.heappush(self._heap, (t, next(self._seq), kind, payload))

    def _log(self, t: float, kind: str, detail: str) -> None:
        if self.collect:
            self.events.append(SimEvent(t, kind, detail))

    # -- channel ----------------------------------------------------------

    def _hmd_pose(self, t: float) -> Pose:
        return pose_at(self.trace, self.walk, t, self.cfg.hmd_height)

    def _link_usable(self, t: float) -> bool:
        hmd_pose = self._hmd_pose(t)
        diff = hmd_pose.position - self.ap_position
        distance = float(np.linalg.norm(diff))
        d_at_ap = ap_direction_in_hmd_frame(self.ap_pose, hmd_pose.position)
        d_at_hmd = ap_direction_in_hmd_frame(hmd_pose, self.ap_position)
        snr = link_snr_db(
            self.cfg.link_budget,
            self.ap_eval.gain_db(d_at_ap),
            self.hmd_eval.gain_db(d_at_hmd),
            distance,
        )
        return snr >= self.cfg.mcs.snr_threshold_db

    # -- beamforming ------------------------------------------------------

    def _predicted_pose(self, now: Pose, horizon: float) -> Pose:
        mode = self.cfg.prediction
        if mode == "none":
            return Pose(now.t + horizon, now.position, now.orientation)
        if mode == "extrapolation":
            t_prev = max(0.0, now.t - _VELOCITY_EST_DT)
            history = [self._hmd_pose(t_prev), now] if t_prev < now.t else [now]
            return predict_pose(history, horizon, "constant_velocity")
        if mode == "device":
            return predict_pose([now], horizon, "device", self.trace)
        return predict_pose([now], horizon, "oracle", self.trace)

    def _apply_beamform(self, t: float) -> str:
        """Select the AP sector and refresh the HMD side; returns a log tag."""
        cfg = self.cfg
        hmd_pose = self._hmd_pose(t)
        d_at_ap = ap_direction_in_hmd_frame(self.ap_pose, hmd_pose.position)
        d_at_hmd = ap_direction_in_hmd_frame(hmd_pose, self.ap_position)

        # initiator sweep: each AP sector probed against the quasi-omni listener
        rx_term = self.hmd_qo_eval.gain_db(d_at_hmd)
        self.ap_sector = best_sector(self.ap_evals, d_at_ap, rx_term)
        self.ap_eval = self.ap_evals[self.ap_sector][1]

        if cfg.rx_beamforming == "covrage":
            horizon = cfg.bf_interval if cfg.bf_location == "dti" else cfg.bi_duration
            pred = self._predicted_pose(hmd_pose, horizon)
            awv = covrage_beam(self.hmd_geometry, hmd_pose, pred, self.ap_position)
            self.hmd_eval = AwvEvaluator(self.hmd_geometry, awv)
            self.hmd_label = "covrage"
        elif cfg.rx_beamforming == "sectors":
            # responder sweep against the AP's quasi-omni
            tx_term = self.ap_qo_eval.gain_db(d_at_ap)
            best_id = best_sector(self.hmd_evals, d_at_hmd, tx_term)
            self.hmd_eval = self.hmd_evals[best_id][1]
            self.hmd_label = "sector=%d" % best_id
        self.counters["bf_updates"] += 1
        return "sector=%d hmd=%s" % (self.ap_sector, self.hmd_label)

    # -- medium -----------------------------------------------------------

    def _begin_sls(self, t: float) -> None:
        self.sls_active = True
        self.counters["sls_runs"] += 1
        if self.collect:
            self.sls_intervals.append((t, t + self.bi.sls_duration))
        self._push(t + self.bi.sls_duration, "sls_done")

    def _drop_expired(self, t: float) -> None:
        drop_age = self.cfg.queue_drop_age
        while self.queue and (t - self.queue[0].enqueue_t) > drop_age:
            fid = self.queue[0].frame_id
            while self.queue and self.queue[0].frame_id == fid:
                self.queue.popleft()
            self.remaining.pop(fid, None)
            self.counters["frames_dropped"] += 1

    def _try_start_tx(self, t: float) -> None:
        if self.tx_busy or self.in_bhi or self.sls_active or self.pending_sls:
            return
        self._drop_expired(t)
        if not self.queue:
            return
        mpdu = self.queue[0]
        ok = self._link_usable(t)
        self.counters["mpdu_attempts"] += 1
        if not ok:
            self.counters["mpdu_failures"] += 1
        airtime = mpdu.size_bits / self.cfg.mcs.phy_rate_bps + self.cfg.per_mpdu_overhead
        self.tx_busy = True
        if self.collect:
            self.tx_intervals.append((t, t + airtime, ok, mpdu.frame_id))
        self._push(t + airtime, "mpdu_tx_done", (mpdu, ok, t))

    # -- handlers ---------------------------------------------------------

    def _on_beacon_start(self, t: float, index) -> None:
        self.in_bhi = True
        self.counters["bhi_count"] += 1
        if self.collect:
            self.bhi_intervals.append((t, t + self.bi.bhi_duration))
        self._log(t, "beacon_start", "index=%d" % index)
        self._push(t + self.bi.bhi_duration, "bhi_end")

    def _on_bhi_end(self, t: float) -> None:
        self.in_bhi = False
        detail = ""
        if self.bi.bf_location == "abft":
            detail = self._apply_beamform(t)
        if self.postponed_bf:
            self.postponed_bf = False
            if self.tx_busy:
                self.pending_sls = True
            else:
                self._begin_sls(t)
        self._log(t, "bhi_end", detail)
        self._try_start_tx(t)

    def _on_bf_trigger(self, t: float) -> None:
        if self.in_bhi:
            self.postponed_bf = True
            self._log(t, "bf_trigger", "postponed")
        elif self.tx_busy:
            self.pending_sls = True
            self._log(t, "bf_trigger", "pending")
        else:
            self._log(t, "bf_trigger", "start")
            self._begin_sls(t)

    def _on_sls_done(self, t: float) -> None:
        self.sls_active = False
        detail = self._apply_beamform(t)
        self._log(t, "sls_done", detail)
        self._try_start_tx(t)

    def _on_burst_arrival(self, t: float, frame_id: int) -> None:
        sizes = mpdu_sizes_bits(self.cfg)
        self.frames[frame_id] = FrameRecord(frame_id, t)
        self.remaining[frame_id] = len(sizes)
        self.mpdu_count[frame_id] = len(sizes)
        for size in sizes:
            self.queue.append(Mpdu(frame_id, size, t))
        self.counters["frames_total"] += 1
        self._log(t, "burst_arrival", "frame=%d mpdus=%d" % (frame_id, len(sizes)))
        self._try_start_tx(t)

    def _on_mpdu_tx_done(self, t: float, payload) -> None:
        mpdu, ok, start = payload
        self.tx_busy = False
        fid = mpdu.frame_id
        # drops only run on a free medium, so the in-flight MPDU is still the head
        sent = self.mpdu_count[fid] - self.remaining[fid]
        if ok:
            self.queue.popleft()
            sent += 1
            self.remaining[fid] -= 1
            if self.remaining[fid] == 0:
                del self.remaining[fid]
                rec = self.frames[fid]
                rec.completed = t
                rec.delivered = (t - rec.created) <= self.traffic.deadline
                if rec.delivered:
                    self.counters["frames_delivered"] += 1
        self._log(
            t,
            "mpdu_tx_done",
            "frame=%d mpdu=%d ok=%d start=%.9f" % (fid, sent, int(ok), start),
        )
        if self.pending_sls:
            self.pending_sls = False
            if self.in_bhi:
                self.postponed_bf = True
            else:
                self._begin_sls(t)
            return
        self._try_start_tx(t)

    # -- loop -------------------------------------------------------------

    def run(self) -> RunResult:
        cfg = self.cfg
        n_bi = int(math.ceil(cfg.sim_time / self.bi.bi_duration - 1e-9))
        for k in range(n_bi):
            self._push(k * self.bi.bi_duration, "beacon_start", k)
        if self.bi.bf_location == "dti":
            n_trig = int(math.ceil(cfg.sim_time / self.bi.dti_bf_interval - 1e-9))
            for k in range(n_trig):
                self._push(k * self.bi.dti_bf_interval, "bf_trigger")
        n_bursts = int(math.ceil(cfg.sim_time / self.traffic.burst_interval - 1e-9))
        for k in range(n_bursts):
            self._push(k * self.traffic.burst_interval, "burst_arrival", k)
        self._push(cfg.sim_time, "sim_end")

        while self._heap:
            t, _, kind, payload = heapq.heappop(self._heap)
            if kind == "sim_end":
                self._log(t, "sim_end", "")
                break
            if kind == "beacon_start":
                self._on_beacon_start(t, payload)
            elif kind == "bhi_end":
                self._on_bhi_end(t)
            elif kind == "bf_trigger":
                self._on_bf_trigger(t)
            elif kind == "sls_done":
                self._on_sls_done(t)
            elif kind == "burst_arrival":
                self._on_burst_arrival(t, payload)
            else:
                self._on_mpdu_tx_done(t, payload)
            # work conservation: a nonempty queue never waits on a free medium
            if self.queue and not (self.tx_busy or self.in_bhi or self.sls_active):
                raise RuntimeError("medium idle with pending data at t=%.9f" % t)

        records = [self.frames[fid] for fid in sorted(self.frames)]
        return RunResult(
            cfg,
            records,
            dict(self.counters),
            self.events if self.collect else None,
            self.tx_intervals if self.collect else None,
            self.bhi_intervals if self.collect else None,
            self.sls_intervals if self.collect else None,
        )


def run(config: ScenarioConfig, collect_events: bool = False) -> RunResult:
    """Run one scenario to completion and return every frame's record."""
    return Simulator(config, collect_events).run()
