"""Scenario configuration: one flat dataclass covering traffic, scheduling,
beamforming, motion, arrays, and the link budget, plus the key = value
config-file syntax used by the CLI.

Config files hold one ``key = value`` pair per line; ``#`` starts a comment.
Repeated ``mcs`` keys build the MCS table; ``mcs_index`` selects the active
entry.  Command-line ``--set key=value`` overrides win over file values.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field, fields

from .channel import DEFAULT_MCS, LinkBudgetConfig, McsEntry, parse_mcs_line

ALLOWED_DATA_RATES = (2e9, 5e9, 7e9, 8e9)
ALLOWED_BI = (0.1024, 1.024)
ALLOWED_BF_INTERVALS = (0.1, 1.0)
ROTATION_MODES = ("low", "high", "static")
RX_MODES = ("covrage", "sectors", "quasi_omni")
PREDICTION_MODES = ("extrapolation", "device", "oracle", "none")


class ConfigError(ValueError):
    """Invalid or inconsistent scenario configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    # scenario
    sim_time: float = 20.0
    seed: int = 1
    room_x: float = 20.0
    room_y: float = 10.0
    room_z: float = 10.0
    hmd_height: float = 1.7
    # motion
    rotation: str = "high"  # low | high | static | path to a trace CSV
    peak_dps_low: float = 60.0
    peak_dps_high: float = 300.0
    trace_sample_rate: float = 1000.0
    walk_speed: float = 1.0
    walk_step_interval: float = 0.5
    # traffic
    data_rate: float = 5e9
    frame_rate: float = 100.0
    deadline: float = 0.020
    queue_drop: float = 0.0  # 0 means "same as deadline"
    mpdu_bytes: int = 65536
    header_bytes: int = 100
    per_mpdu_overhead: float = 3e-6
    # scheduling
    bi_duration: float = 0.1024
    bhi_duration: float = 2e-3
    sls_duration: float = 0.75e-3
    bf_location: str = "dti"  # abft | dti
    bf_interval: float = 0.1  # DTI beamforming period
    # beamforming
    rx_beamforming: str = "covrage"
    prediction: str = "device"
    ap_rows: int = 8
    ap_cols: int = 8
    hmd_rows: int = 0  # 0 = resolved from rx_beamforming
    hmd_cols: int = 0
    spacing: float = 0.5
    codebook_seed: int = 7
    qo_samples: int = 1000
    qo_iters: int = 40
    qo_iters_large: int = 6  # synthesis budget for arrays of 1024+ elements
    # link budget
    tx_power_dbm: float = 10.0
    noise_figure_db: float = 10.0
    bandwidth_hz: float = 1.76e9
    carrier_hz: float = 60e9
    implementation_loss_db: float = 5.0
    extra_loss_db: float = 0.0
    mcs_index: int = 21
    mcs_table: tuple[McsEntry, ...] = (DEFAULT_MCS,)

    # -- derived views ----------------------------------------------------

    @property
    def burst_interval(self) -> float:
        return 1.0 / self.frame_rate

    @property
    def burst_bits(self) -> int:
        return int(round(self.data_rate * self.burst_interval))

    @property
    def queue_drop_age(self) -> float:
        return self.queue_drop if self.queue_drop > 0.0 else self.deadline

    @property
    def x_bounds(self) -> tuple[float, float]:
        return (-self.room_x / 2.0, self.room_x / 2.0)

    @property
    def y_bounds(self) -> tuple[float, float]:
        return (-self.room_y / 2.0, self.room_y / 2.0)

    @property
    def ap_position(self) -> tuple[float, float, float]:
        return (0.0, 0.0, self.room_z)

    @property
    def mcs(self) -> McsEntry:
        for entry in self.mcs_table:
            if entry.index == self.mcs_index:
                return entry
        raise ConfigError(f"mcs_index {self.mcs_index} not present in the mcs table")

    @property
    def link_budget(self) -> LinkBudgetConfig:
        return LinkBudgetConfig(
            self.tx_power_dbm,
            self.noise_figure_db,
            self.bandwidth_hz,
            self.carrier_hz,
            self.implementation_loss_db,
            self.extra_loss_db,
        )

    def hmd_shape(self) -> tuple[int, int]:
        """HMD array size; defaults to 64x64 except for the sector-codebook
        mode, which uses the small array it can sweep."""
        if (self.hmd_rows == 0) != (self.hmd_cols == 0):
            raise ConfigError("set both hmd_rows and hmd_cols or neither")
        if self.hmd_rows > 0:
            return (self.hmd_rows, self.hmd_cols)
        if self.rx_beamforming == "sectors":
            return (8, 8)
        return (64, 64)

    def validate(self) -> "ScenarioConfig":
        if self.sim_time <= 0.0:
            raise ConfigError("sim_time must be positive")
        if self.data_rate not in ALLOWED_DATA_RATES:
            rates = ", ".join(f"{r:g}" for r in ALLOWED_DATA_RATES)
            raise ConfigError(f"data_rate {self.data_rate:g} not in {{{rates}}}")
        if self.bi_duration not in ALLOWED_BI:
            raise ConfigError(f"bi_duration {self.bi_duration:g} not in {{0.1024, 1.024}}")
        if self.bf_location not in ("abft", "dti"):
            raise ConfigError("bf_location must be abft or dti")
        if self.bf_location == "dti" and self.bf_interval not in ALLOWED_BF_INTERVALS:
            raise ConfigError(f"bf_interval {self.bf_interval:g} not in {{0.1, 1.0}}")
        if self.rx_beamforming not in RX_MODES:
            raise ConfigError(f"rx_beamforming must be one of {', '.join(RX_MODES)}")
        if self.prediction not in PREDICTION_MODES:
            raise ConfigError(f"prediction must be one of {', '.join(PREDICTION_MODES)}")
        if self.rx_beamforming == "quasi_omni" and self.prediction != "none":
            raise ConfigError("quasi_omni beamforming requires prediction = none")
        if self.rotation not in ROTATION_MODES and not os.path.exists(self.rotation):
            raise ConfigError(
                f"rotation must be one of {', '.join(ROTATION_MODES)} or an existing trace file"
            )
        if self.frame_rate <= 0.0:
            raise ConfigError("frame_rate must be positive")
        if abs(self.data_rate / self.frame_rate - round(self.data_rate / self.frame_rate)) > 1e-9:
            raise ConfigError("data_rate / frame_rate must be an integer number of bits")
        if not (0.0 < self.bhi_duration < self.bi_duration):
            raise ConfigError("bhi_duration must lie strictly inside the beacon interval")
        if self.sls_duration <= 0.0:
            raise ConfigError("sls_duration must be positive")
        if self.deadline <= 0.0:
            raise ConfigError("deadline must be positive")
        if self.mpdu_bytes <= 0 or self.header_bytes < 0:
            raise ConfigError("mpdu_bytes must be positive and header_bytes nonnegative")
        if self.walk_speed < 0.0:
            raise ConfigError("walk_speed must be nonnegative")
        rows, cols = self.hmd_shape()
        if rows < 1 or cols < 1:
            raise ConfigError("hmd array must have positive dimensions")
        if self.rx_beamforming == "sectors" and (rows > 16 or cols > 16):
            raise ConfigError("sectors beamforming supports arrays up to 16x16")
        if self.ap_rows < 1 or self.ap_cols < 1:
            raise ConfigError("ap array must have positive dimensions")
        self.mcs  # raises if the index is missing
        return self


_SCALAR_FIELDS = {
    f.name: f.type for f in fields(ScenarioConfig) if f.name != "mcs_table"
}


def _coerce(name: str, typ: str, value: str):
    value = value.strip()
    try:
        if typ == "int":
            return int(value)
        if typ == "float":
            return float(value)
        return value
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {value!r} as {typ}")


def parse_config_lines(lines, source: str = "<config>") -> dict:
    """Parse key = value lines into a field dict (mcs lines accumulate)."""
    values: dict = {}
    mcs_entries: list[McsEntry] = []
    for n, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key == "mcs":
            try:
                mcs_entries.append(parse_mcs_line(value))
            except ValueError as exc:
                raise ConfigError(f"{source}:{n}: {exc}")
            continue
        if key not in _SCALAR_FIELDS:
            known = ", ".join(sorted(_SCALAR_FIELDS) + ["mcs"])
            raise ConfigError(f"{source}:{n}: unknown key {key!r}; valid keys: {known}")
        values[key] = _coerce(key, _SCALAR_FIELDS[key], value)
    if mcs_entries:
        values["mcs_table"] = tuple(mcs_entries)
    return values


def load_config(path=None, overrides=None) -> ScenarioConfig:
    """Build a validated config from an optional file plus override pairs."""
    values: dict = {}
    if path is not None:
        with open(path) as fh:
            values.update(parse_config_lines(fh.read().splitlines(), source=str(path)))
    if overrides:
        values.update(parse_config_lines(overrides, source="<override>"))
    try:
        cfg = ScenarioConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc))
    return cfg.validate()


def config_echo_lines(cfg: ScenarioConfig) -> list[str]:
    """Every field as a key = value line, for run-output headers."""
    out = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if f.name == "mcs_table":
            for entry in v:
                out.append(f"mcs = {entry.index} {entry.phy_rate_bps:.17g} {entry.snr_threshold_db:.17g}")
            continue
        if isinstance(v, float):
            out.append(f"{f.name} = {v:.17g}")
        else:
            out.append(f"{f.name} = {v}")
    return out
