"""Line-of-sight link budget: free-space path loss, thermal noise, SNR
composition, and the binary MCS usability gate.

No fading or blockage model is applied; link quality varies only through
distance and the beamforming gains at both ends, which is the effect under
study.  The MCS is fixed (no rate adaptation): an attempt at SNR below the
threshold fails outright, one at or above it succeeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .antenna import SPEED_OF_LIGHT, ArrayGeometry, Awv, gain_db
from .geometry import Direction, Pose, ap_direction_in_hmd_frame

import numpy as np


@dataclass(frozen=True)
class LinkBudgetConfig:
    tx_power_dbm: float = 10.0
    noise_figure_db: float = 10.0
    bandwidth_hz: float = 1.76e9
    carrier_hz: float = 60e9
    implementation_loss_db: float = 5.0
    extra_loss_db: float = 0.0


@dataclass(frozen=True)
class McsEntry:
    index: int
    phy_rate_bps: float
    snr_threshold_db: float


# fixed modulation-coding point used throughout; the threshold is a
# calibration knob, not a measured value
DEFAULT_MCS = McsEntry(21, 8.085e9, 18.0)


@dataclass(frozen=True)
class LinkState:
    t: float
    snr_db: float
    usable: bool


def free_space_path_loss_db(distance_m: float, carrier_hz: float) -> float:
    if distance_m <= 0.0:
        raise ValueError("distance must be positive")
    if carrier_hz <= 0.0:
        raise ValueError("carrier frequency must be positive")
    return 20.0 * math.log10(4.0 * math.pi * distance_m * carrier_hz / SPEED_OF_LIGHT)


def noise_floor_dbm(config: LinkBudgetConfig) -> float:
    return -174.0 + 10.0 * math.log10(config.bandwidth_hz) + config.noise_figure_db


def link_snr_db(config: LinkBudgetConfig, tx_gain_db: float, rx_gain_db: float, distance_m: float) -> float:
    """SNR from the budget: tx power plus both array gains, minus path loss,
    implementation and extra losses, referenced to the thermal noise floor."""
    fspl = free_space_path_loss_db(distance_m, config.carrier_hz)
    return (
        config.tx_power_dbm
        + tx_gain_db
        + rx_gain_db
        - fspl
        - config.implementation_loss_db
        - config.extra_loss_db
        - noise_floor_dbm(config)
    )


def snr_db(
    config: LinkBudgetConfig,
    ap_pose: Pose,
    ap_geometry: ArrayGeometry,
    ap_awv: Awv,
    hmd_pose: Pose,
    hmd_geometry: ArrayGeometry,
    hmd_awv: Awv,
) -> float:
    """Reference end-to-end SNR between two posed arrays.

    Each end's gain is evaluated toward the other end in its own local frame;
    the same gain applies for transmit and receive, so the result is
    symmetric in which end transmits.
    """
    distance = float(np.linalg.norm(ap_pose.position - hmd_pose.position))
    d_at_hmd = ap_direction_in_hmd_frame(hmd_pose, ap_pose.position)
    d_at_ap = ap_direction_in_hmd_frame(ap_pose, hmd_pose.position)
    return link_snr_db(
        config,
        gain_db(ap_geometry, ap_awv, d_at_ap),
        gain_db(hmd_geometry, hmd_awv, d_at_hmd),
        distance,
    )


def usable(snr_value_db: float, mcs: McsEntry = DEFAULT_MCS) -> bool:
    return snr_value_db >= mcs.snr_threshold_db


def parse_mcs_line(line: str) -> McsEntry:
    """Parse one MCS table entry of the form ``index rate_bps threshold_db``."""
    fields = line.split()
    if len(fields) != 3:
        raise ValueError("mcs entry must be 'index rate_bps threshold_db'")
    return McsEntry(int(fields[0]), float(fields[1]), float(fields[2]))
