"""Trajectory-covering receive beamforming (the `covrage` mode).

Instead of a single pencil beam, the headset array is logically split into
contiguous column blocks.  Each block steers at one point of the predicted
rotational trajectory of the AP direction in the headset frame, so the union
of sub-beams covers the whole arc the AP will sweep through between
beamforming updates.  Per-block phase offsets align adjacent blocks where
their lobes cross so the composite pattern has no destructive seams.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .antenna import ArrayGeometry, Awv, steering_phases, _NULL_FIELD
from .geometry import Direction, Pose, Quaternion, slerp

K_MAX_DEFAULT = 8
# fraction of the aperture-limited beamwidth formula 0.886 lambda / (n d)
_BEAMWIDTH_COEFF = 0.886


@dataclass(frozen=True)
class Trajectory:
    """Rotation of the headset from now (s=0) to the predicted pose (s=1),
    together with the world-frame unit vector toward the AP."""

    q_now: Quaternion
    q_pred: Quaternion
    d_world: np.ndarray
    span_deg: float

    def direction_at(self, s: float) -> Direction:
        q = slerp(self.q_now, self.q_pred, s)
        return Direction.from_unit_vector(q.rotate_inverse(self.d_world))


def trajectory_from_poses(pose_now: Pose, pose_pred: Pose, ap_position: Sequence[float]) -> Trajectory:
    diff = np.asarray(ap_position, dtype=float) - pose_now.position
    n = float(np.linalg.norm(diff))
    if n < 1e-12:
        raise ValueError("headset and access point positions coincide")
    d_world = diff / n
    a = pose_now.orientation.rotate_inverse(d_world)
    b = pose_pred.orientation.rotate_inverse(d_world)
    dot = max(-1.0, min(1.0, float(np.dot(a, b))))
    return Trajectory(pose_now.orientation, pose_pred.orientation, d_world, math.degrees(math.acos(dot)))


@dataclass(frozen=True)
class SubArrayPlan:
    """Column-block partition with per-block steering targets, the lobe
    crossover directions between adjacent blocks, and per-block phase
    offsets."""

    blocks: tuple[tuple[int, int], ...]
    targets: tuple[Direction, ...]
    crossovers: tuple[Direction, ...]
    offsets: tuple[float, ...]

    @property
    def k(self) -> int:
        return len(self.blocks)

    def __post_init__(self):
        if not (len(self.blocks) == len(self.targets) == len(self.offsets)):
            raise ValueError("blocks, targets and offsets must have equal length")
        if len(self.crossovers) != max(0, len(self.blocks) - 1):
            raise ValueError("need one crossover per adjacent block pair")


def subarray_beamwidth_deg(cols_per_block: int, spacing_wavelengths: float) -> float:
    return math.degrees(_BEAMWIDTH_COEFF / (cols_per_block * spacing_wavelengths))


def choose_block_count(cols: int, spacing_wavelengths: float, span_deg: float, k_max: int = K_MAX_DEFAULT) -> int:
    """Smallest block count whose combined sub-beam width covers the span.

    The needed count depends on the per-block beamwidth, which itself depends
    on the count, so the rule is iterated from k=1 upward until it stops
    asking for more blocks or saturates at k_max.
    """
    k = 1
    for _ in range(k_max + 1):
        width = subarray_beamwidth_deg(max(1, cols // k), spacing_wavelengths)
        k_next = min(max(math.ceil(span_deg / width), 1), k_max)
        if k_next <= k:
            break
        k = k_next
    return k


def plan_with_k(geometry: ArrayGeometry, trajectory: Trajectory, k: int) -> SubArrayPlan:
    """Equal column blocks (remainder to the last), targets at the trajectory
    midpoints s=(i+0.5)/k, crossovers at the block boundaries s=i/k."""
    if k < 1 or k > geometry.cols:
        raise ValueError("block count must be in [1, cols]")
    per = geometry.cols // k
    blocks = []
    for i in range(k):
        c0 = i * per
        c1 = (i + 1) * per if i < k - 1 else geometry.cols
        blocks.append((c0, c1))
    targets = tuple(trajectory.direction_at((i + 0.5) / k) for i in range(k))
    crossovers = tuple(trajectory.direction_at(i / k) for i in range(1, k))
    offsets = _alignment_offsets(geometry, tuple(blocks), targets, crossovers)
    return SubArrayPlan(tuple(blocks), targets, crossovers, tuple(offsets))


def plan_subarrays(geometry: ArrayGeometry, trajectory: Trajectory, k_max: int = K_MAX_DEFAULT) -> SubArrayPlan:
    k = choose_block_count(geometry.cols, geometry.spacing_wavelengths, trajectory.span_deg, k_max)
    return plan_with_k(geometry, trajectory, k)


def _block_field(geometry: ArrayGeometry, block: tuple[int, int], phases: np.ndarray, direction: Direction) -> complex:
    """Far-field contribution of one column block, global element positions."""
    c0, c1 = block
    u = direction.to_unit_vector()
    k = 2.0 * math.pi / geometry.wavelength
    pos = geometry.element_positions().reshape(geometry.rows, geometry.cols, 3)[:, c0:c1]
    ph = phases.reshape(geometry.rows, geometry.cols)[:, c0:c1]
    amplitude = 1.0 / math.sqrt(geometry.n_elements)
    total = np.exp(1j * (ph + k * (pos @ u))).sum()
    return amplitude * complex(total)


def _alignment_offsets(geometry, blocks, targets, crossovers) -> list[float]:
    """Sequential phase offsets: block 1 is the reference; each later block is
    rotated so its field adds in phase with the accumulated field of all
    earlier blocks at the crossover direction between them.  A block whose
    field is a perfect null at the crossover keeps offset 0."""
    steers = [steering_phases(geometry, t).phases for t in targets]
    offsets = [0.0]
    for i in range(1, len(blocks)):
        u_cross = crossovers[i - 1]
        acc = 0j
        for j in range(i):
            acc += _block_field(geometry, blocks[j], steers[j], u_cross) * cmath.exp(1j * offsets[j])
        own = _block_field(geometry, blocks[i], steers[i], u_cross)
        if abs(acc) < _NULL_FIELD or abs(own) < _NULL_FIELD:
            offsets.append(0.0)
        else:
            offsets.append(cmath.phase(acc) - cmath.phase(own))
    return offsets


def synthesize_awv(geometry: ArrayGeometry, plan: SubArrayPlan) -> Awv:
    """Assemble the composite AWV: each block gets the full-array steering
    phases toward its own target plus the block phase offset."""
    phases = np.empty((geometry.rows, geometry.cols))
    for block, target, offset in zip(plan.blocks, plan.targets, plan.offsets):
        c0, c1 = block
        steer = steering_phases(geometry, target).phases.reshape(geometry.rows, geometry.cols)
        phases[:, c0:c1] = steer[:, c0:c1] + offset
    return Awv(phases.ravel())


def covrage_beam(
    geometry: ArrayGeometry,
    pose_now: Pose,
    pose_pred: Pose,
    ap_position: Sequence[float],
    k_max: int = K_MAX_DEFAULT,
) -> Awv:
    """Composite receive beam covering the predicted AP-direction arc.

    With no predicted rotation this degenerates to a single steered beam at
    the current AP direction.
    """
    trajectory = trajectory_from_poses(pose_now, pose_pred, ap_position)
    plan = plan_subarrays(geometry, trajectory, k_max)
    return synthesize_awv(geometry, plan)
