"""Rigid-body math for head tracking: quaternions, poses, look directions,
and short-horizon pose prediction.

Conventions used throughout the package:

* quaternions are Hamilton, scalar-first ``(w, x, y, z)``, right handed;
* an orientation quaternion maps local-frame vectors into the world frame;
* the local frame has boresight along +x and up along +z at identity;
* directions are (azimuth, elevation) in degrees, azimuth measured from +x
  toward +y, elevation positive toward +z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

UNIT_NORM_TOL = 1e-9
# below this quaternion angle slerp degenerates to nlerp
_SLERP_MIN_ANGLE = 1e-7


@dataclass(frozen=True)
class Quaternion:
    w: float
    x: float
    y: float
    z: float

    @staticmethod
    def identity() -> "Quaternion":
        return Quaternion(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis: Sequence[float], angle_rad: float) -> "Quaternion":
        ax, ay, az = float(axis[0]), float(axis[1]), float(axis[2])
        n = math.sqrt(ax * ax + ay * ay + az * az)
        if n == 0.0:
            raise ValueError("rotation axis must be nonzero")
        half = 0.5 * angle_rad
        s = math.sin(half) / n
        return Quaternion(math.cos(half), ax * s, ay * s, az * s)

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> "Quaternion":
        n = self.norm()
        if n < 1e-12:
            raise ValueError("cannot normalize a zero quaternion")
        return Quaternion(self.w / n, self.x / n, self.y / n, self.z / n)

    def canonicalized(self) -> "Quaternion":
        """Fix the double-cover sign so that w >= 0."""
        if self.w < 0.0:
            return Quaternion(-self.w, -self.x, -self.y, -self.z)
        return self

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def dot(self, other: "Quaternion") -> float:
        return self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Quaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def rotate(self, v: Sequence[float]) -> np.ndarray:
        """Rotate a 3-vector from the local frame into the world frame."""
        vx, vy, vz = float(v[0]), float(v[1]), float(v[2])
        w, x, y, z = self.w, self.x, self.y, self.z
        # t = 2 q_v x v; v' = v + w t + q_v x t
        tx = 2.0 * (y * vz - z * vy)
        ty = 2.0 * (z * vx - x * vz)
        tz = 2.0 * (x * vy - y * vx)
        return np.array(
            [
                vx + w * tx + (y * tz - z * ty),
                vy + w * ty + (z * tx - x * tz),
                vz + w * tz + (x * ty - y * tx),
            ]
        )

    def rotate_inverse(self, v: Sequence[float]) -> np.ndarray:
        """Rotate a world-frame 3-vector into the local frame."""
        return self.conjugate().rotate(v)

    def rotation_angle_to(self, other: "Quaternion") -> float:
        """Angle in radians of the relative rotation between two orientations."""
        d = min(1.0, abs(self.dot(other)))
        return 2.0 * math.acos(d)

    def to_axis_angle(self) -> tuple[np.ndarray, float]:
        """Canonical axis-angle with angle in [0, pi]."""
        q = self.canonicalized()
        s = math.sqrt(q.x * q.x + q.y * q.y + q.z * q.z)
        if s < 1e-12:
            return np.array([1.0, 0.0, 0.0]), 0.0
        angle = 2.0 * math.atan2(s, q.w)
        return np.array([q.x / s, q.y / s, q.z / s]), angle

    def is_unit(self, tol: float = UNIT_NORM_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol


def slerp(q0: Quaternion, q1: Quaternion, s: float) -> Quaternion:
    """Spherical interpolation from q0 (s=0) to q1 (s=1), shortest path.

    Falls back to normalized linear interpolation when the quaternions are
    nearly parallel, where the sine denominator loses precision.
    """
    d = q0.dot(q1)
    w1, x1, y1, z1 = q1.w, q1.x, q1.y, q1.z
    if d < 0.0:
        d = -d
        w1, x1, y1, z1 = -w1, -x1, -y1, -z1
    d = min(1.0, d)
    angle = math.acos(d)
    if angle < _SLERP_MIN_ANGLE:
        w = q0.w + s * (w1 - q0.w)
        x = q0.x + s * (x1 - q0.x)
        y = q0.y + s * (y1 - q0.y)
        z = q0.z + s * (z1 - q0.z)
        n = math.sqrt(w * w + x * x + y * y + z * z)
        return Quaternion(w / n, x / n, y / n, z / n)
    sa = math.sin(angle)
    c0 = math.sin((1.0 - s) * angle) / sa
    c1 = math.sin(s * angle) / sa
    return Quaternion(
        c0 * q0.w + c1 * w1,
        c0 * q0.x + c1 * x1,
        c0 * q0.y + c1 * y1,
        c0 * q0.z + c1 * z1,
    )


@dataclass(frozen=True)
class Direction:
    """Look direction as (azimuth, elevation) in degrees.

    Azimuth lies in (-180, 180], elevation in [-90, 90]. At the poles the
    azimuth is fixed to 0 by convention.
    """

    azimuth_deg: float
    elevation_deg: float

    def to_unit_vector(self) -> np.ndarray:
        az = math.radians(self.azimuth_deg)
        el = math.radians(self.elevation_deg)
        ce = math.cos(el)
        return np.array([ce * math.cos(az), ce * math.sin(az), math.sin(el)])

    @staticmethod
    def from_unit_vector(u: Sequence[float]) -> "Direction":
        ux, uy, uz = float(u[0]), float(u[1]), float(u[2])
        n = math.sqrt(ux * ux + uy * uy + uz * uz)
        if n < 1e-12:
            raise ValueError("direction vector must be nonzero")
        uz = max(-1.0, min(1.0, uz / n))
        el = math.degrees(math.asin(uz))
        if 90.0 - abs(el) < 1e-9:
            return Direction(0.0, el)
        az = math.degrees(math.atan2(uy, ux))
        if az <= -180.0:
            az += 360.0
        return Direction(az, el)

    def angle_to(self, other: "Direction") -> float:
        """Great-circle angle to another direction, degrees."""
        d = float(np.dot(self.to_unit_vector(), other.to_unit_vector()))
        return math.degrees(math.acos(max(-1.0, min(1.0, d))))


@dataclass(frozen=True)
class Pose:
    """Timestamped position (meters, world frame) and orientation."""

    t: float
    position: np.ndarray
    orientation: Quaternion

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if self.position.shape != (3,):
            raise ValueError("position must be a 3-vector")


def ap_direction_in_hmd_frame(pose: Pose, ap_position: Sequence[float]) -> Direction:
    """Direction from the headset toward the access point, in the headset frame."""
    diff = np.asarray(ap_position, dtype=float) - pose.position
    n = float(np.linalg.norm(diff))
    if n < 1e-12:
        raise ValueError("headset and access point positions coincide")
    local = pose.orientation.rotate_inverse(diff / n)
    return Direction.from_unit_vector(local)


def predict_pose(
    history: Sequence[Pose],
    horizon: float,
    mode: str = "constant_velocity",
    trace=None,
) -> Pose:
    """Predict the pose a fixed horizon ahead of the last history sample.

    Modes:

    * ``constant_velocity``: angular velocity estimated from the last two
      samples as the axis-angle of q_prev^-1 * q_now over their time gap,
      applied forward; position extrapolated linearly.  A single-sample
      history yields a zero-velocity prediction.
    * ``device``: returns the device prediction recorded in the trace at the
      sample nearest the current time (requires device columns).
    * ``oracle``: returns the trace orientation at t + horizon (interpolated);
      position from the trace when present, else linear extrapolation.
    """
    if not history:
        raise ValueError("history must contain at least one pose")
    now = history[-1]
    t_out = now.t + horizon

    def _linear_position() -> np.ndarray:
        if len(history) < 2:
            return now.position
        prev = history[-2]
        dt = now.t - prev.t
        if dt <= 0.0:
            raise ValueError("history timestamps must be increasing")
        return now.position + (now.position - prev.position) * (horizon / dt)

    if mode == "constant_velocity":
        if len(history) < 2:
            return Pose(t_out, now.position, now.orientation)
        prev = history[-2]
        dt = now.t - prev.t
        if dt <= 0.0:
            raise ValueError("history timestamps must be increasing")
        rel = (prev.orientation.conjugate() * now.orientation).normalized()
        axis, angle = rel.to_axis_angle()
        step = Quaternion.from_axis_angle(axis, angle * (horizon / dt)) if angle > 0.0 else Quaternion.identity()
        return Pose(t_out, _linear_position(), (now.orientation * step).normalized())

    if mode == "device":
        if trace is None or not trace.has_device:
            raise ValueError("device prediction requires a trace with device columns")
        q = trace.device_prediction_nearest(now.t)
        return Pose(t_out, _linear_position(), q)

    if mode == "oracle":
        if trace is None:
            raise ValueError("oracle prediction requires a trace")
        q = trace.orientation_at(t_out)
        pos = trace.position_at(t_out) if trace.has_position else _linear_position()
        return Pose(t_out, pos, q)

    raise ValueError(f"unknown prediction mode {mode!r}")
