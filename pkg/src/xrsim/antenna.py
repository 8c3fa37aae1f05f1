"""Planar phased-array model: geometry, analog weight vectors, and far-field
gain evaluation.

The array sits in the local y-z plane with boresight along +x.  Element n at
position p_n steered by phase phi_n contributes a * exp(j(phi_n + k p_n.u))
to the field in unit direction u, with a single fixed amplitude a = 1/sqrt(N)
shared by all elements (phase-only beamforming).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import Direction

SPEED_OF_LIGHT = 299_792_458.0

# |field| below this is treated as a perfect null
_NULL_FIELD = 1e-15
NULL_GAIN_DB = -300.0


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform rectangular array, element spacing in wavelengths.

    ``element_exponent`` selects an optional cos^q single-element pattern
    applied around boresight; the default 0 keeps elements isotropic.
    """

    rows: int
    cols: int
    spacing_wavelengths: float = 0.5
    carrier_hz: float = 60e9
    element_exponent: float = 0.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("array must have at least one row and one column")
        if self.spacing_wavelengths <= 0.0 or self.carrier_hz <= 0.0:
            raise ValueError("spacing and carrier frequency must be positive")

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    def element_positions(self) -> np.ndarray:
        """(N, 3) element positions in meters, row-major (r * cols + c)."""
        d = self.spacing_wavelengths * self.wavelength
        r = np.arange(self.rows) - (self.rows - 1) / 2.0
        c = np.arange(self.cols) - (self.cols - 1) / 2.0
        zz, yy = np.meshgrid(r * d, c * d, indexing="ij")
        out = np.zeros((self.n_elements, 3))
        out[:, 1] = yy.ravel()
        out[:, 2] = zz.ravel()
        return out


@dataclass(frozen=True)
class Awv:
    """Analog weight vector: per-element phases plus the shared amplitude."""

    phases: np.ndarray
    amplitude: float = 0.0

    def __post_init__(self):
        phases = np.ascontiguousarray(self.phases, dtype=float)
        if phases.ndim != 1 or phases.size == 0:
            raise ValueError("phases must be a nonempty 1-D array")
        if not np.all(np.isfinite(phases)):
            raise ValueError("phases must be finite")
        phases.flags.writeable = False
        object.__setattr__(self, "phases", phases)
        if self.amplitude == 0.0:
            object.__setattr__(self, "amplitude", 1.0 / math.sqrt(phases.size))

    @property
    def n_elements(self) -> int:
        return self.phases.size


def steering_phases(geometry: ArrayGeometry, direction: Direction) -> Awv:
    """Phases that align all element contributions toward ``direction``."""
    u = direction.to_unit_vector()
    k = 2.0 * math.pi / geometry.wavelength
    return Awv(-k * (geometry.element_positions() @ u))


def _element_factor(geometry: ArrayGeometry, u: np.ndarray) -> float:
    if geometry.element_exponent <= 0.0:
        return 1.0
    return max(0.0, float(u[0])) ** geometry.element_exponent


def field_at(geometry: ArrayGeometry, awv: Awv, direction: Direction) -> complex:
    """Complex far-field amplitude of the weighted array in one direction."""
    if awv.n_elements != geometry.n_elements:
        raise ValueError("weight vector length does not match the array")
    u = direction.to_unit_vector()
    k = 2.0 * math.pi / geometry.wavelength
    phase = awv.phases + k * (geometry.element_positions() @ u)
    total = awv.amplitude * complex(np.sum(np.exp(1j * phase)))
    return total * _element_factor(geometry, u)


def gain_db(geometry: ArrayGeometry, awv: Awv, direction: Direction) -> float:
    """Array gain 20 log10 |field| in dB; perfect nulls floor at -300 dB."""
    mag = abs(field_at(geometry, awv, direction))
    if mag < _NULL_FIELD:
        return NULL_GAIN_DB
    return 20.0 * math.log10(mag)


def gain_map(geometry: ArrayGeometry, awv: Awv, directions: Sequence[Direction]) -> np.ndarray:
    """Vectorized gain over a list of directions."""
    if len(directions) == 0:
        return np.zeros(0)
    if awv.n_elements != geometry.n_elements:
        raise ValueError("weight vector length does not match the array")
    u = np.stack([d.to_unit_vector() for d in directions])
    k = 2.0 * math.pi / geometry.wavelength
    phase = awv.phases[None, :] + k * (u @ geometry.element_positions().T)
    mags = np.abs(awv.amplitude * np.exp(1j * phase).sum(axis=1))
    if geometry.element_exponent > 0.0:
        mags = mags * np.clip(u[:, 0], 0.0, None) ** geometry.element_exponent
    return 20.0 * np.log10(np.maximum(mags, _NULL_FIELD))


class AwvEvaluator:
    """Fast single-direction gain evaluation for a fixed (geometry, AWV) pair.

    Exploits the rectangular lattice: the element sum factors into a row
    combination of per-column sums, turning the O(N) phase sum into two
    length-rows/cols contractions.  Produces the same value as ``gain_db``
    up to floating-point summation order.
    """

    def __init__(self, geometry: ArrayGeometry, awv: Awv):
        if awv.n_elements != geometry.n_elements:
            raise ValueError("weight vector length does not match the array")
        self.geometry = geometry
        self.awv = awv
        d = geometry.spacing_wavelengths * geometry.wavelength
        k = 2.0 * math.pi / geometry.wavelength
        self._ky = k * d * (np.arange(geometry.cols) - (geometry.cols - 1) / 2.0)
        self._kz = k * d * (np.arange(geometry.rows) - (geometry.rows - 1) / 2.0)
        self._w = (awv.amplitude * np.exp(1j * awv.phases)).reshape(geometry.rows, geometry.cols)

    def field(self, direction: Direction) -> complex:
        u = direction.to_unit_vector()
        col_phasors = np.exp(1j * (self._ky * u[1]))
        row_phasors = np.exp(1j * (self._kz * u[2]))
        total = complex(row_phasors @ (self._w @ col_phasors))
        return total * _element_factor(self.geometry, u)

    def gain_db(self, direction: Direction) -> float:
        mag = abs(self.field(direction))
        if mag < _NULL_FIELD:
            return NULL_GAIN_DB
        return 20.0 * math.log10(mag)


def sample_directions(n: int, seed_or_rng, sphere_uniform: bool = True) -> list[Direction]:
    """Fixed random direction set; sphere-uniform by default.

    Sphere-uniform sampling draws azimuth uniformly and elevation as
    asin(uniform(-1, 1)) so that directions are equidistributed on the
    sphere rather than piling up at the poles.
    """
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else np.random.default_rng(seed_or_rng)
    az = rng.uniform(-180.0, 180.0, size=n)
    if sphere_uniform:
        el = np.degrees(np.arcsin(rng.uniform(-1.0, 1.0, size=n)))
    else:
        el = rng.uniform(-90.0, 90.0, size=n)
    return [Direction(float(a), float(e)) for a, e in zip(az, el)]
