"""Shared domain types and unit conventions.

Everything internal is SI: lengths in meters, angles in radians. Unit
conversion happens only at the CLI boundary. The geometry is one
transverse dimension under the paraxial approximation: a source of full
width R at distance z from a pair of detectors separated by dx = x1 - x2.

All types are frozen dataclasses (arrays are made read-only), so
instances are safe to share across concurrent workers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class StageMode(enum.Enum):
    """How the tilt angle of an incoherent channel pair behaves."""

    FIXED_ANGLE = "fixed"
    UNIFORM_SCAN = "scan"


def angle_from_degrees(value: float) -> float:
    """Convert degrees to radians, rejecting non-finite input."""
    value = float(value)
    if not math.isfinite(value):
        raise ValueError("angle must be finite")
    return value * math.pi / 180.0


def angle_to_degrees(value: float) -> float:
    """Convert radians to degrees, rejecting non-finite input."""
    value = float(value)
    if not math.isfinite(value):
        raise ValueError("angle must be finite")
    return value * 180.0 / math.pi


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=np.float64).copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class OpticalConfig:
    """Geometry and wavelength of the one-dimensional thermal-light setup.

    Parameters
    ----------
    wavelength:
        Vacuum wavelength in meters.
    source_width:
        Full transverse width R of the uniform source aperture (meters).
        With this convention the far-field first-order coherence of the
        source is sinc(k R dx / (2 z)) with sinc(u) = sin(u)/u.
    distance:
        Source-to-detector distance z in meters (both detectors sit in
        the same plane).
    dx_grid:
        Strictly increasing detector separations dx = x1 - x2 (meters).
    """

    wavelength: float
    source_width: float
    distance: float
    dx_grid: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "dx_grid", _readonly(self.dx_grid))
        validate_config(self)

    @property
    def wavenumber(self) -> float:
        """k = 2 pi / wavelength (1/m); always derived, never stored."""
        return 2.0 * math.pi / self.wavelength

    @property
    def envelope_scale(self) -> float:
        """Transverse speckle correlation length wavelength*z/R (meters)."""
        return self.wavelength * self.distance / self.source_width


def validate_config(cfg: OpticalConfig) -> OpticalConfig:
    """Check every OpticalConfig invariant; return the config unchanged.

    Raises ValueError naming the first violated invariant.
    """
    for name, value in (
        ("wavelength", cfg.wavelength),
        ("source_width", cfg.source_width),
        ("distance", cfg.distance),
    ):
        if not (math.isfinite(value) and value > 0):
            raise ValueError(f"{name} must be positive")
    dx = np.asarray(cfg.dx_grid, dtype=np.float64)
    if dx.ndim != 1 or dx.size == 0:
        raise ValueError("dx_grid must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(dx)):
        raise ValueError("dx_grid values must be finite")
    if dx.size > 1 and not np.all(np.diff(dx) > 0):
        raise ValueError("dx_grid not increasing")
    return cfg


@dataclass(frozen=True)
class ChannelStage:
    """One pair of mutually first-order-incoherent optical channels.

    The pair splits the beam in two copies, one carrying a per-shot
    random phase (which kills first-order interference) and a relative
    tilt: either a fixed crossing angle ``theta`` or an angle drawn
    uniformly from [-theta0/2, +theta0/2] each shot.
    """

    mode: StageMode
    theta: float | None = None
    theta0: float | None = None

    def __post_init__(self) -> None:
        if self.mode is StageMode.FIXED_ANGLE:
            if self.theta is None or not math.isfinite(self.theta):
                raise ValueError("theta must be finite")
            if self.theta0 is not None:
                raise ValueError("fixed-angle stage takes no theta0")
        elif self.mode is StageMode.UNIFORM_SCAN:
            if self.theta0 is None or not math.isfinite(self.theta0) or self.theta0 <= 0:
                raise ValueError("theta0 must be positive")
            if self.theta is not None:
                raise ValueError("scanning stage takes no theta")
        else:  # pragma: no cover
            raise ValueError(f"unknown stage mode {self.mode!r}")

    @classmethod
    def fixed(cls, theta: float) -> "ChannelStage":
        """Stage with a fixed crossing angle (radians); theta=0 is allowed
        and degenerates to two identical channels."""
        return cls(StageMode.FIXED_ANGLE, theta=float(theta))

    @classmethod
    def scan(cls, theta0: float) -> "ChannelStage":
        """Stage whose crossing angle scans uniformly over a full range
        theta0 > 0 (radians)."""
        return cls(StageMode.UNIFORM_SCAN, theta0=float(theta0))


@dataclass(frozen=True)
class CascadeConfig:
    """Ordered sequence of channel-pair stages; n = 0 is the plain HBT
    interferometer."""

    stages: tuple[ChannelStage, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "stages", tuple(self.stages))
        for st in self.stages:
            if not isinstance(st, ChannelStage):
                raise ValueError("stages must be ChannelStage instances")

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    @classmethod
    def hbt(cls) -> "CascadeConfig":
        return cls(())


@dataclass(frozen=True)
class G2Curve:
    """A normalized second-order coherence curve over a dx grid.

    ``se`` holds per-point standard errors (all zero for analytic
    curves); ``meta`` is a provenance record (model name, parameters,
    realization count, seed, ...).
    """

    dx: np.ndarray
    g2: np.ndarray
    se: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "dx", _readonly(self.dx))
        object.__setattr__(self, "g2", _readonly(self.g2))
        object.__setattr__(self, "se", _readonly(self.se))
        if not (self.dx.shape == self.g2.shape == self.se.shape) or self.dx.ndim != 1:
            raise ValueError("dx, g2, se must be 1-d arrays of equal length")
        if np.any(self.se < 0):
            raise ValueError("se must be non-negative")

    @property
    def n_points(self) -> int:
        return int(self.dx.size)
