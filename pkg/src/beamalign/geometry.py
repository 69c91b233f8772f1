"""Value types describing the beamline: segment lengths, mirror controls,
source misalignment errors and traced beam intersections.

Layout (all distances along the nominal beam path):

    laser --dd0--> mirror 1 --dd1--> mirror 2 --dd2--> aperture 1 --dd3--> aperture 2

Both mirrors are nominal 45-degree folds in the horizontal plane, so the
nominal path runs laser -> +x -> (fold) -> +y -> (fold) -> +x through both
apertures.  Segment lengths are in meters; transverse quantities (aperture
radii, camera field, beam offsets) are in millimeters; angles are radians.
Degrees appear only at CLI/config boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, LimitViolationError

MAX_CONTROL_LIMIT_RAD = math.radians(15.0)  # small-angle validity bound

CONTROL_AXES = ("cm1_yaw", "cm1_pitch", "cm2_yaw", "cm2_pitch")


@dataclass(frozen=True)
class SystemGeometry:
    """Segment lengths, aperture sizes and actuator bounds of the beamline.

    dd0..dd3 are the laser->m1, m1->m2, m2->A1 and A1->A2 path lengths in
    meters.  dd2 may be zero (apertures directly behind mirror 2); all other
    lengths must be positive.  control_limit is the symmetric per-axis
    actuator bound in radians.
    """

    dd0: float
    dd1: float
    dd2: float
    dd3: float
    aperture_radius_1: float  # mm
    aperture_radius_2: float  # mm
    camera_half_field: float  # mm
    control_limit: float  # rad

    def __post_init__(self):
        for name in ("dd0", "dd1", "dd3"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.dd2 < 0.0:
            raise ConfigError(f"dd2 must be >= 0, got {self.dd2}")
        for name in ("aperture_radius_1", "aperture_radius_2", "camera_half_field"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0.0 < self.control_limit <= MAX_CONTROL_LIMIT_RAD:
            raise ConfigError(
                "control_limit must be in (0, 15 deg], got "
                f"{math.degrees(self.control_limit):.3f} deg"
            )
        if self.camera_half_field <= self.aperture_radius_1:
            raise ConfigError("camera_half_field must exceed aperture_radius_1")
        if self.camera_half_field <= self.aperture_radius_2:
            raise ConfigError("camera_half_field must exceed aperture_radius_2")

    @property
    def path_to_a1(self) -> float:
        """Laser-to-Aperture-1 path length in meters."""
        return self.dd0 + self.dd1 + self.dd2

    @property
    def path_to_a2(self) -> float:
        """Laser-to-Aperture-2 path length in meters."""
        return self.dd0 + self.dd1 + self.dd2 + self.dd3


@dataclass(frozen=True)
class MirrorControls:
    """The four mirror adjustment angles in radians, as deviations from the
    nominal 45-degree fold.  Yaw steers in the horizontal plane, pitch in
    the vertical."""

    cm1_yaw: float = 0.0
    cm1_pitch: float = 0.0
    cm2_yaw: float = 0.0
    cm2_pitch: float = 0.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.cm1_yaw, self.cm1_pitch, self.cm2_yaw, self.cm2_pitch)

    @classmethod
    def from_sequence(cls, values) -> "MirrorControls":
        a, b, c, d = (float(v) for v in values)
        return cls(a, b, c, d)

    def check_limits(self, limit: float) -> None:
        """Raise LimitViolationError naming the first axis beyond ±limit."""
        for axis, value in zip(CONTROL_AXES, self.as_tuple()):
            if abs(value) > limit:
                raise LimitViolationError(axis, value, limit)


@dataclass(frozen=True)
class MisalignmentErrors:
    """Hidden per-instance source errors the aligners must compensate:
    lateral laser offsets (mm) and pointing offsets (radians).

    laser_dx / laser_dtheta act in the horizontal plane, laser_dy /
    laser_dphi in the vertical.
    """

    laser_dx: float = 0.0  # mm
    laser_dy: float = 0.0  # mm
    laser_dtheta: float = 0.0  # rad
    laser_dphi: float = 0.0  # rad

    def __post_init__(self):
        for name in ("laser_dtheta", "laser_dphi"):
            if abs(getattr(self, name)) > MAX_CONTROL_LIMIT_RAD:
                raise ConfigError(f"{name} outside the small-angle bound")


@dataclass(frozen=True)
class BeamIntersections:
    """Exact beam offsets from the two aperture centers, in millimeters.

    blocked_at_a1 is true exactly when the radial offset at Aperture 1
    exceeds the aperture radius; at_a2 is still the geometric intersection
    (the measurement layer, not the tracer, withholds it).
    """

    at_a1: tuple[float, float]
    at_a2: tuple[float, float]
    blocked_at_a1: bool

    @property
    def radius_a1(self) -> float:
        return math.hypot(*self.at_a1)

    @property
    def radius_a2(self) -> float:
        return math.hypot(*self.at_a2)
