"""Exact 3D ray tracer for the two-fold beamline.

This is the geometric ground truth the linearized model is validated
against: plane-mirror reflection with full trigonometry, no small-angle
simplification anywhere.

Coordinate frame: mirror 1 pivot at the origin, x downrange (laser -> m1
and m2 -> apertures), y toward mirror 2, z up.  The laser sits at
(-dd0, 0, 0) firing +x; mirror 1 folds the beam to +y, mirror 2 back to
+x; the aperture planes are x = dd2 and x = dd2 + dd3 with centers on the
nominal path (y = dd1, z = 0).

Mount model: yaw rotates a mirror about the vertical axis (the classic
optical lever, deflecting the reflected beam by twice the rotation);
pitch is a gimbal rotation about the mirror's nominal incident beam axis,
which rotates the reflected beam vertically by exactly the control angle
and introduces no horizontal deflection for an on-axis beam.  Pitch is
applied outermost: n = R_pitch(phi) @ R_yaw(theta) @ n_nominal.
"""

from __future__ import annotations

import math

from .errors import BeamMissesComponentError
from .geometry import (
    BeamIntersections,
    MirrorControls,
    MisalignmentErrors,
    SystemGeometry,
)

_PARALLEL_EPS = 1e-12

# nominal unit normals of the two folds (sign is irrelevant to reflection)
_SQ2 = math.sqrt(0.5)
_N1 = (-_SQ2, _SQ2, 0.0)  # folds +x to +y
_N2 = (_SQ2, -_SQ2, 0.0)  # folds +y to +x


def _rot_z(v, angle):
    c, s = math.cos(angle), math.sin(angle)
    return (c * v[0] - s * v[1], s * v[0] + c * v[1], v[2])


def _rot_x(v, angle):
    c, s = math.cos(angle), math.sin(angle)
    return (v[0], c * v[1] - s * v[2], s * v[1] + c * v[2])


def _rot_y(v, angle):
    c, s = math.cos(angle), math.sin(angle)
    return (c * v[0] + s * v[2], v[1], -s * v[0] + c * v[2])


def _reflect(d, n):
    k = 2.0 * (d[0] * n[0] + d[1] * n[1] + d[2] * n[2])
    return (d[0] - k * n[0], d[1] - k * n[1], d[2] - k * n[2])


def _advance_to_plane(p, d, plane_point, n, label):
    denom = d[0] * n[0] + d[1] * n[1] + d[2] * n[2]
    if abs(denom) < _PARALLEL_EPS:
        raise BeamMissesComponentError(f"beam parallel to {label} plane")
    t = (
        (plane_point[0] - p[0]) * n[0]
        + (plane_point[1] - p[1]) * n[1]
        + (plane_point[2] - p[2]) * n[2]
    ) / denom
    if t <= 0.0:
        raise BeamMissesComponentError(f"beam departs half-space before {label}")
    return (p[0] + t * d[0], p[1] + t * d[1], p[2] + t * d[2])


def mirror_normals(controls: MirrorControls) -> tuple[tuple, tuple]:
    """Unit normals of both mirrors under the given control rotations."""
    n1 = _rot_x(_rot_z(_N1, controls.cm1_yaw), controls.cm1_pitch)
    n2 = _rot_y(_rot_z(_N2, controls.cm2_yaw), controls.cm2_pitch)
    return n1, n2


def trace_exact(
    controls: MirrorControls,
    geometry: SystemGeometry,
    errors: MisalignmentErrors = MisalignmentErrors(),
) -> BeamIntersections:
    """Trace the beam through both folds and intersect the aperture planes.

    Returns offsets from the aperture centers in millimeters.  Raises
    BeamMissesComponentError when a reflected ray runs parallel to a
    surface or leaves the modeled half-space (impossible within the
    small-angle actuator limits, a guard against bad configurations).
    """
    controls.check_limits(geometry.control_limit)

    # source: lateral offsets in mm, pointing offsets in radians
    p = (-geometry.dd0, errors.laser_dx * 1e-3, errors.laser_dy * 1e-3)
    cth, sth = math.cos(errors.laser_dtheta), math.sin(errors.laser_dtheta)
    cph, sph = math.cos(errors.laser_dphi), math.sin(errors.laser_dphi)
    d = (cph * cth, cph * sth, sph)

    n1, n2 = mirror_normals(controls)

    p = _advance_to_plane(p, d, (0.0, 0.0, 0.0), n1, "mirror 1")
    d = _reflect(d, n1)
    p = _advance_to_plane(p, d, (0.0, geometry.dd1, 0.0), n2, "mirror 2")
    d = _reflect(d, n2)

    offsets = []
    a_plane_normal = (1.0, 0.0, 0.0)
    for x_plane in (geometry.dd2, geometry.dd2 + geometry.dd3):
        hit = _advance_to_plane(
            p, d, (x_plane, geometry.dd1, 0.0), a_plane_normal, "aperture"
        )
        offsets.append(((hit[1] - geometry.dd1) * 1e3, hit[2] * 1e3))

    at_a1, at_a2 = offsets
    blocked = math.hypot(*at_a1) > geometry.aperture_radius_1
    return BeamIntersections(at_a1=at_a1, at_a2=at_a2, blocked_at_a1=blocked)
