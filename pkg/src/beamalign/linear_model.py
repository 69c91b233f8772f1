"""Small-angle linear forward model of the beamline.

Each mirror's yaw deflects the reflected beam horizontally by twice the
control angle (optical lever); the gimbal pitch deflects it vertically by
exactly the control angle (rotation about the incident beam axis).  The
offsets measured downstream are those deflections times the remaining
path length, so the sensitivity matrix is built from lever arms:

    mirror 1 -> A1 : dd1 + dd2          mirror 2 -> A1 : dd2
    mirror 1 -> A2 : dd1 + dd2 + dd3    mirror 2 -> A2 : dd2 + dd3

Signs follow the exact tracer (the Z-fold flips the horizontal sense of
mirror 1 relative to mirror 2); every entry is validated against central
finite differences of trace_exact in the test suite.  Source errors enter
additively with the full laser-to-aperture path as their lever arm.

Measurement vector ordering throughout: (dx1, dy1, dx2, dy2) in mm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import MirrorControls, MisalignmentErrors, SystemGeometry

_MM = 1e3  # meters -> millimeters


@dataclass(frozen=True)
class SensitivityMatrix:
    """Linear response of the four measured offsets (mm).

    gain maps the four control angles (rad) to offsets; error_gain maps
    the source error vector (laser_dx mm, laser_dy mm, laser_dtheta rad,
    laser_dphi rad) to offsets.
    """

    gain: np.ndarray = field(repr=False)  # 4x4, mm per rad
    error_gain: np.ndarray = field(repr=False)  # 4x4

    def offset(self, errors: MisalignmentErrors) -> np.ndarray:
        """Offsets (mm) induced by source errors at zero controls."""
        e = np.array(
            [errors.laser_dx, errors.laser_dy, errors.laser_dtheta, errors.laser_dphi]
        )
        return self.error_gain @ e

    def solve_controls(self, target_offset: np.ndarray) -> np.ndarray:
        """Controls producing the given offsets at zero source error."""
        return np.linalg.solve(self.gain, np.asarray(target_offset, dtype=float))


def sensitivity_matrix(geometry: SystemGeometry) -> SensitivityMatrix:
    """Build the lever-arm sensitivity matrix for a geometry."""
    l1 = geometry.dd1 + geometry.dd2  # mirror 1 -> A1
    l2 = geometry.dd2  # mirror 2 -> A1
    m1 = geometry.dd1 + geometry.dd2 + geometry.dd3  # mirror 1 -> A2
    m2 = geometry.dd2 + geometry.dd3  # mirror 2 -> A2
    gain = _MM * np.array(
        [
            [-2.0 * l1, 0.0, 2.0 * l2, 0.0],
            [0.0, 1.0 * l1, 0.0, -1.0 * l2],
            [-2.0 * m1, 0.0, 2.0 * m2, 0.0],
            [0.0, 1.0 * m1, 0.0, -1.0 * m2],
        ]
    )
    p1 = geometry.path_to_a1
    p2 = geometry.path_to_a2
    error_gain = np.array(
        [
            [1.0, 0.0, _MM * p1, 0.0],
            [0.0, 1.0, 0.0, _MM * p1],
            [1.0, 0.0, _MM * p2, 0.0],
            [0.0, 1.0, 0.0, _MM * p2],
        ]
    )
    return SensitivityMatrix(gain=gain, error_gain=error_gain)


def forward_linear(
    controls: MirrorControls,
    geometry: SystemGeometry,
    errors: MisalignmentErrors = MisalignmentErrors(),
    matrix: SensitivityMatrix | None = None,
) -> np.ndarray:
    """Predicted offsets (dx1, dy1, dx2, dy2) in mm; exactly linear in the
    controls.  Pass a prebuilt matrix to avoid rebuilding it in loops."""
    controls.check_limits(geometry.control_limit)
    sm = matrix if matrix is not None else sensitivity_matrix(geometry)
    c = np.array(controls.as_tuple())
    return sm.gain @ c + sm.offset(errors)
