"""The measurement interface every aligner talks to.

A Plant owns hidden source errors, applies mirror controls, and returns
camera measurements with Gaussian read noise.  One measure() call samples
both cameras simultaneously (one frame pair) and increments the reading
counter by exactly one; that counter is the sampling budget the benchmark
compares.  Aperture 2 data are withheld whenever the true (noise-free)
beam offset at Aperture 1 exceeds the aperture radius, which is how the
beam-blocking issue reaches the aligners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import ConfigError, FieldOfViewError
from .geometry import MirrorControls, MisalignmentErrors, SystemGeometry
from .linear_model import SensitivityMatrix, sensitivity_matrix

_MISALIGN_ATTEMPTS = 10_000
_LIMIT_HEADROOM = 0.8  # compensating controls must fit within 80% of limits


@dataclass(frozen=True)
class Measurement:
    """Beam offsets in mm: a1 is always present, a2 is None when the beam
    is blocked at Aperture 1."""

    a1: tuple[float, float]
    a2: tuple[float, float] | None

    @property
    def complete(self) -> bool:
        return self.a2 is not None

    @property
    def radius_a1(self) -> float:
        return math.hypot(*self.a1)

    @property
    def radius_a2(self) -> float | None:
        return None if self.a2 is None else math.hypot(*self.a2)

    def as_vector(self) -> np.ndarray:
        """(dx1, dy1, dx2, dy2); raises if a2 is absent."""
        if self.a2 is None:
            raise ValueError("measurement incomplete: aperture 2 blocked")
        return np.array([self.a1[0], self.a1[1], self.a2[0], self.a2[1]])


@dataclass(frozen=True)
class MisalignmentScales:
    """Bounds of the uniform error draw at magnitude 1.

    A draw is admissible when it is (a) recoverable, (b) camera-friendly
    (the Aperture-1 offset it induces stays within max_a1_offset per axis,
    so random sampling keeps its field-of-view guarantee and a stable
    blocked fraction), and (c) deliberate: the Aperture-2 offset that
    would remain after Mirror 1 alone centered Aperture 1 is at least
    min_residual_a2, so both mirrors genuinely need adjustment and no
    single-mirror shortcut exists.  All three bounds scale with the
    misalignment magnitude.
    """

    max_lateral: float = 6.0  # mm
    max_angular: float = 8.0e-3  # rad
    max_a1_offset: float = 2.5  # mm, per axis, at magnitude 1
    min_residual_a2: float = 8.0  # mm, radial, at magnitude 1


class PlantInterface(Protocol):
    """What an aligner needs from a plant.  The simulator below implements
    it; a hardware-backed plant could substitute without touching the
    aligners."""

    geometry: SystemGeometry
    noise_sigma: float

    def set_controls(self, controls: MirrorControls) -> None: ...

    def measure(self) -> "Measurement": ...

    def readings_used(self) -> int: ...


class Plant:
    """Stateful simulator of the motorized beamline (single-owner).

    The measurement physics is the small-angle linear model plus
    independent zero-mean Gaussian noise per component.  Blocking is
    decided on the noise-free offset, so it is deterministic for fixed
    controls and errors.
    """

    def __init__(
        self,
        geometry: SystemGeometry,
        noise_sigma: float = 0.0,
        rng_seed: int = 0,
        misalignment_scales: MisalignmentScales = MisalignmentScales(),
    ):
        if noise_sigma < 0.0:
            raise ConfigError("noise_sigma must be >= 0")
        self.geometry = geometry
        self.noise_sigma = noise_sigma
        self.rng_seed = rng_seed
        self.scales = misalignment_scales
        self._matrix: SensitivityMatrix = sensitivity_matrix(geometry)
        self._noise_rng = np.random.default_rng(rng_seed)
        self._controls = MirrorControls()
        self._errors = MisalignmentErrors()
        self._reading_count = 0

    # -- control / readout ------------------------------------------------

    @property
    def controls(self) -> MirrorControls:
        return self._controls

    def set_controls(self, controls: MirrorControls) -> None:
        """Replace the mirror control state; does not consume a reading."""
        controls.check_limits(self.geometry.control_limit)
        self._controls = controls

    def true_offsets(self) -> np.ndarray:
        """Noise-free (dx1, dy1, dx2, dy2) in mm for the current state."""
        c = np.array(self._controls.as_tuple())
        return self._matrix.gain @ c + self._matrix.offset(self._errors)

    def measure(self) -> Measurement:
        """Take one frame pair; counts exactly one reading.

        Raises FieldOfViewError when the true Aperture-1 offset lies
        outside the camera field (a sampling-policy bug, not a physical
        outcome, hence an exception rather than a measurement).
        """
        true = self.true_offsets()
        r1 = math.hypot(true[0], true[1])
        # the camera sensor is a square patch; the field bound is per axis
        if max(abs(true[0]), abs(true[1])) > self.geometry.camera_half_field:
            raise FieldOfViewError(
                f"true A1 offset ({true[0]:.3f}, {true[1]:.3f}) mm beyond "
                f"camera half-field {self.geometry.camera_half_field:.3f} mm"
            )
        self._reading_count += 1
        # four draws per frame pair even when blocked, so the noise stream
        # stays aligned with the call sequence
        noise = self._noise_rng.normal(0.0, self.noise_sigma, size=4) \
            if self.noise_sigma > 0.0 else np.zeros(4)
        values = true + noise
        blocked = r1 > self.geometry.aperture_radius_1
        return Measurement(
            a1=(values[0], values[1]),
            a2=None if blocked else (values[2], values[3]),
        )

    def readings_used(self) -> int:
        """Total measure() calls so far."""
        return self._reading_count

    # -- misalignment ------------------------------------------------------

    def misalign(self, seed: int, magnitude: float) -> None:
        """Draw hidden source errors uniformly, scaled by magnitude in
        [0, 1], rejection-sampling until the draw is admissible per the
        MisalignmentScales bounds (recoverable within 80% of the actuator
        limits, camera-friendly at Aperture 1, deliberate at Aperture 2).
        """
        if not 0.0 <= magnitude <= 1.0:
            raise ConfigError("misalignment magnitude must be in [0, 1]")
        rng = np.random.default_rng(seed)
        lat = self.scales.max_lateral * magnitude
        ang = self.scales.max_angular * magnitude
        a1_cap = self.scales.max_a1_offset * magnitude
        residual_floor = self.scales.min_residual_a2 * magnitude
        bound = _LIMIT_HEADROOM * self.geometry.control_limit
        # Aperture-2 offset left over once Mirror 1 alone has zeroed
        # Aperture 1 scales with the A2/A1 lever-arm ratio of mirror 1
        ratio = self._matrix.gain[2, 0] / self._matrix.gain[0, 0]
        for _ in range(_MISALIGN_ATTEMPTS):
            draw = rng.uniform(-1.0, 1.0, size=4)
            errors = MisalignmentErrors(
                laser_dx=lat * draw[0],
                laser_dy=lat * draw[1],
                laser_dtheta=ang * draw[2],
                laser_dphi=ang * draw[3],
            )
            offset = self._matrix.offset(errors)
            compensating = self._matrix.solve_controls(-offset)
            recoverable = np.all(np.abs(compensating) <= bound)
            camera_ok = max(abs(offset[0]), abs(offset[1])) <= a1_cap
            residual = math.hypot(
                offset[2] - ratio * offset[0], offset[3] - ratio * offset[1]
            )
            if recoverable and camera_ok and residual >= residual_floor:
                self._errors = errors
                return
        raise ConfigError(
            "no admissible misalignment found in "
            f"{_MISALIGN_ATTEMPTS} draws; error scales incompatible with "
            "the geometry or actuator limits"
        )

    def compensating_controls(self) -> MirrorControls:
        """Controls that would exactly null the hidden errors (test/oracle
        use; an aligner must not call this)."""
        c = self._matrix.solve_controls(-self._matrix.offset(self._errors))
        return MirrorControls.from_sequence(c)
