"""Exception types shared across the package."""


class BeamAlignError(Exception):
    """Base class for all package errors."""


class ConfigError(BeamAlignError):
    """Invalid configuration value or file."""


class LimitViolationError(BeamAlignError):
    """A mirror control was commanded beyond the actuator limit."""

    def __init__(self, axis: str, value: float, limit: float):
        self.axis = axis
        self.value = value
        self.limit = limit
        super().__init__(
            f"control {axis}={value:.6g} rad exceeds actuator limit "
            f"±{limit:.6g} rad"
        )


class BeamMissesComponentError(BeamAlignError):
    """The traced ray is parallel to a surface plane or leaves the modeled
    half-space before reaching it."""


class FieldOfViewError(BeamAlignError):
    """The true beam offset at Aperture 1 lies outside the camera field."""


class GainEstimationError(BeamAlignError):
    """A probe step produced no usable measurement change."""


class DegenerateGeometryError(BeamAlignError):
    """A fit surface is numerically singular for the given geometry."""


class UnderdeterminedSystemError(BeamAlignError):
    """Fewer regression rows than parameters."""


class UndefinedRSquaredError(BeamAlignError):
    """R-squared requested for a zero-variance target axis."""


class BlockedSampleError(BeamAlignError):
    """A sample that was guaranteed to pass Aperture 1 came back blocked."""
