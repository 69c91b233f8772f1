"""beamalign: a two-mirror, two-aperture laser beamline simulator with
three interchangeable automated alignment strategies and a benchmark
harness that counts every camera reading."""

__version__ = "0.1.0"

from .geometry import (
    BeamIntersections,
    MirrorControls,
    MisalignmentErrors,
    SystemGeometry,
)
from .linear_model import SensitivityMatrix, forward_linear, sensitivity_matrix
from .plant import Measurement, MisalignmentScales, Plant
from .raytrace import trace_exact

__all__ = [
    "BeamIntersections",
    "Measurement",
    "MirrorControls",
    "MisalignmentErrors",
    "MisalignmentScales",
    "Plant",
    "SensitivityMatrix",
    "SystemGeometry",
    "forward_linear",
    "sensitivity_matrix",
    "trace_exact",
    "__version__",
]
