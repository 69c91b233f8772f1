"""Random sampling of the control space, dataset persistence and splitting.

This is the data layer for both regression-based aligners: draw control
settings uniformly inside a sampling box, record the (possibly blocked)
measurements, keep the complete ones, and split train/test.  The sampling
box is the actuator box shrunk so the Aperture-1 offset always stays
inside the camera field (readable), with a reserve for the largest
possible misalignment offset.
"""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .geometry import MirrorControls, SystemGeometry
from .linear_model import sensitivity_matrix
from .plant import Measurement, MisalignmentScales, Plant

CSV_HEADER = (
    "cm1_yaw_rad,cm1_pitch_rad,cm2_yaw_rad,cm2_pitch_rad,"
    "dx1_mm,dy1_mm,dx2_mm,dy2_mm,complete"
)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class SampleRecord:
    controls: MirrorControls
    measurement: Measurement

    @property
    def complete(self) -> bool:
        return self.measurement.complete


@dataclass
class Dataset:
    """Ordered sample records plus collection provenance."""

    records: list[SampleRecord] = field(default_factory=list)
    seed: int | None = None
    geometry_id: str | None = None

    def __len__(self) -> int:
        return len(self.records)

    def controls_array(self) -> np.ndarray:
        return np.array([r.controls.as_tuple() for r in self.records])

    def measurements_array(self) -> np.ndarray:
        """n x 4 matrix of complete measurements; raises on blocked rows."""
        return np.array([r.measurement.as_vector() for r in self.records])


def geometry_id(geometry: SystemGeometry) -> str:
    """Short stable content hash of a geometry, for dataset provenance."""
    text = ",".join(
        _fmt(v)
        for v in (
            geometry.dd0,
            geometry.dd1,
            geometry.dd2,
            geometry.dd3,
            geometry.aperture_radius_1,
            geometry.aperture_radius_2,
            geometry.camera_half_field,
            geometry.control_limit,
        )
    )
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def misalignment_reserve(geometry: SystemGeometry, scales: MisalignmentScales) -> float:
    """Largest Aperture-1 offset (mm, per axis) any admissible misalignment
    can add on top of the control-induced offset.  The plant rejects
    misalignment draws beyond max_a1_offset, so that cap is the reserve."""
    return scales.max_a1_offset


def sampling_box(
    geometry: SystemGeometry,
    scales: MisalignmentScales = MisalignmentScales(),
) -> np.ndarray:
    """Per-axis half-widths (rad) of the random-sampling box.

    Uniform sampling inside this box keeps the true A1 offset within the
    camera half-field for every admissible misalignment, so Aperture 1 is
    always readable.  Axes are capped at the actuator limit.
    """
    budget = geometry.camera_half_field - misalignment_reserve(geometry, scales)
    if budget <= 0.0:
        raise ConfigError(
            "camera half-field too small for the misalignment scales; "
            "no sampling box exists"
        )
    budget_m = budget * 1e-3
    l_sum = (geometry.dd1 + geometry.dd2) + geometry.dd2  # both yaw lever arms
    half_yaw = budget_m / (2.0 * l_sum)  # yaw deflection factor 2
    half_pitch = budget_m / l_sum  # pitch deflection factor 1
    box = np.array([half_yaw, half_pitch, half_yaw, half_pitch])
    return np.minimum(box, geometry.control_limit)


def collect_random(plant: Plant, n: int, rng_seed: int) -> Dataset:
    """Apply n uniform random control settings and measure once each.

    Consumes exactly n readings; blocked samples are kept (marked
    incomplete) in collection order.
    """
    if n < 1:
        raise ConfigError("sample count must be >= 1")
    box = sampling_box(plant.geometry, plant.scales)
    rng = np.random.default_rng(rng_seed)
    draws = rng.uniform(-box, box, size=(n, 4))
    records = []
    for row in draws:
        controls = MirrorControls.from_sequence(row)
        plant.set_controls(controls)
        records.append(SampleRecord(controls=controls, measurement=plant.measure()))
    return Dataset(
        records=records, seed=rng_seed, geometry_id=geometry_id(plant.geometry)
    )


def filter_complete(dataset: Dataset) -> Dataset:
    """Keep only records with both apertures measured, preserving order."""
    return replace(
        dataset, records=[r for r in dataset.records if r.complete]
    )


def split_train_test(
    dataset: Dataset, train_fraction: float, rng_seed: int
) -> tuple[Dataset, Dataset]:
    """Shuffle by seed, then split: the first floor(n * fraction) shuffled
    records train, the rest test."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError("train_fraction must be in (0, 1)")
    rng = np.random.default_rng(rng_seed)
    order = rng.permutation(len(dataset.records))
    shuffled = [dataset.records[i] for i in order]
    n_train = int(math.floor(len(shuffled) * train_fraction))
    train = replace(dataset, records=shuffled[:n_train])
    test = replace(dataset, records=shuffled[n_train:])
    return train, test


def calibrate_aperture(
    geometry: SystemGeometry,
    target_block_fraction: float,
    mc_samples: int = 20_000,
    rng_seed: int = 0,
    scales: MisalignmentScales = MisalignmentScales(),
) -> float:
    """Monte-Carlo bisection of the Aperture-1 radius (mm) so that uniform
    box sampling on an otherwise aligned plant blocks the target fraction.

    Deterministic for a fixed seed.  The radius is bisected on a single
    frozen control sample until the blocked fraction is within one
    percentage point of the target.
    """
    if not 0.0 <= target_block_fraction < 1.0:
        raise ConfigError("target_block_fraction must be in [0, 1)")
    box = sampling_box(geometry, scales)
    rng = np.random.default_rng(rng_seed)
    draws = rng.uniform(-box, box, size=(mc_samples, 4))
    gain = sensitivity_matrix(geometry).gain
    offsets = draws @ gain.T
    radii = np.hypot(offsets[:, 0], offsets[:, 1])
    r_max = float(radii.max())
    if target_block_fraction == 0.0:
        return r_max * 1.001
    lo, hi = 0.0, r_max
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        blocked = float(np.mean(radii > mid))
        if blocked > target_block_fraction:
            lo = mid
        else:
            hi = mid
    radius = 0.5 * (lo + hi)
    blocked = float(np.mean(radii > radius))
    if radius <= 0.0 or abs(blocked - target_block_fraction) > 0.01:
        raise ConfigError(
            f"calibration failed: radius {radius:.4f} mm blocks "
            f"{blocked:.4f} (target {target_block_fraction:.4f})"
        )
    return radius


# -- CSV persistence -----------------------------------------------------

def write_csv(dataset: Dataset, path) -> None:
    """Write records with a fixed header, 17-significant-digit floats,
    empty dx2/dy2 fields for blocked rows, and LF line endings."""
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_csv(dataset))


def dumps_csv(dataset: Dataset) -> str:
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for rec in dataset.records:
        c = rec.controls.as_tuple()
        m = rec.measurement
        row = [_fmt(v) for v in c] + [_fmt(m.a1[0]), _fmt(m.a1[1])]
        if m.a2 is None:
            row += ["", "", "0"]
        else:
            row += [_fmt(m.a2[0]), _fmt(m.a2[1]), "1"]
        out.write(",".join(row) + "\n")
    return out.getvalue()


def read_csv(path) -> Dataset:
    try:
        with open(path, "r", newline="") as fh:
            return loads_csv(fh.read())
    except FileNotFoundError as exc:
        raise ConfigError(f"dataset file not found: {path}") from exc


def loads_csv(text: str) -> Dataset:
    lines = text.splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError("unrecognized dataset CSV header")
    records = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 9:
            raise ConfigError(f"line {i}: expected 9 fields, got {len(parts)}")
        controls = MirrorControls.from_sequence(float(p) for p in parts[:4])
        a1 = (float(parts[4]), float(parts[5]))
        complete = parts[8] == "1"
        if complete:
            a2 = (float(parts[6]), float(parts[7]))
        else:
            if parts[6] or parts[7]:
                raise ConfigError(f"line {i}: blocked row carries a2 values")
            a2 = None
        records.append(
            SampleRecord(controls=controls, measurement=Measurement(a1=a1, a2=a2))
        )
    return Dataset(records=records)
