"""Design-led aligner: two-step linear regression.

Random sampling would waste readings on beam-blocked samples, so the
procedure first learns how Aperture 1 responds to the mirrors, derives
the mirror-1/mirror-2 relationship that keeps the beam centered on
Aperture 1, and only then samples along that constraint, where every
measurement is guaranteed complete.  The reverse model fitted to those
samples is evaluated at the goal measurement (0,0,0,0), which reduces to
its intercept column, to read off the alignment solution.

Step 1: 30 random samples plus 4 single-axis registration samples; fit
the per-axis Aperture-1 forward model offset = a*m1 + b*m2 + c and solve
offset = 0 for the mirror-2 settings as a function of mirror 1.
Step 2: reuse the same mirror-1 settings, derive mirror 2 from the
constraint, measure (all complete), fit controls = f(measurements).
Budget: 34 + 34 + 1 confirming reading = 69.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, SampleRecord, sampling_box
from .errors import (
    BlockedSampleError,
    DegenerateGeometryError,
    UndefinedRSquaredError,
    UnderdeterminedSystemError,
)
from .geometry import MirrorControls
from .plant import Plant
from .reporting import AlignmentReport

# a mirror-2 forward coefficient within this many standard errors of zero
# (or this fraction of the mirror-1 coefficient, for noise-free fits) marks
# Aperture 1 as blind to mirror 2 (the dd2 = 0 limit)
_SINGULAR_SE_FACTOR = 4.0
_SINGULAR_RATIO = 1e-9


@dataclass
class LinearModel:
    """Affine least-squares fit: outcomes = coefficients @ (predictors, 1).

    coefficients has shape (n_outcomes, n_predictors + 1) with the
    intercept in the last column.  Fit diagnostics are recomputed from the
    training residuals.
    """

    coefficients: np.ndarray
    rank: int
    r_squared_per_outcome: np.ndarray
    residual_variance: np.ndarray

    @property
    def intercept(self) -> np.ndarray:
        return self.coefficients[:, -1]

    def predict(self, predictors: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(predictors, dtype=float))
        return x @ self.coefficients[:, :-1].T + self.intercept

    def to_json_dict(self) -> dict:
        return {
            "coefficients": self.coefficients.tolist(),
            "rank": self.rank,
            "r_squared_per_outcome": self.r_squared_per_outcome.tolist(),
            "residual_variance": self.residual_variance.tolist(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "LinearModel":
        return cls(
            coefficients=np.array(doc["coefficients"], dtype=float),
            rank=int(doc["rank"]),
            r_squared_per_outcome=np.array(doc["r_squared_per_outcome"]),
            residual_variance=np.array(doc["residual_variance"]),
        )


def least_squares(x: np.ndarray, y: np.ndarray) -> LinearModel:
    """Minimum-norm affine least squares via SVD (numpy lstsq).

    x: (rows, predictors), y: (rows, outcomes).  Exact on consistent
    systems; rank-deficient designs get the minimum-norm solution with
    the rank reported.  Raises when rows < predictors + 1.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    rows, n_pred = x.shape
    if rows < n_pred + 1:
        raise UnderdeterminedSystemError(
            f"{rows} rows cannot determine {n_pred + 1} parameters"
        )
    design = np.hstack([x, np.ones((rows, 1))])
    solution, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    pred = design @ solution
    resid = y - pred
    ss_res = (resid**2).sum(axis=0)
    ss_tot = ((y - y.mean(axis=0)) ** 2).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        r2 = np.where(ss_tot > 0.0, 1.0 - ss_res / ss_tot, np.nan)
    return LinearModel(
        coefficients=solution.T,
        rank=int(rank),
        r_squared_per_outcome=r2,
        residual_variance=ss_res / rows,
    )


@dataclass
class ConstraintMap:
    """Mirror-2 settings that center Aperture 1 for given mirror-1 settings:
    m2 = d @ m1 + e.

    In the degenerate dd2 = 0 geometry Aperture 1 cannot see mirror 2; the
    coupling is zeroed, mirror 2 stays free, and mirror 1 is pinned to the
    unique settings (m1_pinned) that center Aperture 1 on their own.
    """

    d: np.ndarray  # 2x2
    e: np.ndarray  # 2
    degenerate: bool = False
    m1_pinned: np.ndarray | None = None

    def apply(self, m1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Full (m1, m2) control pairs for a requested mirror-1 pair.

        Degenerate geometries repurpose the request as the free mirror-2
        settings and return the pinned mirror-1 solution.
        """
        m1 = np.asarray(m1, dtype=float)
        if self.degenerate:
            return self.m1_pinned.copy(), m1.copy()
        return m1.copy(), self.d @ m1 + self.e

    def to_json_dict(self) -> dict:
        return {
            "d": self.d.tolist(),
            "e": self.e.tolist(),
            "degenerate": self.degenerate,
            "m1_pinned": None if self.m1_pinned is None else self.m1_pinned.tolist(),
        }


@dataclass
class RegressionConfig:
    n_random: int = 30
    n_registration: int = 4
    registration_offset: float = 0.25  # fraction of the box half-width
    seed: int = 0
    convergence_threshold: float = 0.05  # mm


@dataclass
class Step1Result:
    forward_x: LinearModel  # dx1 from (cm1_yaw, cm2_yaw)
    forward_y: LinearModel  # dy1 from (cm1_pitch, cm2_pitch)
    constraint: ConstraintMap
    samples: Dataset
    m1_settings: np.ndarray  # the (n, 2) mirror-1 pairs used


def _step1_controls(plant: Plant, cfg: RegressionConfig) -> np.ndarray:
    box = sampling_box(plant.geometry, plant.scales)
    rng = np.random.default_rng([cfg.seed, 10])
    draws = rng.uniform(-box, box, size=(cfg.n_random, 4))
    registration = np.zeros((cfg.n_registration, 4))
    for k in range(cfg.n_registration):
        axis = k % 4
        registration[k, axis] = cfg.registration_offset * box[axis]
    return np.vstack([draws, registration])


def _coefficient_standard_error(x: np.ndarray, y: np.ndarray, model: LinearModel,
                                column: int) -> float:
    """Standard error of one fitted coefficient (design column index into
    the predictors-plus-intercept matrix)."""
    rows = x.shape[0]
    design = np.hstack([x, np.ones((rows, 1))])
    dof = max(rows - design.shape[1], 1)
    sigma2 = float(((y - model.predict(x)[:, 0]) ** 2).sum()) / dof
    covariance = sigma2 * np.linalg.pinv(design.T @ design)
    return float(np.sqrt(covariance[column, column]))


def step1_fit(plant: Plant, cfg: RegressionConfig = RegressionConfig()) -> Step1Result:
    """Sample, fit the Aperture-1 forward model per axis, and derive the
    constraint map.  Consumes exactly n_random + n_registration readings."""
    controls = _step1_controls(plant, cfg)
    records = []
    for row in controls:
        plant.set_controls(MirrorControls.from_sequence(row))
        records.append(
            SampleRecord(
                controls=plant.controls, measurement=plant.measure()
            )
        )
    samples = Dataset(records=records, seed=cfg.seed)

    a1 = np.array([r.measurement.a1 for r in records])
    xx, xy = controls[:, [0, 2]], controls[:, [1, 3]]
    forward_x = least_squares(xx, a1[:, 0])
    forward_y = least_squares(xy, a1[:, 1])
    se_bx = _coefficient_standard_error(xx, a1[:, 0], forward_x, column=1)
    se_by = _coefficient_standard_error(xy, a1[:, 1], forward_y, column=1)

    box = sampling_box(plant.geometry, plant.scales)
    constraint = _derive_constraint(
        forward_x, forward_y, se_bx, se_by,
        m1_box=(box[0], box[1]),
        control_limit=plant.geometry.control_limit,
    )
    return Step1Result(
        forward_x=forward_x,
        forward_y=forward_y,
        constraint=constraint,
        samples=samples,
        m1_settings=controls[:, [0, 1]],
    )


def _derive_constraint(
    forward_x: LinearModel,
    forward_y: LinearModel,
    se_bx: float,
    se_by: float,
    m1_box: tuple[float, float],
    control_limit: float,
) -> ConstraintMap:
    """Solve the fitted offset = a*m1 + b*m2 + c for m2 at offset = 0.

    A mirror-2 coefficient statistically indistinguishable from zero means
    Aperture 1 cannot see mirror 2 (the dd2 = 0 limit): the coupling is
    zeroed and mirror 1 pinned instead.  A small-but-significant
    coefficient whose solved map would drive mirror 2 beyond the actuator
    limits is a geometry diagnostic, not a usable constraint.
    """
    ax, bx, cx = forward_x.coefficients[0]
    ay, by, cy = forward_y.coefficients[0]
    if abs(ax) < 1e-15 or abs(ay) < 1e-15:
        raise DegenerateGeometryError(
            "Aperture 1 does not respond to mirror 1; geometry unusable"
        )
    x_blind = abs(bx) <= max(_SINGULAR_SE_FACTOR * se_bx, _SINGULAR_RATIO * abs(ax))
    y_blind = abs(by) <= max(_SINGULAR_SE_FACTOR * se_by, _SINGULAR_RATIO * abs(ay))
    if x_blind != y_blind:
        raise DegenerateGeometryError(
            "mirror-2 response inconsistent between axes "
            f"(|bx|={abs(bx):.3g} vs SE {se_bx:.3g}, |by|={abs(by):.3g} vs "
            f"SE {se_by:.3g})"
        )
    if x_blind:
        return ConstraintMap(
            d=np.zeros((2, 2)),
            e=np.zeros(2),
            degenerate=True,
            m1_pinned=np.array([-cx / ax, -cy / ay]),
        )
    d = np.array([[-ax / bx, 0.0], [0.0, -ay / by]])
    e = np.array([-cx / bx, -cy / by])
    reach_x = abs(d[0, 0]) * m1_box[0] + abs(e[0])
    reach_y = abs(d[1, 1]) * m1_box[1] + abs(e[1])
    if max(reach_x, reach_y) > control_limit:
        raise DegenerateGeometryError(
            "near-singular mirror-2 coefficient block: keeping Aperture 1 "
            f"centered would need up to {max(reach_x, reach_y):.3g} rad of "
            f"mirror 2 against a {control_limit:.3g} rad actuator limit"
        )
    return ConstraintMap(d=d, e=e)


@dataclass
class Step2Result:
    reverse: LinearModel  # controls from measurements
    samples: Dataset
    r2_mean: float


def step2_fit(
    plant: Plant,
    constraint: ConstraintMap,
    m1_settings: np.ndarray,
) -> Step2Result:
    """Measure along the constraint and fit the reverse linear model.

    Every sample is guaranteed complete; a blocked one means Step 1
    failed its job and raises.  Consumes exactly len(m1_settings)
    readings."""
    records = []
    rows = []
    for m1 in np.asarray(m1_settings, dtype=float):
        pair1, pair2 = constraint.apply(m1)
        controls = MirrorControls(pair1[0], pair1[1], pair2[0], pair2[1])
        plant.set_controls(controls)
        m = plant.measure()
        if not m.complete:
            raise BlockedSampleError(
                "constraint-guided sample blocked at Aperture 1; the Step-1 "
                "forward fit is unusable"
            )
        records.append(SampleRecord(controls=controls, measurement=m))
        rows.append((m.as_vector(), controls.as_tuple()))
    samples = Dataset(records=records)

    meas = np.array([r[0] for r in rows])
    ctrl = np.array([r[1] for r in rows])
    reverse = least_squares(meas, ctrl)
    # degenerate geometries pin mirror 1, leaving those axes with zero
    # variance and no defined R^2; average over the informative axes
    r2 = reverse.r_squared_per_outcome
    if np.all(np.isnan(r2)):
        raise UndefinedRSquaredError("every control axis constant in Step-2 fit")
    return Step2Result(
        reverse=reverse, samples=samples, r2_mean=float(np.nanmean(r2))
    )


@dataclass
class RegressionAlignOutcome:
    report: AlignmentReport
    step1: Step1Result
    step2: Step2Result


def align(
    plant: Plant, cfg: RegressionConfig = RegressionConfig()
) -> RegressionAlignOutcome:
    """Step 1, Step 2, then read the solution at the goal measurement and
    take one confirming reading (34 + 34 + 1 = 69 readings)."""
    readings_before = plant.readings_used()
    s1 = step1_fit(plant, cfg)
    s2 = step2_fit(plant, s1.constraint, s1.m1_settings)

    solution = MirrorControls.from_sequence(s2.reverse.predict(np.zeros(4))[0])
    plant.set_controls(solution)
    confirm = plant.measure()
    readings = plant.readings_used() - readings_before

    thr = cfg.convergence_threshold
    converged = (
        confirm.radius_a1 <= thr
        and confirm.radius_a2 is not None
        and confirm.radius_a2 <= thr
    )
    report = AlignmentReport(
        strategy="regression",
        final_controls=solution,
        residuals=confirm,
        readings=readings,
        outer_iterations=1,
        converged=converged,
    )
    return RegressionAlignOutcome(report=report, step1=s1, step2=s2)


def save_models(outcome: RegressionAlignOutcome, path) -> None:
    """Serialize the fitted Step-1/Step-2 models and constraint map."""
    doc = {
        "forward_x": outcome.step1.forward_x.to_json_dict(),
        "forward_y": outcome.step1.forward_y.to_json_dict(),
        "constraint": outcome.step1.constraint.to_json_dict(),
        "reverse": outcome.step2.reverse.to_json_dict(),
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
