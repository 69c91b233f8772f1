"""Practice-led aligner: the automated beam walk.

Mimics the standard operating procedure observed with skilled operators:
center Aperture 1 with Mirror 1, then Aperture 2 with Mirror 2 until that
aperture is centered or the beam blocks at Aperture 1 (at which point
attention returns to Mirror 1), repeating until both apertures are within
threshold.  Each axis visit estimates its local gain with one secant
probe step and then applies Newton-style corrections; every camera frame
pair is counted against the budget.

The number of outer iterations this needs scales with the mirror-2 to
Aperture-1 lever arm: with dd2 = 0, mirror 2 cannot disturb Aperture 1
and a single outer pass aligns the system.
"""

from __future__ import annotations

import dataclasses
import enum
import io
import math
from dataclasses import dataclass, field

from .errors import ConfigError, GainEstimationError
from .plant import Measurement, Plant
from .reporting import AlignmentReport

TRACE_HEADER = "reading_index,mirror,axis,control_value,dx,dy,aperture,blocked"

_AXIS_CONTROL = {
    (1, "x"): "cm1_yaw",
    (1, "y"): "cm1_pitch",
    (2, "x"): "cm2_yaw",
    (2, "y"): "cm2_pitch",
}


@dataclass
class WalkConfig:
    threshold: float = 0.05  # mm, radial convergence bound per aperture
    max_iterations: int = 20  # outer SOP repetitions
    probe_step: float = 1.047e-3  # rad, initial secant probe per axis
    max_readings: int = 300  # safety budget
    probe_growth: float = 4.0  # one-shot probe enlargement factor
    max_axis_corrections: int = 8

    def __post_init__(self):
        if self.threshold <= 0.0:
            raise ConfigError("walk threshold must be > 0")
        if self.probe_step <= 0.0:
            raise ConfigError("probe_step must be > 0")
        if self.max_iterations < 1 or self.max_readings < 2:
            raise ConfigError("walk iteration/reading budgets too small")

    @property
    def axis_tolerance(self) -> float:
        return self.threshold / math.sqrt(2.0)


class VisitStatus(enum.Enum):
    CENTERED = "centered"
    BLOCKED = "blocked"
    STALLED = "stalled"


@dataclass
class VisitResult:
    status: VisitStatus
    measurement: Measurement
    readings: int
    corrections: int = 0


@dataclass
class WalkOutcome:
    report: AlignmentReport
    trace: list[tuple] = field(default_factory=list)


class _BudgetExhausted(Exception):
    pass


class BeamWalker:
    """Single-owner control loop bound to one plant instance."""

    def __init__(self, plant: Plant, cfg: WalkConfig = WalkConfig()):
        if cfg.probe_step > plant.geometry.control_limit:
            raise ConfigError("probe_step exceeds the actuator limit")
        self.plant = plant
        self.cfg = cfg
        self.trace: list[tuple] = []
        self._start_count = plant.readings_used()
        self._last: Measurement | None = None

    # -- bookkeeping -------------------------------------------------------

    def _readings(self) -> int:
        return self.plant.readings_used() - self._start_count

    def _measure(self, mirror: int, axis: str, aperture: int) -> Measurement:
        if self._readings() >= self.cfg.max_readings:
            raise _BudgetExhausted
        m = self.plant.measure()
        self._last = m
        values = m.a1 if aperture == 1 else m.a2
        if axis in ("x", "y"):
            control = getattr(self.plant.controls, _AXIS_CONTROL[(mirror, axis)])
        else:
            control = None  # entry reading, no control moved yet
        self.trace.append(
            (
                self.plant.readings_used(),
                mirror,
                axis,
                control,
                None if values is None else values[0],
                None if values is None else values[1],
                aperture,
                not m.complete,
            )
        )
        return m

    def _nudge(self, mirror: int, axis: str, delta: float) -> float:
        """Apply a control increment; returns the new control value."""
        name = _AXIS_CONTROL[(mirror, axis)]
        new = getattr(self.plant.controls, name) + delta
        self.plant.set_controls(
            dataclasses.replace(self.plant.controls, **{name: new})
        )
        return new

    @staticmethod
    def _component(m: Measurement, aperture: int, axis: str) -> float | None:
        values = m.a1 if aperture == 1 else m.a2
        if values is None:
            return None
        return values[0] if axis == "x" else values[1]

    def _within(self, m: Measurement) -> bool:
        """Both apertures measured and inside the radial threshold."""
        return (
            m.radius_a1 <= self.cfg.threshold
            and m.radius_a2 is not None
            and m.radius_a2 <= self.cfg.threshold
        )

    # -- one mirror/aperture visit ------------------------------------------

    def center_on_aperture(self, mirror: int, aperture: int) -> VisitResult:
        """Walk one mirror until its target aperture is centered, the beam
        blocks at Aperture 1 (aperture-2 walks only), or progress stalls.

        When the aperture is already within threshold the visit costs one
        reading and changes nothing.  Otherwise every axis gets a fresh
        secant probe each visit (stale gains are not trusted across outer
        iterations) followed by Newton corrections; the probe itself
        deflects the beam, so each probed axis needs at least one
        correction."""
        cfg = self.cfg
        before = self._readings()
        corrections = 0
        m = self._measure(mirror, "-", aperture)
        radius = m.radius_a1 if aperture == 1 else m.radius_a2
        if radius is None:
            return VisitResult(VisitStatus.BLOCKED, m, self._readings() - before)
        if radius <= cfg.threshold:
            return VisitResult(VisitStatus.CENTERED, m, self._readings() - before)

        done = True
        for axis in ("x", "y"):
            value = self._component(m, aperture, axis)
            if value is None:
                return VisitResult(
                    VisitStatus.BLOCKED, m, self._readings() - before, corrections
                )

            gain, m = self._estimate_gain(mirror, aperture, axis, value)
            if m.a2 is None and aperture == 2:
                return VisitResult(
                    VisitStatus.BLOCKED, m, self._readings() - before, corrections
                )

            corrected = False
            for _ in range(cfg.max_axis_corrections):
                value = self._component(m, aperture, axis)
                if value is None:
                    return VisitResult(
                        VisitStatus.BLOCKED, m, self._readings() - before, corrections
                    )
                if abs(value) <= cfg.axis_tolerance:
                    corrected = True
                    break
                self._nudge(mirror, axis, -value / gain)
                corrections += 1
                m = self._measure(mirror, axis, aperture)
            done = done and corrected
        status = VisitStatus.CENTERED if done else VisitStatus.STALLED
        return VisitResult(status, m, self._readings() - before, corrections)

    def _estimate_gain(self, mirror, aperture, axis, baseline):
        """Secant gain from one probe step (enlarged once if the response
        is below the noise floor)."""
        cfg = self.cfg
        limit = self.plant.geometry.control_limit
        current = getattr(self.plant.controls, _AXIS_CONTROL[(mirror, axis)])
        step = cfg.probe_step if current + cfg.probe_step <= limit else -cfg.probe_step
        floor = max(10.0 * self.plant.noise_sigma, 1e-12)

        self._nudge(mirror, axis, step)
        m = self._measure(mirror, axis, aperture)
        after = self._component(m, aperture, axis)
        if after is None:
            return 1.0, m  # blocked; caller returns before using the gain
        if abs(after - baseline) < floor:
            grown = step * cfg.probe_growth
            self._nudge(mirror, axis, grown - step)
            m = self._measure(mirror, axis, aperture)
            after = self._component(m, aperture, axis)
            if after is None:
                return 1.0, m
            step = grown
            if abs(after - baseline) < floor:
                raise GainEstimationError(
                    f"mirror {mirror} {axis}-axis probe of {step:.3e} rad moved "
                    f"aperture {aperture} by {abs(after - baseline):.3e} mm, "
                    f"below the noise floor {floor:.3e} mm"
                )
        return (after - baseline) / step, m

    # -- full SOP loop -------------------------------------------------------

    def align(self) -> WalkOutcome:
        """Repeat the two SOP steps until a whole pass requires no further
        adjustment and both apertures sit within threshold."""
        cfg = self.cfg
        converged = False
        outer = 0
        try:
            while outer < cfg.max_iterations:
                outer += 1
                self.center_on_aperture(mirror=1, aperture=1)
                v2 = self.center_on_aperture(mirror=2, aperture=2)
                if v2.status is VisitStatus.BLOCKED:
                    continue  # switch focus back to Mirror 1
                if self._within(v2.measurement):
                    converged = True
                    break
        except _BudgetExhausted:
            converged = False

        report = AlignmentReport(
            strategy="beamwalk",
            final_controls=self.plant.controls,
            residuals=self._last,
            readings=self._readings(),
            outer_iterations=outer,
            converged=converged,
        )
        return WalkOutcome(report=report, trace=self.trace)


def align(plant: Plant, cfg: WalkConfig = WalkConfig()) -> WalkOutcome:
    """Run the full beam-walk SOP against a plant."""
    return BeamWalker(plant, cfg).align()


def dumps_trace_csv(trace) -> str:
    out = io.StringIO()
    out.write(TRACE_HEADER + "\n")
    for row in trace:
        idx, mirror, axis, control, dx, dy, aperture, blocked = row
        out.write(
            ",".join(
                [
                    str(idx),
                    str(mirror),
                    axis,
                    "" if control is None else format(control, ".17g"),
                    "" if dx is None else format(dx, ".17g"),
                    "" if dy is None else format(dy, ".17g"),
                    str(aperture),
                    "1" if blocked else "0",
                ]
            )
            + "\n"
        )
    return out.getvalue()


def write_trace_csv(trace, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_trace_csv(trace))
