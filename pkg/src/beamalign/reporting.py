"""Alignment and comparison reports plus their JSON/CSV emission.

Report serialization is deterministic: stable field order, floats written
with Python's exact shortest-round-trip representation, and the wall-time
field excluded from the content hash so re-runs with identical seeds
produce identical hashes.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .geometry import MirrorControls
from .plant import Measurement

_CSV_FIELDS = (
    "strategy",
    "readings",
    "converged",
    "outer_iterations",
    "residual_dx1_mm",
    "residual_dy1_mm",
    "residual_dx2_mm",
    "residual_dy2_mm",
    "cm1_yaw_rad",
    "cm1_pitch_rad",
    "cm2_yaw_rad",
    "cm2_pitch_rad",
    "wall_time_s",
)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class AlignmentReport:
    """Outcome of one aligner run against one plant."""

    strategy: str
    final_controls: MirrorControls
    residuals: Measurement
    readings: int
    outer_iterations: int
    converged: bool

    def to_json_dict(self) -> dict:
        a2 = self.residuals.a2
        return {
            "strategy": self.strategy,
            "converged": self.converged,
            "status": 0 if self.converged else 1,
            "readings": self.readings,
            "reading_unit": "camera frame pair",
            "outer_iterations": self.outer_iterations,
            "final_controls": {
                "cm1_yaw_rad": self.final_controls.cm1_yaw,
                "cm1_pitch_rad": self.final_controls.cm1_pitch,
                "cm2_yaw_rad": self.final_controls.cm2_yaw,
                "cm2_pitch_rad": self.final_controls.cm2_pitch,
            },
            "residuals_mm": {
                "dx1": self.residuals.a1[0],
                "dy1": self.residuals.a1[1],
                "dx2": None if a2 is None else a2[0],
                "dy2": None if a2 is None else a2[1],
            },
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "AlignmentReport":
        res = doc["residuals_mm"]
        a2 = None if res["dx2"] is None else (res["dx2"], res["dy2"])
        fc = doc["final_controls"]
        return cls(
            strategy=doc["strategy"],
            final_controls=MirrorControls(
                fc["cm1_yaw_rad"], fc["cm1_pitch_rad"],
                fc["cm2_yaw_rad"], fc["cm2_pitch_rad"],
            ),
            residuals=Measurement(a1=(res["dx1"], res["dy1"]), a2=a2),
            readings=doc["readings"],
            outer_iterations=doc["outer_iterations"],
            converged=doc["converged"],
        )


@dataclass
class ComparisonReport:
    """Side-by-side budget/accuracy comparison of the selected strategies."""

    reports: list[AlignmentReport]
    wall_times: dict[str, float] = field(default_factory=dict)

    def readings(self, strategy: str) -> int:
        for r in self.reports:
            if r.strategy == strategy:
                return r.readings
        raise KeyError(strategy)

    @property
    def ordering_check(self) -> bool | None:
        """True when regression < beamwalk < ann readings; None unless all
        three strategies are present."""
        try:
            return (
                self.readings("regression")
                < self.readings("beamwalk")
                < self.readings("ann")
            )
        except KeyError:
            return None

    def to_json_dict(self) -> dict:
        body = {
            "strategies": [r.to_json_dict() for r in self.reports],
            "ordering_check": self.ordering_check,
        }
        body["content_hash"] = hashlib.sha256(
            json.dumps(body, sort_keys=True).encode()
        ).hexdigest()
        body["wall_time_s"] = {
            name: self.wall_times.get(name) for name in sorted(self.wall_times)
        }
        return body

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ComparisonReport":
        return cls(
            reports=[AlignmentReport.from_json_dict(d) for d in doc["strategies"]],
            wall_times=dict(doc.get("wall_time_s") or {}),
        )


def dumps_json(report: ComparisonReport) -> str:
    return json.dumps(report.to_json_dict(), indent=2) + "\n"


def dumps_csv(report: ComparisonReport) -> str:
    """One row per strategy; floats at 17 significant digits."""
    out = io.StringIO()
    out.write(",".join(_CSV_FIELDS) + "\n")
    for r in report.reports:
        a2 = r.residuals.a2
        row = [
            r.strategy,
            str(r.readings),
            "1" if r.converged else "0",
            str(r.outer_iterations),
            _fmt(r.residuals.a1[0]),
            _fmt(r.residuals.a1[1]),
            "" if a2 is None else _fmt(a2[0]),
            "" if a2 is None else _fmt(a2[1]),
            _fmt(r.final_controls.cm1_yaw),
            _fmt(r.final_controls.cm1_pitch),
            _fmt(r.final_controls.cm2_yaw),
            _fmt(r.final_controls.cm2_pitch),
            _fmt(report.wall_times.get(r.strategy, 0.0)),
        ]
        out.write(",".join(row) + "\n")
    return out.getvalue()


def emit(report: ComparisonReport, path, fmt: str) -> None:
    """Write the report as json or csv with LF endings."""
    if fmt == "json":
        text = dumps_json(report)
    elif fmt == "csv":
        text = dumps_csv(report)
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
