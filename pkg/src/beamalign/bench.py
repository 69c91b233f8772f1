"""Benchmark runner: execute each selected strategy against a freshly
misaligned plant and assemble the side-by-side comparison.

Every strategy gets its own plant built from the same config (identical
geometry, noise seed and misalignment), so the reading counts are
directly comparable.  Reading counts come straight from each plant's
counter, never from the aligners' own bookkeeping.
"""

from __future__ import annotations

import time

from . import beamwalk, regression
from . import mlp
from .config import ExperimentConfig
from .errors import BeamAlignError
from .reporting import AlignmentReport, ComparisonReport


def run_strategy(cfg: ExperimentConfig, name: str) -> AlignmentReport:
    plant = cfg.make_plant()
    before = plant.readings_used()
    if name == "ann":
        report = mlp.align(plant, cfg.ann_config()).report
    elif name == "beamwalk":
        report = beamwalk.align(plant, cfg.walk).report
    elif name == "regression":
        report = regression.align(plant, cfg.regression_config()).report
    else:
        raise BeamAlignError(f"unknown strategy {name!r}")
    used = plant.readings_used() - before
    if used != report.readings:
        raise BeamAlignError(
            f"{name}: report claims {report.readings} readings, plant counted {used}"
        )
    return report


def run(cfg: ExperimentConfig) -> ComparisonReport:
    """Run all selected strategies; deterministic end-to-end for a fixed
    config (wall times aside)."""
    reports = []
    wall_times = {}
    for name in cfg.selected_strategies():
        t0 = time.perf_counter()
        reports.append(run_strategy(cfg, name))
        wall_times[name] = time.perf_counter() - t0
    return ComparisonReport(reports=reports, wall_times=wall_times)
