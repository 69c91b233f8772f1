"""Brute-force alignment pipeline built on the reverse network.

Randomly sample the control space (blocked samples are collected but set
aside), train the reverse model on the complete samples, predict the
controls at the goal measurement (0,0,0,0), apply them and take one
confirming reading.  Budget: n_samples + 1 readings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataset import collect_random, filter_complete, split_train_test
from ..plant import Plant
from ..reporting import AlignmentReport
from .model import MlpModel, predict, r_squared
from .train import TrainConfig, TrainResult, train

GOAL = np.zeros(4)


@dataclass
class AnnAlignConfig:
    n_samples: int = 1000
    train_fraction: float = 0.9
    train: TrainConfig = field(default_factory=TrainConfig)
    collection_seed: int = 0
    split_seed: int = 1
    train_seed: int = 2
    convergence_threshold: float = 0.4  # mm, radial per aperture


@dataclass
class AnnAlignOutcome:
    report: AlignmentReport
    model: MlpModel
    train_result: TrainResult
    r2_train: float
    r2_test: float


def align(plant: Plant, cfg: AnnAlignConfig = AnnAlignConfig()) -> AnnAlignOutcome:
    readings_before = plant.readings_used()
    dataset = collect_random(plant, cfg.n_samples, cfg.collection_seed)
    complete = filter_complete(dataset)
    train_set, test_set = split_train_test(
        complete, cfg.train_fraction, cfg.split_seed
    )
    result = train(train_set, cfg.train, cfg.train_seed)

    _, r2_train = r_squared(result.model, train_set)
    _, r2_test = r_squared(result.model, test_set)

    solution = predict(result.model, GOAL)
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
        strategy="ann",
        final_controls=solution,
        residuals=confirm,
        readings=readings,
        outer_iterations=1,
        converged=converged,
    )
    return AnnAlignOutcome(
        report=report,
        model=result.model,
        train_result=result,
        r2_train=r2_train,
        r2_test=r2_test,
    )
