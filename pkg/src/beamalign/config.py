"""Experiment configuration: JSON loading, validation and seed streams.

Angles cross this boundary in degrees and lengths in the units their key
names carry (_m, _mm); everything becomes radians/meters/millimeters
internally.  All randomness flows from one master seed through named
sub-streams so the strategies never perturb each other's draws.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .beamwalk import WalkConfig
from .errors import ConfigError
from .geometry import SystemGeometry
from .mlp import AnnAlignConfig, TrainConfig
from .plant import MisalignmentScales, Plant
from .regression import RegressionConfig

STRATEGIES = ("ann", "beamwalk", "regression")


def substream_seed(master: int, name: str) -> int:
    """Deterministic per-purpose seed derived from the master seed."""
    ss = np.random.SeedSequence([int(master), zlib.crc32(name.encode())])
    return int(ss.generate_state(1)[0])


@dataclass
class ExperimentConfig:
    geometry: SystemGeometry
    noise_sigma: float
    misalign_magnitude: float
    scales: MisalignmentScales
    master_seed: int
    strategy: str = "all"
    ann_samples: int = 1000
    ann_train_fraction: float = 0.9
    ann_train: TrainConfig = field(default_factory=TrainConfig)
    ann_threshold: float = 0.4
    walk: WalkConfig = field(default_factory=WalkConfig)
    regression: RegressionConfig = field(default_factory=RegressionConfig)

    def selected_strategies(self) -> tuple[str, ...]:
        return STRATEGIES if self.strategy == "all" else (self.strategy,)

    # -- derived objects ----------------------------------------------------

    def make_plant(self, misaligned: bool = True) -> Plant:
        plant = Plant(
            geometry=self.geometry,
            noise_sigma=self.noise_sigma,
            rng_seed=substream_seed(self.master_seed, "noise"),
            misalignment_scales=self.scales,
        )
        if misaligned:
            plant.misalign(
                substream_seed(self.master_seed, "misalignment"),
                self.misalign_magnitude,
            )
        return plant

    def ann_config(self) -> AnnAlignConfig:
        return AnnAlignConfig(
            n_samples=self.ann_samples,
            train_fraction=self.ann_train_fraction,
            train=self.ann_train,
            collection_seed=substream_seed(self.master_seed, "ann/collect"),
            split_seed=substream_seed(self.master_seed, "ann/split"),
            train_seed=substream_seed(self.master_seed, "ann/train"),
            convergence_threshold=self.ann_threshold,
        )

    def regression_config(self) -> RegressionConfig:
        cfg = self.regression
        return RegressionConfig(
            n_random=cfg.n_random,
            n_registration=cfg.n_registration,
            registration_offset=cfg.registration_offset,
            seed=substream_seed(self.master_seed, "regression"),
            convergence_threshold=cfg.convergence_threshold,
        )


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ConfigError(f"missing config key {key!r} in {where}")
    return doc[key]


def _resolve_geometry(value, base_dir) -> dict:
    """The geometry entry is either inline or a path to a geometry JSON."""
    if isinstance(value, dict):
        return value
    if isinstance(value, str):
        path = Path(base_dir or ".") / value
        try:
            with open(path) as fh:
                return json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"geometry file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"geometry file is not valid JSON: {exc}") from exc
    raise ConfigError("geometry must be an object or a file path")


def config_from_dict(doc: dict, base_dir=None) -> ExperimentConfig:
    try:
        g = _resolve_geometry(_require(doc, "geometry", "config"), base_dir)
        geometry = SystemGeometry(
            dd0=float(_require(g, "dd0_m", "geometry")),
            dd1=float(_require(g, "dd1_m", "geometry")),
            dd2=float(_require(g, "dd2_m", "geometry")),
            dd3=float(_require(g, "dd3_m", "geometry")),
            aperture_radius_1=float(_require(g, "aperture_radius_1_mm", "geometry")),
            aperture_radius_2=float(_require(g, "aperture_radius_2_mm", "geometry")),
            camera_half_field=float(_require(g, "camera_half_field_mm", "geometry")),
            control_limit=math.radians(
                float(_require(g, "control_limit_deg", "geometry"))
            ),
        )
        mis = doc.get("misalignment", {})
        scales = MisalignmentScales(
            max_lateral=float(mis.get("max_lateral_mm", 6.0)),
            max_angular=math.radians(float(mis.get("max_angular_deg", 0.4584))),
            max_a1_offset=float(mis.get("max_a1_offset_mm", 2.5)),
            min_residual_a2=float(mis.get("min_residual_a2_mm", 8.0)),
        )
        ann = doc.get("ann", {})
        train = TrainConfig(
            epochs=int(ann.get("epochs", 10_000)),
            batch_size=int(ann.get("batch_size", 10)),
            learning_rate=float(ann.get("learning_rate", 1e-3)),
            beta1=float(ann.get("beta1", 0.9)),
            beta2=float(ann.get("beta2", 0.999)),
            eps=float(ann.get("eps", 1e-8)),
        )
        walk = doc.get("beamwalk", {})
        walk_cfg = WalkConfig(
            threshold=float(walk.get("threshold_mm", 0.05)),
            max_iterations=int(walk.get("max_iterations", 20)),
            probe_step=math.radians(float(walk.get("probe_step_deg", 0.06))),
            max_readings=int(walk.get("max_readings", 300)),
        )
        reg = doc.get("regression", {})
        reg_cfg = RegressionConfig(
            n_random=int(reg.get("n_random", 30)),
            n_registration=int(reg.get("n_registration", 4)),
            convergence_threshold=float(reg.get("convergence_threshold_mm", 0.05)),
        )
        strategy = doc.get("strategy", "all")
        if strategy not in STRATEGIES + ("all",):
            raise ConfigError(f"unknown strategy {strategy!r}")
        return ExperimentConfig(
            geometry=geometry,
            noise_sigma=float(doc.get("noise_sigma_mm", 0.01)),
            misalign_magnitude=float(mis.get("magnitude", 0.8)),
            scales=scales,
            master_seed=int(doc.get("seed", 12345)),
            strategy=strategy,
            ann_samples=int(ann.get("n_samples", 1000)),
            ann_train_fraction=float(ann.get("train_fraction", 0.9)),
            ann_train=train,
            ann_threshold=float(ann.get("convergence_threshold_mm", 0.4)),
            walk=walk_cfg,
            regression=reg_cfg,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc


def default_config_dict() -> dict:
    text = resources.files("beamalign").joinpath("data/default_config.json")
    return json.loads(text.read_text())


def load_config(path: str | None = None) -> ExperimentConfig:
    """Load a config file, or the packaged default when path is None."""
    if path is None:
        return config_from_dict(default_config_dict())
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    return config_from_dict(doc, base_dir=Path(path).parent)
