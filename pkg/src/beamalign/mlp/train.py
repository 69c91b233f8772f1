"""Reverse-model training: mini-batch Adam over standardized data.

The hot per-epoch loop runs in the compiled Cython kernel when it is
available and the architecture is the default 4-10-10-4; otherwise the
pure numpy backend takes over.  BEAMALIGN_MLP_BACKEND=pure|compiled
forces the choice.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from . import _pure
from .model import DEFAULT_LAYER_SIZES, MlpModel, init_model, param_count

try:
    from . import _kernel
except ImportError:  # pragma: no cover - build-environment dependent
    _kernel = None

_ENV_VAR = "BEAMALIGN_MLP_BACKEND"


def available_backends() -> tuple[str, ...]:
    return ("compiled", "pure") if _kernel is not None else ("pure",)


def select_backend(layer_sizes) -> str:
    """Backend used for the given architecture, honoring the env override."""
    forced = os.environ.get(_ENV_VAR, "").strip().lower()
    if forced == "pure":
        return "pure"
    compiled_ok = _kernel is not None and tuple(layer_sizes) == tuple(
        _kernel.LAYER_SIZES
    )
    if forced == "compiled":
        if not compiled_ok:
            raise ConfigError(
                "compiled backend requested but unavailable for layer sizes "
                f"{tuple(layer_sizes)}"
            )
        return "compiled"
    if forced and forced not in ("compiled", "pure"):
        raise ConfigError(f"unknown {_ENV_VAR} value {forced!r}")
    return "compiled" if compiled_ok else "pure"


@dataclass
class TrainConfig:
    epochs: int = 10_000
    batch_size: int = 10
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    shuffle_seed: int | None = None  # defaults to the train seed

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")


@dataclass
class TrainResult:
    model: MlpModel
    loss_trace: np.ndarray = field(repr=False)  # per-epoch training MSE
    backend: str = "pure"


def standardized_arrays(model: MlpModel, dataset) -> tuple[np.ndarray, np.ndarray]:
    x = (dataset.measurements_array() - model.norm.input_mean) / model.norm.input_std
    y = (dataset.controls_array() - model.norm.output_mean) / model.norm.output_std
    return np.ascontiguousarray(x), np.ascontiguousarray(y)


def train(
    train_set,
    cfg: TrainConfig = TrainConfig(),
    seed: int = 0,
    layer_sizes=DEFAULT_LAYER_SIZES,
) -> TrainResult:
    """Fit the reverse model: inputs are measurements, targets controls.

    Runs cfg.epochs passes of mini-batch Adam over freshly shuffled
    batches and returns the final-epoch model with the loss trace.
    """
    if len(train_set) == 0:
        raise ConfigError("training dataset is empty")
    if any(not r.complete for r in train_set.records):
        raise ConfigError("training dataset contains blocked (incomplete) records")

    inputs = train_set.measurements_array()
    targets = train_set.controls_array()
    model = init_model(inputs, targets, seed, layer_sizes)
    x, y = standardized_arrays(model, train_set)

    backend = select_backend(layer_sizes)
    shuffle_seed = cfg.shuffle_seed if cfg.shuffle_seed is not None else seed
    shuffle_rng = np.random.default_rng([shuffle_seed, 1])

    m = np.zeros(param_count(layer_sizes))
    v = np.zeros(param_count(layer_sizes))
    t = 0
    n = x.shape[0]
    trace = np.empty(cfg.epochs)
    n_el = n * layer_sizes[-1]
    for epoch in range(cfg.epochs):
        # the kernel's index view is C long
        order = shuffle_rng.permutation(n).astype(np.int_, copy=False)
        if backend == "compiled":
            sse, t = _kernel.run_epoch(
                model.params, m, v, t, x, y, order, cfg.batch_size,
                cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps,
            )
        else:
            sse, t = _pure.run_epoch(
                model.params, m, v, t, x, y, order, cfg.batch_size,
                layer_sizes, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps,
            )
        trace[epoch] = sse / n_el
    return TrainResult(model=model, loss_trace=trace, backend=backend)
