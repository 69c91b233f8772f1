"""Multilayer perceptron reverse model: measurements in, controls out.

The network is a 4-10-10-4 regression net (rectified-linear hidden
layers, identity output) over per-feature standardized inputs and
targets.  Parameters live in one flat float64 vector laid out row-major
layer by layer (W1, b1, W2, b2, W3, b3), which both training backends
update in place.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, UndefinedRSquaredError
from ..geometry import MirrorControls

DEFAULT_LAYER_SIZES = (4, 10, 10, 4)


def param_count(layer_sizes) -> int:
    return sum(
        n_in * n_out + n_out for n_in, n_out in zip(layer_sizes, layer_sizes[1:])
    )


def param_slices(layer_sizes):
    """(weight, bias) slice pairs into the flat parameter vector."""
    out = []
    pos = 0
    for n_in, n_out in zip(layer_sizes, layer_sizes[1:]):
        w = slice(pos, pos + n_in * n_out)
        pos += n_in * n_out
        b = slice(pos, pos + n_out)
        pos += n_out
        out.append((w, b))
    return out


@dataclass
class NormStats:
    """Per-feature standardization statistics, from training data only."""

    input_mean: np.ndarray
    input_std: np.ndarray
    output_mean: np.ndarray
    output_std: np.ndarray

    @classmethod
    def fit(cls, inputs: np.ndarray, targets: np.ndarray) -> "NormStats":
        def std(a):
            s = a.std(axis=0)
            return np.where(s > 0.0, s, 1.0)

        return cls(
            input_mean=inputs.mean(axis=0),
            input_std=std(inputs),
            output_mean=targets.mean(axis=0),
            output_std=std(targets),
        )


@dataclass
class MlpModel:
    layer_sizes: tuple[int, ...]
    params: np.ndarray = field(repr=False)  # flat float64
    norm: NormStats = field(repr=False)

    def __post_init__(self):
        expected = param_count(self.layer_sizes)
        if self.params.shape != (expected,):
            raise ConfigError(
                f"parameter vector has {self.params.shape}, expected ({expected},)"
            )
        if not np.all(np.isfinite(self.params)):
            raise ConfigError("non-finite model parameters")

    def layers(self):
        """(W, b) array views per layer, shapes (n_in, n_out) and (n_out,)."""
        out = []
        sizes = self.layer_sizes
        for (ws, bs), (n_in, n_out) in zip(
            param_slices(sizes), zip(sizes, sizes[1:])
        ):
            out.append((self.params[ws].reshape(n_in, n_out), self.params[bs]))
        return out


def init_model(
    inputs: np.ndarray,
    targets: np.ndarray,
    seed: int,
    layer_sizes=DEFAULT_LAYER_SIZES,
) -> MlpModel:
    """Uniform fan-in-scaled weight init, deterministic from the seed."""
    rng = np.random.default_rng(seed)
    params = np.empty(param_count(layer_sizes))
    for (ws, bs), n_in in zip(param_slices(layer_sizes), layer_sizes):
        bound = 1.0 / np.sqrt(n_in)
        params[ws] = rng.uniform(-bound, bound, size=ws.stop - ws.start)
        params[bs] = rng.uniform(-bound, bound, size=bs.stop - bs.start)
    return MlpModel(
        layer_sizes=tuple(layer_sizes),
        params=params,
        norm=NormStats.fit(inputs, targets),
    )


def forward(model: MlpModel, inputs: np.ndarray) -> np.ndarray:
    """Batch forward pass on raw (unstandardized) inputs."""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    z = (x - model.norm.input_mean) / model.norm.input_std
    layers = model.layers()
    for w, b in layers[:-1]:
        z = np.maximum(z @ w + b, 0.0)
    w, b = layers[-1]
    z = z @ w + b
    return z * model.norm.output_std + model.norm.output_mean


def predict(model: MlpModel, measurement) -> MirrorControls:
    """Deterministic reverse prediction for one measurement 4-vector."""
    out = forward(model, np.asarray(measurement, dtype=float).reshape(1, 4))
    return MirrorControls.from_sequence(out[0])


def r_squared(model: MlpModel, dataset) -> tuple[np.ndarray, float]:
    """Coefficient of determination per control axis plus the mean.

    R^2 = 1 - SS_res / SS_tot with SS_tot taken about the dataset mean.
    Raises UndefinedRSquaredError for a zero-variance target axis.
    """
    if len(dataset) == 0:
        raise ConfigError("empty dataset")
    targets = dataset.controls_array()
    inputs = dataset.measurements_array()
    pred = forward(model, inputs)
    ss_tot = ((targets - targets.mean(axis=0)) ** 2).sum(axis=0)
    if np.any(ss_tot == 0.0):
        axis = int(np.argmax(ss_tot == 0.0))
        raise UndefinedRSquaredError(f"zero-variance target axis {axis}")
    ss_res = ((targets - pred) ** 2).sum(axis=0)
    per_axis = 1.0 - ss_res / ss_tot
    return per_axis, float(per_axis.mean())


# -- persistence -----------------------------------------------------------

def to_json_dict(model: MlpModel) -> dict:
    return {
        "layer_sizes": list(model.layer_sizes),
        "params": model.params.tolist(),
        "norm": {
            "input_mean": model.norm.input_mean.tolist(),
            "input_std": model.norm.input_std.tolist(),
            "output_mean": model.norm.output_mean.tolist(),
            "output_std": model.norm.output_std.tolist(),
        },
    }


def from_json_dict(doc: dict) -> MlpModel:
    norm = NormStats(
        input_mean=np.array(doc["norm"]["input_mean"]),
        input_std=np.array(doc["norm"]["input_std"]),
        output_mean=np.array(doc["norm"]["output_mean"]),
        output_std=np.array(doc["norm"]["output_std"]),
    )
    return MlpModel(
        layer_sizes=tuple(doc["layer_sizes"]),
        params=np.array(doc["params"], dtype=float),
        norm=norm,
    )


def save(model: MlpModel, path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(to_json_dict(model), fh, indent=2)
        fh.write("\n")


def load(path) -> MlpModel:
    with open(path) as fh:
        return from_json_dict(json.load(fh))
