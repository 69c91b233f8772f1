"""Reverse-network aligner: from-scratch MLP with a compiled training
kernel and a pure numpy fallback selected at import."""

from .aligner import AnnAlignConfig, AnnAlignOutcome, align
from .model import (
    DEFAULT_LAYER_SIZES,
    MlpModel,
    forward,
    from_json_dict,
    init_model,
    load,
    predict,
    r_squared,
    save,
    to_json_dict,
)
from .train import (
    TrainConfig,
    TrainResult,
    available_backends,
    select_backend,
    train,
)

__all__ = [
    "AnnAlignConfig",
    "AnnAlignOutcome",
    "DEFAULT_LAYER_SIZES",
    "MlpModel",
    "TrainConfig",
    "TrainResult",
    "align",
    "available_backends",
    "forward",
    "from_json_dict",
    "init_model",
    "load",
    "predict",
    "r_squared",
    "save",
    "select_backend",
    "to_json_dict",
    "train",
]
