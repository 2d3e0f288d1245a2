from .config import DanpConfig
from .model import (
    DanpModel,
    LatentGaussian,
    assemble_context_array,
    assemble_x_encoding,
    encode_pl_onehot,
    merge_channel_stats,
    normalize_window,
    denormalize_map,
    normalize_map,
)
from .training import TrainResult, train
from .forecast import Forecast, predict, build_context_bank, save_model, load_model

__all__ = [
    "DanpConfig",
    "DanpModel",
    "LatentGaussian",
    "assemble_context_array",
    "assemble_x_encoding",
    "encode_pl_onehot",
    "merge_channel_stats",
    "normalize_window",
    "denormalize_map",
    "normalize_map",
    "TrainResult",
    "train",
    "Forecast",
    "predict",
    "build_context_bank",
    "save_model",
    "load_model",
]
