from .tensor import Tensor, Tape, backward, concat, matmul, affine, log_softmax, zero_grad
from .layers import (
    GruParams,
    gru_cell,
    grl,
    reparameterize,
    gaussian_kl,
    mae_loss,
    nll_domain_loss,
    init_affine,
    init_gru,
    orthogonal,
    uniform_fan_in,
)
from .optim import OptimState, adam_step, clip_global_norm
from .checkpoint import save_checkpoint, load_checkpoint

__all__ = [
    "Tensor",
    "Tape",
    "backward",
    "concat",
    "matmul",
    "affine",
    "log_softmax",
    "zero_grad",
    "GruParams",
    "gru_cell",
    "grl",
    "reparameterize",
    "gaussian_kl",
    "mae_loss",
    "nll_domain_loss",
    "init_affine",
    "init_gru",
    "orthogonal",
    "uniform_fan_in",
    "OptimState",
    "adam_step",
    "clip_global_norm",
    "save_checkpoint",
    "load_checkpoint",
]
