from .tensor import (
    Tensor,
    affine,
    concat,
    conv1d,
    conv2d,
    conv_transpose1d,
    exp,
    film_modulate,
    group_norm,
    log,
    mse,
    relu,
    silu,
    tanh,
)
from .layers import MLP, Conv1d, Conv2d, ConvTranspose1d, GroupNorm, Linear, Module, fan_in_uniform
from .optim import Adam
from .checkpoint import CheckpointError, load_params, save_params
from .gradcheck import check_gradients

__all__ = [
    "Adam", "CheckpointError", "Conv1d", "Conv2d", "ConvTranspose1d", "GroupNorm",
    "Linear", "MLP", "Module", "Tensor", "affine", "check_gradients", "concat",
    "conv1d", "conv2d", "conv_transpose1d", "exp", "fan_in_uniform", "film_modulate",
    "group_norm", "load_params", "log", "mse", "relu", "save_params", "silu", "tanh",
]
