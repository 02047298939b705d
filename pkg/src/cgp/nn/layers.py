"""Layers and modules built on the autodiff tensor.

Weights use fan-in-scaled uniform init from a seeded generator; biases start
at zero. Modules expose named parameters under dotted paths so checkpoints
and namespace assertions (codec vs policy encoders) stay unambiguous.
"""
from __future__ import annotations

import numpy as np

from .tensor import (
    Tensor,
    affine,
    conv1d,
    conv2d,
    conv_transpose1d,
    group_norm,
    relu,
    silu,
)


def fan_in_uniform(rng: np.random.Generator, shape: tuple, fan_in: int,
                   dtype=np.float32) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Module:
    """Minimal container: child modules and parameters discovered by attribute."""

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]

    def named_parameters(self, prefix: str = "") -> list[tuple[str, Tensor]]:
        out: list[tuple[str, Tensor]] = []
        for name, value in vars(self).items():
            path = f"{prefix}{name}" if not prefix else f"{prefix}.{name}"
            if isinstance(value, Tensor) and value.requires_grad:
                out.append((path, value))
            elif isinstance(value, Module):
                out.extend(value.named_parameters(path))
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        out.extend(item.named_parameters(f"{path}.{i}"))
                    elif isinstance(item, Tensor) and item.requires_grad:
                        out.append((f"{path}.{i}", item))
        return out

    def param_count(self) -> int:
        return sum(p.data.size for p in self.parameters())

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        extra = sorted(set(state) - set(own))
        if missing or extra:
            raise ValueError(f"state mismatch: missing={missing[:4]}, unexpected={extra[:4]}")
        for name, p in own.items():
            arr = np.asarray(state[name], dtype=p.data.dtype)
            if arr.shape != p.data.shape:
                raise ValueError(f"{name}: shape {arr.shape} != {p.data.shape}")
            p.data = arr.copy()


class Linear(Module):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator,
                 dtype=np.float32, zero_init: bool = False):
        if zero_init:
            w = np.zeros((n_in, n_out), dtype=dtype)
        else:
            w = fan_in_uniform(rng, (n_in, n_out), n_in, dtype)
        self.w = Tensor(w, requires_grad=True)
        self.b = Tensor(np.zeros(n_out, dtype=dtype), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return affine(x, self.w, self.b)


class Conv1d(Module):
    def __init__(self, c_in: int, c_out: int, k: int, rng: np.random.Generator,
                 stride: int = 1, pad: int = 0, dtype=np.float32):
        self.stride = stride
        self.pad = pad
        self.w = Tensor(fan_in_uniform(rng, (c_out, c_in, k), c_in * k, dtype), requires_grad=True)
        self.b = Tensor(np.zeros(c_out, dtype=dtype), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return conv1d(x, self.w, self.b, stride=self.stride, pad=self.pad)


class ConvTranspose1d(Module):
    def __init__(self, c_in: int, c_out: int, k: int, rng: np.random.Generator,
                 stride: int = 1, pad: int = 0, dtype=np.float32):
        self.stride = stride
        self.pad = pad
        self.w = Tensor(fan_in_uniform(rng, (c_in, c_out, k), c_in * k, dtype), requires_grad=True)
        self.b = Tensor(np.zeros(c_out, dtype=dtype), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return conv_transpose1d(x, self.w, self.b, stride=self.stride, pad=self.pad)


class Conv2d(Module):
    def __init__(self, c_in: int, c_out: int, k: int, rng: np.random.Generator,
                 stride: int = 1, pad: int = 0, dtype=np.float32):
        self.stride = stride
        self.pad = pad
        self.w = Tensor(fan_in_uniform(rng, (c_out, c_in, k, k), c_in * k * k, dtype),
                        requires_grad=True)
        self.b = Tensor(np.zeros(c_out, dtype=dtype), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(x, self.w, self.b, stride=self.stride, pad=self.pad)


class GroupNorm(Module):
    def __init__(self, groups: int, channels: int, dtype=np.float32, eps: float = 1e-5):
        if channels % groups:
            raise ValueError(f"channels {channels} not divisible by groups {groups}")
        self.groups = groups
        self.eps = eps
        self.w = Tensor(np.ones(channels, dtype=dtype), requires_grad=True)
        self.b = Tensor(np.zeros(channels, dtype=dtype), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return group_norm(x, self.w, self.b, self.groups, self.eps)


class MLP(Module):
    """Dense stack with a fixed activation; no activation after the last layer."""

    def __init__(self, dims: list[int], rng: np.random.Generator,
                 activation: str = "relu", dtype=np.float32, zero_last: bool = False):
        self.activation = activation
        self.layers = [
            Linear(dims[i], dims[i + 1], rng, dtype,
                   zero_init=(zero_last and i == len(dims) - 2))
            for i in range(len(dims) - 1)
        ]

    def __call__(self, x: Tensor) -> Tensor:
        act = relu if self.activation == "relu" else silu
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = act(x)
        return x
