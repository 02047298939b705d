"""Observation-history encoder feeding the denoiser's FiLM conditioning.

Each history step contributes a small 2D-conv feature of the scene image, a
1D-conv feature of the tactile frame, and the raw (normalized) state vector.
Weights are owned by this module and shared with nothing else, so the codec
and the conditioning pathway can never alias.
"""
from __future__ import annotations

import numpy as np

from ..nn import Conv1d, Conv2d, Linear, Module, Tensor, concat, silu


def _conv1d_out(length: int, k: int, stride: int, pad: int) -> int:
    return (length + 2 * pad - k) // stride + 1


class ConditionEncoder(Module):
    def __init__(self, state_dim: int, n_units: int, n_channels: int,
                 image_hw: tuple, rng: np.random.Generator,
                 vision_dim: int = 32, tactile_dim: int = 32,
                 obs_horizon: int = 2):
        h, w = image_hw
        if h % 8 or w % 8:
            raise ValueError(f"image sides {image_hw} must be divisible by 8")
        if obs_horizon < 1:
            raise ValueError("observation horizon must be >= 1")
        self.state_dim = state_dim
        self.n_units = n_units
        self.n_channels = n_channels
        self.image_hw = (int(h), int(w))
        self.obs_horizon = obs_horizon
        self.vis1 = Conv2d(1, 8, 3, rng, stride=2, pad=1)
        self.vis2 = Conv2d(8, 16, 3, rng, stride=2, pad=1)
        self.vis3 = Conv2d(16, 16, 3, rng, stride=2, pad=1)
        self.vis_head = Linear(16 * (h // 8) * (w // 8), vision_dim, rng)
        self.tac1 = Conv1d(n_channels, 8, 5, rng, stride=2, pad=2)
        self.tac2 = Conv1d(8, 16, 5, rng, stride=2, pad=2)
        l_out = _conv1d_out(_conv1d_out(n_units, 5, 2, 2), 5, 2, 2)
        self.tac_head = Linear(16 * l_out, tactile_dim, rng)
        self.feature_dim = obs_horizon * (vision_dim + tactile_dim + state_dim)

    def __call__(self, images: Tensor, tactile: Tensor, states: Tensor) -> Tensor:
        """(B, T_o, H, W), (B, T_o, C, N), (B, T_o, S) -> (B, feature_dim)."""
        b, t_o = images.shape[0], self.obs_horizon
        h, w = self.image_hw
        v = images.reshape(b * t_o, 1, h, w)
        v = silu(self.vis3(silu(self.vis2(silu(self.vis1(v))))))
        v = self.vis_head(v.reshape(b * t_o, -1)).reshape(b, -1)
        u = tactile.reshape(b * t_o, self.n_channels, self.n_units)
        u = silu(self.tac2(silu(self.tac1(u))))
        u = self.tac_head(u.reshape(b * t_o, -1)).reshape(b, -1)
        return concat([v, u, states.reshape(b, -1)], axis=1)
