"""Sliding-window assembly of observation histories and coupled futures.

Each window pairs T_o past observation frames with the following T frames of
actual state plus tactile latent. Latents are the codec's posterior means, so
the targets are a deterministic function of the episode bytes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..codec.model import TactileCodec
from ..data.episode import Episode


@dataclass(frozen=True)
class WindowSet:
    images: np.ndarray    # (N, T_o, H, W) float32
    tactile: np.ndarray   # (N, T_o, units, channels) float32, raw newtons
    states: np.ndarray    # (N, T_o, state_dim) float64
    targets: np.ndarray   # (N, T, state_dim + M) float64

    def __len__(self) -> int:
        return int(self.targets.shape[0])

    def take(self, idx) -> "WindowSet":
        return WindowSet(images=self.images[idx], tactile=self.tactile[idx],
                         states=self.states[idx], targets=self.targets[idx])


def coupled_windows(episodes: list[Episode], codec: TactileCodec,
                    horizon: int = 16, obs_horizon: int = 2,
                    stride: int = 1) -> WindowSet:
    """Cut every episode long enough into overlapping training windows."""
    if horizon < 1 or obs_horizon < 1 or stride < 1:
        raise ValueError("horizon, obs_horizon and stride must be >= 1")
    images, tactile, states, targets = [], [], [], []
    for ep in episodes:
        n = ep.n_frames
        if n < obs_horizon + horizon:
            continue
        means = codec.encode(ep.tactile.astype(np.float64))[0]
        coupled = np.concatenate([ep.states.astype(np.float64), means], axis=1)
        for t0 in range(obs_horizon - 1, n - horizon, stride):
            lo = t0 - obs_horizon + 1
            images.append(ep.images[lo:t0 + 1])
            tactile.append(ep.tactile[lo:t0 + 1])
            states.append(ep.states[lo:t0 + 1].astype(np.float64))
            targets.append(coupled[t0 + 1:t0 + 1 + horizon])
    if not targets:
        raise ValueError(
            f"no episode has the {obs_horizon + horizon} frames a window needs")
    return WindowSet(images=np.stack(images), tactile=np.stack(tactile),
                     states=np.stack(states), targets=np.stack(targets))
