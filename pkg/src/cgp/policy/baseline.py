"""Diffusion-policy baselines sharing the CGP encoders and backbone."""
from __future__ import annotations

import time

import numpy as np

from ..codec.train import tactile_force_scale
from ..diffusion import (
    DiffusionConfig,
    DiffusionTrainLog,
    TrajectoryDiffusion,
    TrajectoryNormalizer,
    WindowSet,
    fit_diffusion,
    split_episodes,
)

BASELINE_KINDS = ("visuotactile_dp", "visuomotor_dp")


def action_windows(episodes, horizon: int = 16, obs_horizon: int = 2,
                   stride: int = 1) -> WindowSet:
    """Observation histories paired with the following commanded targets."""
    if horizon < 1 or obs_horizon < 1 or stride < 1:
        raise ValueError("horizon, obs_horizon and stride must be >= 1")
    images, tactile, states, targets = [], [], [], []
    for ep in episodes:
        n = ep.n_frames
        if n < obs_horizon + horizon:
            continue
        future = ep.targets.astype(np.float64)
        for t0 in range(obs_horizon - 1, n - horizon, stride):
            lo = t0 - obs_horizon + 1
            images.append(ep.images[lo:t0 + 1])
            tactile.append(ep.tactile[lo:t0 + 1])
            states.append(ep.states[lo:t0 + 1].astype(np.float64))
            targets.append(future[t0 + 1:t0 + 1 + horizon])
    if not targets:
        raise ValueError(
            f"no episode has the {obs_horizon + horizon} frames a window needs")
    return WindowSet(images=np.stack(images), tactile=np.stack(tactile),
                     states=np.stack(states), targets=np.stack(targets))


def _mute_tactile(windows: WindowSet) -> WindowSet:
    return WindowSet(images=windows.images,
                     tactile=np.zeros_like(windows.tactile),
                     states=windows.states, targets=windows.targets)


def train_baseline(episodes, kind: str,
                   config: DiffusionConfig | None = None,
                   epochs: int = 30, batch_size: int = 32, lr: float = 1e-4,
                   ) -> tuple[TrajectoryDiffusion, DiffusionTrainLog]:
    """Fit a target-trajectory diffusion baseline.

    Both variants see the same windows and normalization. The visuomotor one
    trains (and later acts) with its tactile input zeroed: the encoder stack
    stays identical, it just never carries contact information.
    """
    t0 = time.monotonic()
    if kind not in BASELINE_KINDS:
        raise ValueError(f"kind {kind!r} not in {BASELINE_KINDS}")
    if config is None:
        config = DiffusionConfig(latent_dim=0)
    if config.latent_dim != 0:
        raise ValueError("baselines diffuse plain target trajectories; "
                         "config.latent_dim must be 0")
    if len(episodes) < 2:
        raise ValueError("need at least 2 episodes to hold out a validation set")

    tr_idx, va_idx = split_episodes(len(episodes), config.seed)
    tr_win = action_windows([episodes[i] for i in tr_idx],
                            config.horizon, config.obs_horizon)
    va_win = action_windows([episodes[i] for i in va_idx],
                            config.horizon, config.obs_horizon)

    first = episodes[tr_idx[0]]
    model = TrajectoryDiffusion(config, image_hw=first.images.shape[1:],
                                n_units=first.tactile.shape[1],
                                n_channels=first.tactile.shape[2])
    flat = tr_win.targets.reshape(-1, model.data_dim)
    model.attach_stats(
        TrajectoryNormalizer.fit(flat),
        tactile_force_scale(tr_win.tactile.reshape(-1, model.n_units,
                                                   model.n_channels)))
    if kind == "visuomotor_dp":
        # scale still comes from real frames so the pipeline stays identical;
        # only the values are muted
        tr_win, va_win = _mute_tactile(tr_win), _mute_tactile(va_win)

    log = DiffusionTrainLog(n_train_episodes=len(tr_idx),
                            n_val_episodes=len(va_idx))
    fit_diffusion(model, tr_win, va_win, epochs, batch_size, lr, log)
    log.seconds = time.monotonic() - t0
    return model, log
