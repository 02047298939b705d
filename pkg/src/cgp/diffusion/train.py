"""Noise-prediction training for the trajectory generator."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..codec.model import TactileCodec
from ..codec.train import tactile_force_scale
from ..nn import Adam, Tensor
from .data import WindowSet, coupled_windows
from .model import DiffusionConfig, TrajectoryDiffusion
from .schedule import NoiseSchedule, q_sample
from .trajectory import TrajectoryNormalizer
from .unet import TemporalUNet

_LOG = logging.getLogger(__name__)


@dataclass
class DiffusionTrainLog:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = -1
    n_train_windows: int = 0
    n_val_windows: int = 0
    n_train_episodes: int = 0
    n_val_episodes: int = 0
    rejected_steps: int = 0
    seconds: float = 0.0


def split_episodes(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    # episode is the atomic unit: all windows of one episode land on one side
    rng = np.random.default_rng([seed, 733])
    order = rng.permutation(n)
    n_train = min(n - 1, max(1, int(round(0.5 * n))))
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def eps_loss(unet: TemporalUNet, schedule: NoiseSchedule, y0: np.ndarray,
             cond_t: Tensor, rng: np.random.Generator) -> Tensor:
    """Noise-prediction objective: sum over trajectory dims, mean over batch."""
    b = y0.shape[0]
    j = rng.integers(1, schedule.J + 1, size=b)
    eps = rng.standard_normal(y0.shape)
    y_j = q_sample(schedule, y0, j, eps)
    pred = unet(Tensor(np.swapaxes(y_j, 1, 2).astype(np.float32)), j, cond_t)
    diff = pred - Tensor(np.swapaxes(eps, 1, 2).astype(np.float32))
    return (diff * diff).sum() * (1.0 / b)


def denoise_train_step(model: TrajectoryDiffusion, opt: Adam, batch: WindowSet,
                       rng: np.random.Generator,
                       log: DiffusionTrainLog | None = None) -> float:
    """One optimizer update on a window batch; non-finite losses are rejected."""
    y0 = model.normalizer.normalize(batch.targets)
    img_t, tac_t, st_t, _ = model.history_tensors(batch.images, batch.tactile,
                                                  batch.states)
    cond_t = model.cond_encoder(img_t, tac_t, st_t)
    loss = eps_loss(model.unet, model.schedule, y0, cond_t, rng)
    value = float(loss.data)
    if not np.isfinite(value):
        if log is not None:
            log.rejected_steps += 1
        _LOG.warning("rejected non-finite diffusion loss %r", value)
        model.zero_grad()
        return value
    model.zero_grad()
    loss.backward()
    opt.step()
    return value


def _val_loss(model: TrajectoryDiffusion, windows: WindowSet, seed: int,
              chunk: int = 64) -> float:
    # the same rng seed every epoch keeps checkpoint selection comparable
    rng = np.random.default_rng([seed, 881])
    total, n = 0.0, 0
    for s in range(0, len(windows), chunk):
        batch = windows.take(slice(s, s + chunk))
        y0 = model.normalizer.normalize(batch.targets)
        img_t, tac_t, st_t, _ = model.history_tensors(
            batch.images, batch.tactile, batch.states)
        cond_t = model.cond_encoder(img_t, tac_t, st_t)
        loss = eps_loss(model.unet, model.schedule, y0, cond_t, rng)
        total += float(loss.data) * len(batch)
        n += len(batch)
    return total / n


def fit_diffusion(model: TrajectoryDiffusion, tr_win: WindowSet,
                  va_win: WindowSet, epochs: int = 30, batch_size: int = 32,
                  lr: float = 1e-4,
                  log: DiffusionTrainLog | None = None) -> DiffusionTrainLog:
    """Epoch loop with best-validation checkpoint restore.

    The model must already carry its normalization stats; window assembly and
    episode splitting are the caller's business, so the same loop trains both
    coupled-trajectory and plain target-trajectory variants.
    """
    t0 = time.monotonic()
    if log is None:
        log = DiffusionTrainLog()
    log.n_train_windows = len(tr_win)
    log.n_val_windows = len(va_win)
    opt = Adam(model.parameters(), lr=lr)
    rng = np.random.default_rng([model.config.seed, 3671])
    best = (np.inf, None)
    for epoch in range(epochs):
        order = rng.permutation(len(tr_win))
        running, seen = 0.0, 0
        for s in range(0, len(order), batch_size):
            batch = tr_win.take(order[s:s + batch_size])
            value = denoise_train_step(model, opt, batch, rng, log)
            if np.isfinite(value):
                running += value * len(batch)
                seen += len(batch)
        vl = _val_loss(model, va_win, model.config.seed)
        log.train_loss.append(running / max(seen, 1))
        log.val_loss.append(vl)
        if vl < best[0]:
            best = (vl, model.state_dict())
            log.best_epoch = epoch
    if best[1] is not None:
        model.load_state_dict(best[1])
    log.seconds = time.monotonic() - t0
    return log


def train_diffusion(episodes, codec: TactileCodec,
                    config: DiffusionConfig = DiffusionConfig(),
                    epochs: int = 30, batch_size: int = 32, lr: float = 1e-4,
                    ) -> tuple[TrajectoryDiffusion, DiffusionTrainLog]:
    """Fit the generator on episode windows with an episode-level 1:1 split."""
    t0 = time.monotonic()
    if len(episodes) < 2:
        raise ValueError("need at least 2 episodes to hold out a validation set")
    if codec.config.latent_dim != config.latent_dim:
        raise ValueError(
            f"codec latent dim {codec.config.latent_dim} != config "
            f"latent_dim {config.latent_dim}")

    tr_idx, va_idx = split_episodes(len(episodes), config.seed)
    tr_win = coupled_windows([episodes[i] for i in tr_idx], codec,
                             config.horizon, config.obs_horizon)
    va_win = coupled_windows([episodes[i] for i in va_idx], codec,
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

    log = DiffusionTrainLog(n_train_episodes=len(tr_idx),
                            n_val_episodes=len(va_idx))
    fit_diffusion(model, tr_win, va_win, epochs, batch_size, lr, log)
    log.seconds = time.monotonic() - t0
    return model, log
