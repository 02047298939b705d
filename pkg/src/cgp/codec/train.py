"""Codec training: episode-atomic 1:1 split, mini-batches, best-val restore."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data import Episode
from ..nn import Adam, Tensor, exp
from .model import CodecConfig, TactileCodec, vae_loss

TACTILE_PERCENTILE = 99.0
MIN_SCALE = 1e-8


def tactile_force_scale(frames: np.ndarray) -> np.ndarray:
    """Per-channel 99th-percentile force magnitude; flat channels get unit scale."""
    mags = np.abs(frames.reshape(-1, frames.shape[-1]))
    scale = np.percentile(mags, TACTILE_PERCENTILE, axis=0)
    return np.where(scale < MIN_SCALE, 1.0, scale)


@dataclass
class CodecTrainLog:
    train_recon: list[float] = field(default_factory=list)
    train_kl: list[float] = field(default_factory=list)
    val_recon: list[float] = field(default_factory=list)
    val_kl: list[float] = field(default_factory=list)
    best_epoch: int = -1
    n_train_episodes: int = 0
    n_val_episodes: int = 0


def _split_episodes(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    # 1:1 episode-atomic split; both halves stay non-empty
    perm = np.random.default_rng([seed, 577]).permutation(n)
    n_train = min(n - 1, max(1, round(0.5 * n)))
    return perm[:n_train], perm[n_train:]


def _stack_frames(episodes: list[Episode], ids: np.ndarray) -> np.ndarray:
    return np.concatenate([episodes[i].tactile for i in ids], axis=0).astype(np.float64)


def _epoch_eval(codec: TactileCodec, x: np.ndarray) -> tuple[float, float]:
    """Deterministic recon/kl on normalized frames, decoding the posterior mean."""
    mean_t, lv_t = codec.encode_graph(Tensor(x))
    u_hat = codec.decode_graph(mean_t)
    _, recon, kl = vae_loss(x, u_hat.data, mean_t.data, lv_t.data, 0.0)
    return recon, kl


def train_codec(episodes: list[Episode], config: CodecConfig,
                epochs: int = 40, batch_size: int = 64, lr: float = 1e-3,
                ) -> tuple[TactileCodec, CodecTrainLog]:
    """Fit a codec on the episodes' tactile frames; returns best-val weights."""
    if len(episodes) < 2:
        raise ValueError(f"need at least 2 episodes to split, got {len(episodes)}")
    train_ids, val_ids = _split_episodes(len(episodes), config.seed)

    raw_train = _stack_frames(episodes, train_ids)
    raw_val = _stack_frames(episodes, val_ids)
    scale = tactile_force_scale(raw_train)
    codec = TactileCodec(config, tactile_scale=scale)
    # normalized, channel-first, float32: the layout every graph call expects
    x_train = np.swapaxes(raw_train / scale, -1, -2).astype(np.float32)
    x_val = np.swapaxes(raw_val / scale, -1, -2).astype(np.float32)

    rng = np.random.default_rng([config.seed, 9041])
    opt = Adam(codec.parameters(), lr=lr)
    log = CodecTrainLog(n_train_episodes=len(train_ids), n_val_episodes=len(val_ids))
    best = None
    best_score = np.inf

    for epoch in range(epochs):
        order = rng.permutation(len(x_train))
        recon_sum = kl_sum = 0.0
        for lo in range(0, len(order), batch_size):
            batch = x_train[order[lo:lo + batch_size]]
            xb = Tensor(batch)
            mean_t, lv_t = codec.encode_graph(xb)
            eps = rng.standard_normal(mean_t.shape).astype(np.float32)
            h = mean_t + exp(lv_t * 0.5) * Tensor(eps)
            total, recon, kl = vae_loss(xb, codec.decode_graph(h),
                                        mean_t, lv_t, config.kl_weight)
            opt.zero_grad()
            total.backward()
            opt.step()
            recon_sum += float(recon.data) * len(batch)
            kl_sum += float(kl.data) * len(batch)
        log.train_recon.append(recon_sum / len(x_train))
        log.train_kl.append(kl_sum / len(x_train))

        val_recon, val_kl = _epoch_eval(codec, x_val)
        log.val_recon.append(val_recon)
        log.val_kl.append(val_kl)
        score = val_recon + config.kl_weight * val_kl
        if score < best_score:
            best_score = score
            best = codec.state_dict()
            log.best_epoch = epoch

    codec.load_state_dict(best)
    return codec, log
