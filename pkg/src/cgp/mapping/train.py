"""Training loop for the state/tactile-to-target map."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..codec.model import TactileCodec
from ..codec.train import tactile_force_scale
from ..nn import Adam, Tensor, mse
from .model import (
    MIN_HALF_RANGE,
    MIN_RESIDUAL_SCALE,
    MappingConfig,
    MappingModel,
    MappingStats,
)


@dataclass
class MappingTrainLog:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = -1
    n_train_episodes: int = 0
    n_val_episodes: int = 0
    joint_mae: float = float("nan")     # rad, validation, best checkpoint
    palm_mae: float = float("nan")      # m
    angle_mae: float = float("nan")     # rad
    seconds: float = 0.0


def _split_episodes(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    # episode is the atomic unit: all frames of one episode land on one side
    rng = np.random.default_rng([seed, 733])
    order = rng.permutation(n)
    n_train = min(n - 1, max(1, int(round(0.5 * n))))
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def _flatten(episodes, idx) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xs = np.concatenate([episodes[i].states for i in idx]).astype(np.float64)
    us = np.concatenate([episodes[i].tactile for i in idx]).astype(np.float64)
    ys = np.concatenate([episodes[i].targets for i in idx]).astype(np.float64)
    return xs, us, ys


def _angle_abs_diff(enc_a: np.ndarray, enc_b: np.ndarray) -> np.ndarray:
    ta = np.arctan2(enc_a[..., 1], enc_a[..., 0])
    tb = np.arctan2(enc_b[..., 1], enc_b[..., 0])
    d = ta - tb
    return np.abs(np.arctan2(np.sin(d), np.cos(d)))


def mapping_metrics(a_hat: np.ndarray, a: np.ndarray) -> dict:
    """Validation errors split by what the dims mean physically."""
    return {
        "joint_mae": float(np.abs(a_hat[..., 4:] - a[..., 4:]).mean()),
        "palm_mae": float(np.abs(a_hat[..., :2] - a[..., :2]).mean()),
        "angle_mae": float(_angle_abs_diff(a_hat[..., 2:4], a[..., 2:4]).mean()),
    }


def _fit_stats(config: MappingConfig, x: np.ndarray, u: np.ndarray,
               y: np.ndarray, latents: np.ndarray | None) -> MappingStats:
    lo, hi = x.min(axis=0), x.max(axis=0)
    state_center = 0.5 * (lo + hi)
    state_half = np.maximum(0.5 * (hi - lo), MIN_HALF_RANGE)
    if config.mode == "residual":
        # zero center keeps the zero-initialized head an exact identity
        target_center = np.zeros(y.shape[1])
        target_scale = np.maximum(y.std(axis=0), MIN_RESIDUAL_SCALE)
    else:
        ylo, yhi = y.min(axis=0), y.max(axis=0)
        target_center = 0.5 * (ylo + yhi)
        target_scale = np.maximum(0.5 * (yhi - ylo), MIN_HALF_RANGE)
    lat_c = lat_s = None
    if latents is not None:
        lat_c = latents.mean(axis=0)
        lat_s = np.maximum(latents.std(axis=0), 1e-6)
    return MappingStats(state_center=state_center, state_half=state_half,
                        tactile_scale=tactile_force_scale(u),
                        target_center=target_center, target_scale=target_scale,
                        latent_center=lat_c, latent_scale=lat_s)


def _batch_loss(model: MappingModel, xb: np.ndarray, fb: np.ndarray | None,
                yb: np.ndarray) -> Tensor:
    state_t = None
    if model.config.inputs != "tactile_only":
        state_t = Tensor(xb.astype(np.float32))
    feat_t = None
    if model.config.inputs != "state_only":
        if model.config.latent_path == "decode_reencode":
            feat_t = model.tactile_feature_graph(Tensor(fb))
        else:
            feat_t = Tensor(fb.astype(np.float32))
    out = model.head_graph(state_t, feat_t)
    return mse(out, Tensor(yb.astype(np.float32)))


def train_mapping(episodes, config: MappingConfig,
                  codec: TactileCodec | None = None,
                  epochs: int = 30, batch_size: int = 128, lr: float = 2e-3,
                  joint_limit_lo: np.ndarray | None = None,
                  joint_limit_hi: np.ndarray | None = None,
                  ) -> tuple[MappingModel, MappingTrainLog]:
    """Fit on logged triplets with an episode-level 1:1 split."""
    t0 = time.monotonic()
    if len(episodes) < 2:
        raise ValueError("need at least 2 episodes to hold out a validation set")
    if config.latent_path == "direct_latent" and config.inputs != "state_only" \
            and codec is None:
        raise ValueError("direct_latent training consumes codec latents; "
                         "pass the codec")

    tr_idx, va_idx = _split_episodes(len(episodes), config.seed)
    x_tr, u_tr, a_tr = _flatten(episodes, tr_idx)
    x_va, u_va, a_va = _flatten(episodes, va_idx)
    y_tr = a_tr - x_tr if config.mode == "residual" else a_tr
    y_va = a_va - x_va if config.mode == "residual" else a_va

    uses_tactile = config.inputs != "state_only"
    direct = uses_tactile and config.latent_path == "direct_latent"
    h_tr = h_va = None
    if direct:
        h_tr = codec.encode(u_tr)[0]
        h_va = codec.encode(u_va)[0]

    stats = _fit_stats(config, x_tr, u_tr, y_tr, h_tr)
    model = MappingModel(config, state_dim=x_tr.shape[1],
                         n_units=u_tr.shape[1], n_channels=u_tr.shape[2],
                         joint_limit_lo=joint_limit_lo,
                         joint_limit_hi=joint_limit_hi)
    model.attach_stats(stats)
    if direct:
        model.attach_codec(codec)

    # normalized views used throughout training
    zx_tr = model._norm_state(x_tr)
    zx_va = model._norm_state(x_va)
    zy_tr = (y_tr - stats.target_center) / stats.target_scale
    zy_va = (y_va - stats.target_center) / stats.target_scale
    if uses_tactile:
        if direct:
            f_tr, f_va = model._norm_latent(h_tr), model._norm_latent(h_va)
        else:
            f_tr, f_va = model._norm_tactile(u_tr), model._norm_tactile(u_va)
    else:
        f_tr = f_va = None

    def val_loss() -> float:
        total, n = 0.0, 0
        for s in range(0, len(zx_va), 512):
            sl = slice(s, s + 512)
            fb = None if f_va is None else f_va[sl]
            k = len(zx_va[sl])
            total += float(_batch_loss(model, zx_va[sl], fb, zy_va[sl]).data) * k
            n += k
        return total / n

    params = model.parameters()
    opt = Adam(params, lr=lr)
    rng = np.random.default_rng([config.seed, 5077])
    log = MappingTrainLog(n_train_episodes=len(tr_idx), n_val_episodes=len(va_idx))
    best = (np.inf, None)
    n_tr = len(zx_tr)
    for epoch in range(epochs):
        order = rng.permutation(n_tr)
        running, seen = 0.0, 0
        for s in range(0, n_tr, batch_size):
            take = order[s:s + batch_size]
            fb = None if f_tr is None else f_tr[take]
            loss = _batch_loss(model, zx_tr[take], fb, zy_tr[take])
            model.zero_grad()
            loss.backward()
            opt.step()
            running += float(loss.data) * len(take)
            seen += len(take)
        vl = val_loss()
        log.train_loss.append(running / seen)
        log.val_loss.append(vl)
        if vl < best[0]:
            best = (vl, model.state_dict())
            log.best_epoch = epoch
    if best[1] is not None:
        model.load_state_dict(best[1])

    # validation errors in raw units at the restored checkpoint
    preds = []
    for s in range(0, len(x_va), 512):
        sl = slice(s, s + 512)
        state_t = None
        if config.inputs != "tactile_only":
            state_t = Tensor(zx_va[sl].astype(np.float32))
        feat_t = None
        if uses_tactile:
            fb = f_va[sl]
            feat_t = (model.tactile_feature_graph(Tensor(fb))
                      if not direct else Tensor(fb.astype(np.float32)))
        out = model.head_graph(state_t, feat_t).data.astype(float)
        preds.append(model._compose(x_va[sl], out))
    m = mapping_metrics(np.concatenate(preds), a_va)
    log.joint_mae, log.palm_mae = m["joint_mae"], m["palm_mae"]
    log.angle_mae = m["angle_mae"]
    log.seconds = time.monotonic() - t0
    return model, log
