"""FiLM-conditioned temporal U-Net that predicts injected noise.

The net runs over (batch, dims, time) arrays with two stride-2 stages, so the
time axis must be divisible by 4. Conditioning (step embedding plus observation
features) modulates every residual block through per-channel scale and shift.
"""
from __future__ import annotations

import numpy as np

from ..nn import (
    MLP,
    Conv1d,
    ConvTranspose1d,
    GroupNorm,
    Linear,
    Module,
    Tensor,
    concat,
    film_modulate,
    silu,
)

_NORM_GROUPS = 8


def sinusoidal_embedding(j, dim: int) -> np.ndarray:
    """Transformer-style sin/cos features of the diffusion step, shape (B, dim)."""
    if dim < 2 or dim % 2:
        raise ValueError("step embedding dim must be even and >= 2")
    j = np.atleast_1d(np.asarray(j, dtype=np.float64))
    half = dim // 2
    freq = np.exp(-np.log(10_000.0) * np.arange(half) / max(half - 1, 1))
    ang = j[:, None] * freq[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


class FiLMResBlock(Module):
    """conv-norm-silu twice, with conditioning applied between the two stacks."""

    def __init__(self, c_in: int, c_out: int, cond_dim: int, rng: np.random.Generator):
        if c_out % _NORM_GROUPS:
            raise ValueError(f"block width {c_out} not divisible by {_NORM_GROUPS}")
        self.c_out = c_out
        self.conv1 = Conv1d(c_in, c_out, 3, rng, pad=1)
        self.norm1 = GroupNorm(_NORM_GROUPS, c_out)
        self.conv2 = Conv1d(c_out, c_out, 3, rng, pad=1)
        self.norm2 = GroupNorm(_NORM_GROUPS, c_out)
        self.film_proj = Linear(cond_dim, 2 * c_out, rng)
        self.skip = Conv1d(c_in, c_out, 1, rng) if c_in != c_out else None

    def __call__(self, x: Tensor, cond: Tensor) -> Tensor:
        h = silu(self.norm1(self.conv1(x)))
        gb = self.film_proj(cond)
        # scale starts near identity so an untrained block is close to plain conv
        h = film_modulate(h, gb[:, :self.c_out] + 1.0, gb[:, self.c_out:])
        h = silu(self.norm2(self.conv2(h)))
        return h + (x if self.skip is None else self.skip(x))


class TemporalUNet(Module):
    """Three-level encoder/decoder over the time axis with skip connections."""

    def __init__(self, data_dim: int, cond_dim: int, rng: np.random.Generator,
                 widths: tuple = (64, 128, 256), emb_dim: int = 128,
                 step_dim: int = 64):
        if len(widths) != 3:
            raise ValueError("the U-Net uses exactly 3 resolution levels")
        w1, w2, w3 = widths
        self.data_dim = data_dim
        self.cond_dim = cond_dim
        self.step_dim = step_dim
        self.cond_mlp = MLP([step_dim + cond_dim, emb_dim, emb_dim], rng,
                            activation="silu")
        self.enc1 = FiLMResBlock(data_dim, w1, emb_dim, rng)
        self.down1 = Conv1d(w1, w2, 3, rng, stride=2, pad=1)
        self.enc2 = FiLMResBlock(w2, w2, emb_dim, rng)
        self.down2 = Conv1d(w2, w3, 3, rng, stride=2, pad=1)
        self.mid = FiLMResBlock(w3, w3, emb_dim, rng)
        self.up2 = ConvTranspose1d(w3, w2, 4, rng, stride=2, pad=1)
        self.dec2 = FiLMResBlock(2 * w2, w2, emb_dim, rng)
        self.up1 = ConvTranspose1d(w2, w1, 4, rng, stride=2, pad=1)
        self.dec1 = FiLMResBlock(2 * w1, w1, emb_dim, rng)
        self.out_norm = GroupNorm(_NORM_GROUPS, w1)
        self.out_conv = Conv1d(w1, data_dim, 3, rng, pad=1)
        # zero head: the untrained net predicts exactly zero noise
        self.out_conv.w.data[:] = 0.0

    def __call__(self, y_j: Tensor, j, cond: Tensor) -> Tensor:
        """y_j: (B, data_dim, T); j: step(s) in {1..J}; cond: (B, cond_dim)."""
        b, d, t = y_j.shape
        if d != self.data_dim:
            raise ValueError(f"expected {self.data_dim} data dims, got {d}")
        if t % 4:
            raise ValueError(f"time axis {t} must be divisible by 4")
        if cond.shape != (b, self.cond_dim):
            raise ValueError(f"cond shape {cond.shape} != ({b}, {self.cond_dim})")
        emb = sinusoidal_embedding(j, self.step_dim).astype(np.float32)
        if emb.shape[0] == 1 and b > 1:
            emb = np.repeat(emb, b, axis=0)
        if emb.shape[0] != b:
            raise ValueError("need one diffusion step per batch item")
        e = self.cond_mlp(concat([Tensor(emb), cond], axis=1))
        h1 = self.enc1(y_j, e)
        h2 = self.enc2(self.down1(h1), e)
        m = self.mid(self.down2(h2), e)
        d2 = self.dec2(concat([self.up2(m), h2], axis=1), e)
        d1 = self.dec1(concat([self.up1(d2), h1], axis=1), e)
        return self.out_conv(silu(self.out_norm(d1)))
