"""KL-regularized variational autoencoder for tactile frames.

The encoder convolves along the station axis with the per-station force
components as input channels, compressing a frame into an M-dimensional
latent. Raw forces are divided by a per-channel scale (stored with the
codec) before encoding, and reconstructions are mapped back to Newtons,
so the network always sees O(1) inputs regardless of task force levels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import (
    Conv1d,
    ConvTranspose1d,
    GroupNorm,
    Linear,
    Module,
    Tensor,
    exp,
    mse,
    relu,
    silu,
)

LOG_VAR_LIMIT = 10.0
ARCHS = ("resnet1d", "mlp")


@dataclass(frozen=True)
class CodecConfig:
    """Architecture and objective knobs for one codec.

    `widths` means conv channels per stage for resnet1d (the station axis
    halves once per stage after the first) and hidden layer sizes for mlp.
    """
    latent_dim: int = 32
    kl_weight: float = 1e-5
    encoder_arch: str = "resnet1d"
    widths: tuple[int, ...] = (12, 24, 32)
    n_units: int = 80
    n_channels: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.latent_dim <= 0:
            raise ValueError(f"latent_dim must be positive, got {self.latent_dim}")
        if self.kl_weight < 0:
            raise ValueError(f"kl_weight must be non-negative, got {self.kl_weight}")
        if self.encoder_arch not in ARCHS:
            raise ValueError(f"unknown encoder_arch {self.encoder_arch!r}, expected one of {ARCHS}")
        if not self.widths:
            raise ValueError("widths must be non-empty")
        if self.encoder_arch == "resnet1d":
            down = 2 ** (len(self.widths) - 1)
            if self.n_units % down:
                raise ValueError(
                    f"n_units {self.n_units} not divisible by downsampling factor {down}")
            for w in self.widths:
                if w % 4:
                    raise ValueError(f"resnet1d widths must be multiples of 4, got {w}")

    def to_dict(self) -> dict:
        return {
            "latent_dim": self.latent_dim,
            "kl_weight": self.kl_weight,
            "encoder_arch": self.encoder_arch,
            "widths": list(self.widths),
            "n_units": self.n_units,
            "n_channels": self.n_channels,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CodecConfig":
        d = dict(d)
        d["widths"] = tuple(d["widths"])
        return cls(**d)


@dataclass(frozen=True)
class TactileLatent:
    """One reparameterized draw with the noise that produced it."""
    mean: np.ndarray
    log_variance: np.ndarray
    sample: np.ndarray
    eps: np.ndarray


def clamp_log_variance(lv: np.ndarray) -> np.ndarray:
    return np.clip(lv, -LOG_VAR_LIMIT, LOG_VAR_LIMIT)


def sample_latent(mean: np.ndarray, log_variance: np.ndarray, seed: int) -> TactileLatent:
    """Draw h = mean + exp(lv/2) * eps with a seeded generator."""
    mean = np.asarray(mean, dtype=np.float64)
    lv = clamp_log_variance(np.asarray(log_variance, dtype=np.float64))
    if mean.shape != lv.shape:
        raise ValueError(f"mean shape {mean.shape} != log_variance shape {lv.shape}")
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(log_variance))):
        raise ValueError("mean and log_variance must be finite")
    eps = np.random.default_rng(seed).standard_normal(mean.shape)
    return TactileLatent(mean=mean, log_variance=lv,
                         sample=mean + np.exp(0.5 * lv) * eps, eps=eps)


def _clip_t(x: Tensor, lo: float, hi: float) -> Tensor:
    # exact clamp from two relus; gradient is 1 inside, 0 outside
    y = x - relu(x - hi)
    return y + relu(lo - y)


class ResBlock1d(Module):
    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator, stride: int = 1):
        self.conv1 = Conv1d(c_in, c_out, 3, rng, stride=stride, pad=1)
        self.norm1 = GroupNorm(4, c_out)
        self.conv2 = Conv1d(c_out, c_out, 3, rng, pad=1)
        self.norm2 = GroupNorm(4, c_out)
        self.skip = (Conv1d(c_in, c_out, 1, rng, stride=stride)
                     if stride != 1 or c_in != c_out else None)

    def __call__(self, x: Tensor) -> Tensor:
        h = silu(self.norm1(self.conv1(x)))
        h = self.norm2(self.conv2(h))
        s = self.skip(x) if self.skip is not None else x
        return silu(h + s)


class _ResNetEncoder(Module):
    def __init__(self, cfg: CodecConfig, rng: np.random.Generator):
        ws = cfg.widths
        self.stem = Conv1d(cfg.n_channels, ws[0], 5, rng, pad=2)
        self.blocks = [ResBlock1d(ws[i], ws[i + 1], rng, stride=2)
                       for i in range(len(ws) - 1)]
        flat = ws[-1] * (cfg.n_units >> (len(ws) - 1))
        self.head_mean = Linear(flat, cfg.latent_dim, rng)
        self.head_logvar = Linear(flat, cfg.latent_dim, rng)

    def __call__(self, x: Tensor) -> tuple[Tensor, Tensor]:
        h = silu(self.stem(x))
        for block in self.blocks:
            h = block(h)
        h = h.reshape(h.shape[0], -1)
        return self.head_mean(h), _clip_t(self.head_logvar(h), -LOG_VAR_LIMIT, LOG_VAR_LIMIT)


class _ResNetDecoder(Module):
    def __init__(self, cfg: CodecConfig, rng: np.random.Generator):
        ws = cfg.widths
        self.l0 = cfg.n_units >> (len(ws) - 1)
        self.c0 = ws[-1]
        self.expand = Linear(cfg.latent_dim, self.c0 * self.l0, rng)
        # k=4, stride=2, pad=1 doubles the station axis exactly
        self.ups = [ConvTranspose1d(ws[i], ws[i - 1], 4, rng, stride=2, pad=1)
                    for i in range(len(ws) - 1, 0, -1)]
        self.norms = [GroupNorm(4, ws[i - 1]) for i in range(len(ws) - 1, 0, -1)]
        self.refine = ResBlock1d(ws[0], ws[0], rng)
        self.final = Conv1d(ws[0], cfg.n_channels, 3, rng, pad=1)

    def __call__(self, h: Tensor) -> Tensor:
        y = silu(self.expand(h)).reshape(h.shape[0], self.c0, self.l0)
        for up, norm in zip(self.ups, self.norms):
            y = silu(norm(up(y)))
        return self.final(self.refine(y))


class _MlpEncoder(Module):
    def __init__(self, cfg: CodecConfig, rng: np.random.Generator):
        dims = [cfg.n_units * cfg.n_channels, *cfg.widths]
        self.layers = [Linear(dims[i], dims[i + 1], rng) for i in range(len(dims) - 1)]
        self.head_mean = Linear(cfg.widths[-1], cfg.latent_dim, rng)
        self.head_logvar = Linear(cfg.widths[-1], cfg.latent_dim, rng)

    def __call__(self, x: Tensor) -> tuple[Tensor, Tensor]:
        h = x.reshape(x.shape[0], -1)
        for layer in self.layers:
            h = silu(layer(h))
        return self.head_mean(h), _clip_t(self.head_logvar(h), -LOG_VAR_LIMIT, LOG_VAR_LIMIT)


class _MlpDecoder(Module):
    def __init__(self, cfg: CodecConfig, rng: np.random.Generator):
        self.n_channels = cfg.n_channels
        self.n_units = cfg.n_units
        dims = [cfg.latent_dim, *reversed(cfg.widths), cfg.n_units * cfg.n_channels]
        self.layers = [Linear(dims[i], dims[i + 1], rng) for i in range(len(dims) - 1)]

    def __call__(self, h: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            h = layer(h)
            if i < len(self.layers) - 1:
                h = silu(h)
        return h.reshape(h.shape[0], self.n_channels, self.n_units)


class TactileCodec(Module):
    """Encoder/decoder pair plus the per-channel force scale it was fit to."""

    def __init__(self, config: CodecConfig, tactile_scale: np.ndarray | None = None):
        rng = np.random.default_rng([config.seed, 311])
        self.config = config
        if config.encoder_arch == "resnet1d":
            self.encoder = _ResNetEncoder(config, rng)
            self.decoder = _ResNetDecoder(config, rng)
        else:
            self.encoder = _MlpEncoder(config, rng)
            self.decoder = _MlpDecoder(config, rng)
        scale = np.ones(config.n_channels) if tactile_scale is None else tactile_scale
        self.tactile_scale = np.asarray(scale, dtype=np.float64)
        if self.tactile_scale.shape != (config.n_channels,):
            raise ValueError(f"tactile_scale must have shape ({config.n_channels},)")

    # graph paths used by the trainer; operate on normalized (B, d, N) tensors

    def encode_graph(self, x: Tensor) -> tuple[Tensor, Tensor]:
        return self.encoder(x)

    def decode_graph(self, h: Tensor) -> Tensor:
        return self.decoder(h)

    def _check_frame(self, u: np.ndarray) -> np.ndarray:
        cfg = self.config
        u = np.asarray(u, dtype=np.float64)
        if u.shape[-2:] != (cfg.n_units, cfg.n_channels) or u.ndim not in (2, 3):
            raise ValueError(
                f"tactile frame shape {u.shape} incompatible with "
                f"({cfg.n_units}, {cfg.n_channels})")
        return u

    def normalize(self, u: np.ndarray) -> np.ndarray:
        return self._check_frame(u) / self.tactile_scale

    def encode(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Deterministic posterior parameters (mean, log_variance) for a frame."""
        u = self.normalize(u)
        single = u.ndim == 2
        x = u[None] if single else u
        mean, lv = self.encoder(Tensor(np.swapaxes(x, -1, -2).astype(np.float32)))
        m, v = mean.data.astype(np.float64), lv.data.astype(np.float64)
        return (m[0], v[0]) if single else (m, v)

    def decode(self, h: np.ndarray) -> np.ndarray:
        """Reconstruct a tactile frame in Newtons from a latent."""
        h = np.asarray(h, dtype=np.float64)
        if h.shape[-1] != self.config.latent_dim or h.ndim not in (1, 2):
            raise ValueError(f"latent shape {h.shape} incompatible with ({self.config.latent_dim},)")
        single = h.ndim == 1
        z = h[None] if single else h
        y = self.decoder(Tensor(z.astype(np.float32)))
        u = np.swapaxes(y.data.astype(np.float64), -1, -2) * self.tactile_scale
        return u[0] if single else u

    def reconstruct(self, u: np.ndarray) -> np.ndarray:
        mean, _ = self.encode(u)
        return self.decode(mean)


def vae_loss(u, u_hat, mean, log_variance, beta: float):
    """(total, recon, kl): MSE over all entries plus beta-weighted KL.

    kl = 1/2 * mean over batch of sum_m (mu^2 + sigma^2 - log sigma^2 - 1).
    Tensor inputs keep the graph (for training); plain arrays return floats.
    """
    graph = any(isinstance(v, Tensor) for v in (u, u_hat, mean, log_variance))
    as_t = lambda v: v if isinstance(v, Tensor) else Tensor(np.asarray(v, dtype=np.float64))
    u_t, uh_t, m_t, lv_t = as_t(u), as_t(u_hat), as_t(mean), as_t(log_variance)
    recon = mse(uh_t, u_t)
    per = m_t * m_t + exp(lv_t) - lv_t - 1.0
    # sum over latent dims, average over whatever batch shape remains
    kl = per.sum(axis=-1).mean() * 0.5
    total = recon + kl * beta
    if graph:
        return total, recon, kl
    return float(total.data), float(recon.data), float(kl.data)
