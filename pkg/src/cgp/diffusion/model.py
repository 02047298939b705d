"""Conditional trajectory generator: config, model bundle, DDIM sampling.

The bundle owns a condition encoder, a temporal U-Net and a fixed noise
schedule. Sampling is deterministic given (condition, seed): the seed fixes
only the initial Gaussian draw and every DDIM update runs with eta = 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import Module, Tensor
from .condition import ConditionEncoder
from .schedule import SCHEDULE_KINDS, NoiseSchedule, make_schedule
from .trajectory import TrajectoryNormalizer, split_trajectory
from .unet import TemporalUNet

# clean-trajectory estimates are clamped to the normalized data range; without
# this the x0 extraction at the high-noise end (alpha ~ 1e-3) amplifies any
# residual prediction bias by orders of magnitude
X0_CLIP = 1.0


@dataclass(frozen=True)
class DiffusionConfig:
    horizon: int = 16           # prediction steps T
    obs_horizon: int = 2        # conditioning steps T_o
    state_dim: int = 13
    latent_dim: int = 32        # tactile latent width M
    steps: int = 100            # training diffusion steps J
    schedule_kind: str = "squared_cosine"
    widths: tuple = (64, 128, 256)
    emb_dim: int = 128
    step_dim: int = 64
    vision_dim: int = 32
    tactile_dim: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.horizon < 4 or self.horizon % 4:
            raise ValueError("horizon must be a positive multiple of 4")
        if self.obs_horizon < 1:
            raise ValueError("obs_horizon must be >= 1")
        if self.state_dim < 4:
            raise ValueError("state needs palm position plus angle encoding")
        if self.latent_dim < 0:
            raise ValueError("latent_dim must be >= 0")
        if self.steps < 2:
            raise ValueError("steps must be >= 2")
        if self.schedule_kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.schedule_kind!r}")
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) != 3 or any(w < 8 or w % 8 for w in self.widths):
            raise ValueError("widths must be 3 multiples of 8")
        if self.emb_dim < 1 or self.vision_dim < 1 or self.tactile_dim < 1:
            raise ValueError("feature dims must be >= 1")
        if self.step_dim < 2 or self.step_dim % 2:
            raise ValueError("step_dim must be even and >= 2")

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "obs_horizon": self.obs_horizon,
                "state_dim": self.state_dim, "latent_dim": self.latent_dim,
                "steps": self.steps, "schedule_kind": self.schedule_kind,
                "widths": list(self.widths), "emb_dim": self.emb_dim,
                "step_dim": self.step_dim, "vision_dim": self.vision_dim,
                "tactile_dim": self.tactile_dim, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "DiffusionConfig":
        d = dict(d)
        d["widths"] = tuple(d["widths"])
        return cls(**d)


def ddim_steps(J: int, n_steps: int) -> np.ndarray:
    """Evenly spaced descending sub-schedule over {1..J}, ending at 1."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if n_steps > J:
        raise ValueError(f"n_steps {n_steps} exceeds the {J} training steps")
    idx = np.unique(np.round(np.linspace(J, 1, n_steps)).astype(int))
    return idx[::-1]


def ddim_core(unet: TemporalUNet, schedule: NoiseSchedule, cond: np.ndarray,
              horizon: int, data_dim: int, n_steps: int = 8, seed: int = 0,
              x0_clip: float = X0_CLIP) -> np.ndarray:
    """Deterministic DDIM trajectory sample, (horizon, data_dim), normalized."""
    idx = ddim_steps(schedule.J, n_steps)
    x = np.random.default_rng(seed).standard_normal((horizon, data_dim))
    cond_t = Tensor(np.asarray(cond, dtype=np.float32).reshape(1, -1))
    for k, j in enumerate(idx):
        y_t = Tensor(np.ascontiguousarray(x.T)[None].astype(np.float32))
        eps = unet(y_t, int(j), cond_t).data[0].T.astype(np.float64)
        a, s = schedule.alpha[j - 1], schedule.sigma[j - 1]
        x0 = np.clip((x - s * eps) / a, -x0_clip, x0_clip)
        if k + 1 < len(idx):
            jn = idx[k + 1]
            x = schedule.alpha[jn - 1] * x0 + schedule.sigma[jn - 1] * eps
        else:
            x = x0
    return x


class TrajectoryDiffusion(Module):
    """Denoiser bundle over coupled [state | tactile latent] futures."""

    def __init__(self, config: DiffusionConfig, image_hw: tuple = (32, 32),
                 n_units: int = 80, n_channels: int = 2):
        rng = np.random.default_rng([config.seed, 977])
        self.config = config
        self.image_hw = (int(image_hw[0]), int(image_hw[1]))
        self.n_units = int(n_units)
        self.n_channels = int(n_channels)
        self.cond_encoder = ConditionEncoder(
            config.state_dim, self.n_units, self.n_channels, self.image_hw,
            rng, config.vision_dim, config.tactile_dim, config.obs_horizon)
        self.data_dim = config.state_dim + config.latent_dim
        self.unet = TemporalUNet(self.data_dim, self.cond_encoder.feature_dim,
                                 rng, config.widths, config.emb_dim,
                                 config.step_dim)
        self.schedule = make_schedule(config.steps, config.schedule_kind)
        self.normalizer: TrajectoryNormalizer | None = None
        self.tactile_scale = np.ones(self.n_channels)

    @property
    def trained(self) -> bool:
        return self.normalizer is not None

    def attach_stats(self, normalizer: TrajectoryNormalizer,
                     tactile_scale: np.ndarray) -> None:
        if normalizer.dim != self.data_dim:
            raise ValueError(
                f"normalizer covers {normalizer.dim} dims, model has {self.data_dim}")
        scale = np.asarray(tactile_scale, dtype=np.float64)
        if scale.shape != (self.n_channels,):
            raise ValueError(f"tactile_scale must have shape ({self.n_channels},)")
        self.normalizer = normalizer
        self.tactile_scale = scale

    def _require_trained(self) -> None:
        if not self.trained:
            raise RuntimeError(
                "diffusion model is untrained: fit it before using it")

    # ---- conditioning --------------------------------------------------------

    def history_tensors(self, images: np.ndarray, tactile: np.ndarray,
                        states: np.ndarray) -> tuple[Tensor, Tensor, Tensor, bool]:
        """Validate and normalize one history (T_o, ...) or a batch (B, T_o, ...)."""
        self._require_trained()
        t_o = self.config.obs_horizon
        images = np.asarray(images, dtype=np.float64)
        tactile = np.asarray(tactile, dtype=np.float64)
        states = np.asarray(states, dtype=np.float64)
        single = states.ndim == 2
        if single:
            images, tactile, states = images[None], tactile[None], states[None]
        b = states.shape[0]
        if images.shape != (b, t_o) + self.image_hw:
            raise ValueError(
                f"history images must be ({t_o}, {self.image_hw[0]}, "
                f"{self.image_hw[1]}) per item")
        if tactile.shape != (b, t_o, self.n_units, self.n_channels):
            raise ValueError(
                f"history tactile must be ({t_o}, {self.n_units}, {self.n_channels})")
        if states.shape != (b, t_o, self.config.state_dim):
            raise ValueError(
                f"history states must be ({t_o}, {self.config.state_dim})")
        sd = self.config.state_dim
        z = (states - self.normalizer.center[:sd]) / self.normalizer.half[:sd]
        u = np.swapaxes(tactile / self.tactile_scale, -1, -2)
        return (Tensor(images.astype(np.float32)),
                Tensor(np.ascontiguousarray(u).astype(np.float32)),
                Tensor(z.astype(np.float32)), single)

    def encode_condition(self, images: np.ndarray, tactile: np.ndarray,
                         states: np.ndarray) -> np.ndarray:
        """Feature vector for one observation history (or a batch of them)."""
        self._require_trained()
        img_t, tac_t, st_t, single = self.history_tensors(images, tactile, states)
        out = self.cond_encoder(img_t, tac_t, st_t).data.astype(np.float64)
        return out[0] if single else out

    # ---- sampling ------------------------------------------------------------

    def ddim_sample(self, cond: np.ndarray, n_steps: int = 8,
                    seed: int = 0) -> np.ndarray:
        """Normalized coupled trajectory (T, state_dim + M) for one condition."""
        self._require_trained()
        cond = np.asarray(cond, dtype=np.float64)
        if cond.shape != (self.cond_encoder.feature_dim,):
            raise ValueError(
                f"cond shape {cond.shape} != ({self.cond_encoder.feature_dim},)")
        return ddim_core(self.unet, self.schedule, cond, self.config.horizon,
                         self.data_dim, n_steps=n_steps, seed=seed)

    def split_trajectory(self, y_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """De-normalized (states, latents) slices of a sampled trajectory."""
        self._require_trained()
        return split_trajectory(y_hat, self.normalizer, self.config.state_dim,
                                self.config.latent_dim)
