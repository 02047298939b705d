"""Learned map from (actual state, tactile) to the controller target.

Under compliant PD control the commanded configuration differs from the
achieved one exactly where contact pushes back, so the map is trained on
logged (state, tactile, target) triplets and asked to recover the target
that would reproduce the observed interaction. Residual mode predicts the
correction on top of the current state; absolute mode predicts the target
outright. The tactile feature either comes from the map's own encoder on
raw frames or, at deployment, straight from a predicted codec latent.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..codec.model import ResBlock1d, TactileCodec
from ..nn import MLP, Conv1d, Linear, Module, Tensor, concat, silu

MODES = ("residual", "absolute")
INPUTS = ("state_tactile", "state_only", "tactile_only")
ENCODERS = ("resnet1d", "mlp")
LATENT_PATHS = ("decode_reencode", "direct_latent")

# keeps degenerate state dims (frozen palm) from amplifying sensor noise
MIN_HALF_RANGE = 1e-3
MIN_RESIDUAL_SCALE = 1e-4


@dataclass(frozen=True)
class MappingConfig:
    mode: str = "residual"
    inputs: str = "state_tactile"
    tactile_encoder: str = "resnet1d"
    latent_path: str = "decode_reencode"
    hidden: tuple = (96, 96)
    encoder_widths: tuple = (12, 24, 32)
    feature_dim: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode {self.mode!r} not in {MODES}")
        if self.inputs not in INPUTS:
            raise ValueError(f"inputs {self.inputs!r} not in {INPUTS}")
        if self.tactile_encoder not in ENCODERS:
            raise ValueError(
                f"tactile_encoder {self.tactile_encoder!r} not in {ENCODERS}")
        if self.latent_path not in LATENT_PATHS:
            raise ValueError(
                f"latent_path {self.latent_path!r} not in {LATENT_PATHS}")
        if not self.hidden or any(w < 1 for w in self.hidden):
            raise ValueError("hidden widths must be positive")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be positive")
        object.__setattr__(self, "hidden", tuple(int(w) for w in self.hidden))
        object.__setattr__(self, "encoder_widths",
                           tuple(int(w) for w in self.encoder_widths))

    def to_dict(self) -> dict:
        return {"mode": self.mode, "inputs": self.inputs,
                "tactile_encoder": self.tactile_encoder,
                "latent_path": self.latent_path,
                "hidden": list(self.hidden),
                "encoder_widths": list(self.encoder_widths),
                "feature_dim": self.feature_dim, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "MappingConfig":
        d = dict(d)
        d["hidden"] = tuple(d["hidden"])
        d["encoder_widths"] = tuple(d["encoder_widths"])
        return cls(**d)


@dataclass(frozen=True)
class MappingSample:
    """One logged grounding triplet: actual state, tactile frame, target."""

    x: np.ndarray
    u: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        x, u, a = (np.asarray(v, dtype=float) for v in (self.x, self.u, self.a))
        if x.ndim != 1 or x.shape != a.shape:
            raise ValueError(f"state {x.shape} and target {a.shape} must be "
                             "matching vectors")
        if u.ndim != 2:
            raise ValueError(f"tactile frame must be (units, channels), got {u.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "a", a)


def episode_samples(episode) -> list[MappingSample]:
    return [MappingSample(x, u, a) for x, u, a in
            zip(episode.states, episode.tactile, episode.targets)]


@dataclass
class MappingStats:
    """Dataset normalization captured on the training split."""

    state_center: np.ndarray
    state_half: np.ndarray
    tactile_scale: np.ndarray       # per channel
    target_center: np.ndarray       # label space: target or residual
    target_scale: np.ndarray
    latent_center: np.ndarray | None = None
    latent_scale: np.ndarray | None = None

    def to_dict(self) -> dict:
        out = {"state_center": self.state_center.tolist(),
               "state_half": self.state_half.tolist(),
               "tactile_scale": self.tactile_scale.tolist(),
               "target_center": self.target_center.tolist(),
               "target_scale": self.target_scale.tolist()}
        if self.latent_center is not None:
            out["latent_center"] = self.latent_center.tolist()
            out["latent_scale"] = self.latent_scale.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "MappingStats":
        lat_c = d.get("latent_center")
        lat_s = d.get("latent_scale")
        return cls(
            state_center=np.asarray(d["state_center"], dtype=float),
            state_half=np.asarray(d["state_half"], dtype=float),
            tactile_scale=np.asarray(d["tactile_scale"], dtype=float),
            target_center=np.asarray(d["target_center"], dtype=float),
            target_scale=np.asarray(d["target_scale"], dtype=float),
            latent_center=None if lat_c is None else np.asarray(lat_c, float),
            latent_scale=None if lat_s is None else np.asarray(lat_s, float),
        )


class _ResNetFeature(Module):
    def __init__(self, n_channels: int, widths: tuple, out_dim: int, n_units: int,
                 rng: np.random.Generator):
        for w in widths:
            if w % 4:
                raise ValueError(f"width {w} not divisible by 4 group-norm groups")
        self.stem = Conv1d(n_channels, widths[0], 5, rng, pad=2)
        self.blocks = [ResBlock1d(widths[i], widths[i + 1], rng, stride=2)
                       for i in range(len(widths) - 1)]
        length = n_units
        for _ in self.blocks:
            length //= 2
        self.head = Linear(widths[-1] * length, out_dim, rng)
        self._flat = widths[-1] * length

    def __call__(self, x: Tensor) -> Tensor:
        h = silu(self.stem(x))
        for blk in self.blocks:
            h = blk(h)
        return self.head(h.reshape((h.shape[0], self._flat)))


class _MlpFeature(Module):
    def __init__(self, n_in: int, widths: tuple, out_dim: int,
                 rng: np.random.Generator):
        self.net = MLP([n_in, *widths, out_dim], rng, activation="silu")
        self._n_in = n_in

    def __call__(self, x: Tensor) -> Tensor:
        return self.net(x.reshape((x.shape[0], self._n_in)))


class MappingModel(Module):
    """Head over state and/or tactile features with mode-aware composition."""

    def __init__(self, config: MappingConfig, state_dim: int,
                 n_units: int, n_channels: int,
                 joint_limit_lo: np.ndarray | None = None,
                 joint_limit_hi: np.ndarray | None = None):
        if state_dim < 5:
            raise ValueError(f"state_dim {state_dim} too small for palm + joints")
        self.config = config
        self.state_dim = state_dim
        self.n_units = n_units
        self.n_channels = n_channels
        n_h = state_dim - 4
        self.joint_limit_lo = (np.full(n_h, -2.4) if joint_limit_lo is None
                               else np.asarray(joint_limit_lo, dtype=float))
        self.joint_limit_hi = (np.full(n_h, 2.4) if joint_limit_hi is None
                               else np.asarray(joint_limit_hi, dtype=float))
        if self.joint_limit_lo.shape != (n_h,) or self.joint_limit_hi.shape != (n_h,):
            raise ValueError("joint limits must match the joint count")

        rng = np.random.default_rng([config.seed, 467])
        uses_tactile = config.inputs != "state_only"
        self.encoder = None
        if uses_tactile and config.latent_path == "decode_reencode":
            if config.tactile_encoder == "resnet1d":
                self.encoder = _ResNetFeature(n_channels, config.encoder_widths,
                                              config.feature_dim, n_units, rng)
            else:
                self.encoder = _MlpFeature(n_units * n_channels,
                                           config.encoder_widths,
                                           config.feature_dim, rng)

        feat_dim = 0
        if uses_tactile:
            feat_dim = (config.feature_dim if config.latent_path == "decode_reencode"
                        else -1)     # direct_latent: fixed once stats are known
        self._feat_dim = feat_dim
        self.head = None             # built lazily for direct_latent
        self._head_rng = rng
        if feat_dim >= 0:
            self._build_head(feat_dim)

        self.stats: MappingStats | None = None
        # a dict hides the codec from the parameter walk, so checkpoints
        # carry only the map's own weights
        self._aux: dict = {"codec": None}

    def _build_head(self, feat_dim: int) -> None:
        n_in = feat_dim
        if self.config.inputs != "tactile_only":
            n_in += self.state_dim
        self.head = MLP([n_in, *self.config.hidden, self.state_dim],
                        self._head_rng, activation="silu",
                        zero_last=self.config.mode == "residual")
        self._feat_dim = feat_dim

    # -- wiring done by the trainer ------------------------------------

    def attach_stats(self, stats: MappingStats) -> None:
        self.stats = stats
        if (self.config.latent_path == "direct_latent" and self.head is None):
            self._build_head(stats.latent_center.shape[0])

    def attach_codec(self, codec: TactileCodec) -> None:
        if self.config.latent_path != "direct_latent":
            raise ValueError("codec is stored on the map only for direct_latent")
        self._aux["codec"] = codec

    @property
    def codec(self) -> TactileCodec | None:
        return self._aux["codec"]

    @property
    def trained(self) -> bool:
        return self.stats is not None and self.head is not None

    # -- features -------------------------------------------------------

    def _norm_state(self, x: np.ndarray) -> np.ndarray:
        return (x - self.stats.state_center) / self.stats.state_half

    def _norm_tactile(self, u: np.ndarray) -> np.ndarray:
        # channel-first (B, C, N) float32 for the conv stack
        z = u / self.stats.tactile_scale
        return np.swapaxes(z, -1, -2).astype(np.float32)

    def _norm_latent(self, h: np.ndarray) -> np.ndarray:
        return (h - self.stats.latent_center) / self.stats.latent_scale

    def tactile_feature_graph(self, u_norm: Tensor) -> Tensor:
        if self.encoder is None:
            raise RuntimeError("this map has no tactile encoder")
        return self.encoder(u_norm)

    def head_graph(self, state_norm: Tensor | None,
                   feature: Tensor | None) -> Tensor:
        parts = []
        if self.config.inputs != "tactile_only":
            parts.append(state_norm)
        if self.config.inputs != "state_only":
            parts.append(feature)
        h = parts[0] if len(parts) == 1 else concat(parts, axis=1)
        return self.head(h)

    # -- inference ------------------------------------------------------

    def _check_ready(self) -> None:
        if not self.trained:
            raise RuntimeError("mapping is untrained: fit it before calling")

    def _compose(self, x: np.ndarray, out_norm: np.ndarray) -> np.ndarray:
        y = out_norm * self.stats.target_scale + self.stats.target_center
        a = x + y if self.config.mode == "residual" else y
        a = a.copy()
        enc = a[..., 2:4]
        norm = np.linalg.norm(enc, axis=-1, keepdims=True)
        safe = norm > 1e-8
        a[..., 2:4] = np.where(safe, enc / np.where(safe, norm, 1.0), x[..., 2:4])
        a[..., 4:] = np.clip(a[..., 4:], self.joint_limit_lo, self.joint_limit_hi)
        return a

    def _forward_features(self, x: np.ndarray, feature: Tensor | None) -> np.ndarray:
        single = x.ndim == 1
        xb = x[None] if single else x
        state_t = None
        if self.config.inputs != "tactile_only":
            state_t = Tensor(self._norm_state(xb).astype(np.float32))
        out = self.head_graph(state_t, feature).data.astype(float)
        a = self._compose(xb, out)
        return a[0] if single else a

    def map_raw(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Target that would reproduce the observed interaction."""
        self._check_ready()
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        if x.shape[-1] != self.state_dim:
            raise ValueError(f"state dim {x.shape[-1]} != {self.state_dim}")
        if u.shape[-2:] != (self.n_units, self.n_channels):
            raise ValueError(f"tactile shape {u.shape} does not end in "
                             f"({self.n_units}, {self.n_channels})")
        feature = None
        if self.config.inputs != "state_only":
            ub = u[None] if u.ndim == 2 else u
            if self.config.latent_path == "decode_reencode":
                feature = self.tactile_feature_graph(Tensor(self._norm_tactile(ub)))
            else:
                if self.codec is None:
                    raise RuntimeError("direct_latent map has no codec attached")
                h = self.codec.encode(ub)[0]
                feature = Tensor(self._norm_latent(h).astype(np.float32))
        return self._forward_features(x, feature)

    def map_latent(self, x_hat: np.ndarray, h_hat: np.ndarray,
                   codec: TactileCodec | None = None) -> np.ndarray:
        """Same map driven by a predicted tactile latent instead of raw frames."""
        self._check_ready()
        x_hat = np.asarray(x_hat, dtype=float)
        h_hat = np.asarray(h_hat, dtype=float)
        if x_hat.shape[-1] != self.state_dim:
            raise ValueError(f"state dim {x_hat.shape[-1]} != {self.state_dim}")
        feature = None
        if self.config.inputs != "state_only":
            hb = h_hat[None] if h_hat.ndim == 1 else h_hat
            if self.config.latent_path == "decode_reencode":
                if codec is None:
                    raise ValueError("decode_reencode needs the codec that "
                                     "produced the latent")
                u_hat = codec.decode(hb)
                feature = self.tactile_feature_graph(
                    Tensor(self._norm_tactile(u_hat)))
            else:
                if hb.shape[-1] != self.stats.latent_center.shape[0]:
                    raise ValueError(f"latent dim {hb.shape[-1]} != "
                                     f"{self.stats.latent_center.shape[0]}")
                feature = Tensor(self._norm_latent(hb).astype(np.float32))
        return self._forward_features(x_hat, feature)
