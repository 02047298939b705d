"""Normalization statistics computed on training episodes only."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .episode import load_episode
from .manifest import DatasetManifest

DEGENERATE_SPAN = 1e-8
TACTILE_PERCENTILE = 99.0


def _center_half(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    flat = (hi - lo) < DEGENERATE_SPAN
    # constant dims map to exactly zero under unit scale
    half = np.where(flat, 1.0, half)
    return center, half


@dataclass
class NormStats:
    """Min/max ranges as (center, half-span) pairs, plus tactile force scale.

    Vectors normalize to roughly [-1, 1]; tactile channels divide by a high
    percentile of observed magnitude so rare force spikes do not crush the
    common range. Latent ranges appear once a codec has encoded the data.
    """
    state_center: np.ndarray
    state_half: np.ndarray
    target_center: np.ndarray
    target_half: np.ndarray
    tactile_scale: np.ndarray                 # (channels,)
    latent_center: np.ndarray | None = None
    latent_half: np.ndarray | None = None

    def normalize_state(self, x: np.ndarray) -> np.ndarray:
        return (x - self.state_center) / self.state_half

    def denormalize_state(self, x: np.ndarray) -> np.ndarray:
        return x * self.state_half + self.state_center

    def normalize_target(self, x: np.ndarray) -> np.ndarray:
        return (x - self.target_center) / self.target_half

    def denormalize_target(self, x: np.ndarray) -> np.ndarray:
        return x * self.target_half + self.target_center

    def normalize_tactile(self, u: np.ndarray) -> np.ndarray:
        return u / self.tactile_scale

    def denormalize_tactile(self, u: np.ndarray) -> np.ndarray:
        return u * self.tactile_scale

    def set_latent_range(self, lo: np.ndarray, hi: np.ndarray) -> None:
        self.latent_center, self.latent_half = _center_half(
            np.asarray(lo, float), np.asarray(hi, float))

    def normalize_latent(self, h: np.ndarray) -> np.ndarray:
        if self.latent_center is None:
            raise ValueError("latent range not set; encode the dataset first")
        return (h - self.latent_center) / self.latent_half

    def denormalize_latent(self, h: np.ndarray) -> np.ndarray:
        if self.latent_center is None:
            raise ValueError("latent range not set; encode the dataset first")
        return h * self.latent_half + self.latent_center

    def to_dict(self) -> dict:
        out = {
            "state_center": self.state_center.tolist(),
            "state_half": self.state_half.tolist(),
            "target_center": self.target_center.tolist(),
            "target_half": self.target_half.tolist(),
            "tactile_scale": self.tactile_scale.tolist(),
        }
        if self.latent_center is not None:
            out["latent_center"] = self.latent_center.tolist()
            out["latent_half"] = self.latent_half.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        kw = {}
        if "latent_center" in d:
            kw["latent_center"] = np.asarray(d["latent_center"], float)
            kw["latent_half"] = np.asarray(d["latent_half"], float)
        return cls(
            state_center=np.asarray(d["state_center"], float),
            state_half=np.asarray(d["state_half"], float),
            target_center=np.asarray(d["target_center"], float),
            target_half=np.asarray(d["target_half"], float),
            tactile_scale=np.asarray(d["tactile_scale"], float),
            **kw,
        )


def compute_norm_stats(manifest: DatasetManifest, split_key: str,
                       base_dir: str | Path | None = None,
                       success_only: bool = True) -> NormStats:
    """Ranges over the training part of one split; never touches validation.

    The result is also stored on the manifest under `stats[split_key]`.
    """
    ids = manifest.indices(split_key, "train", success_only=success_only)
    if not ids:
        raise ValueError(f"training part of split {split_key!r} is empty")
    base = Path(base_dir) if base_dir is not None else None

    s_lo = s_hi = t_lo = t_hi = None
    tac_mags: list[np.ndarray] = []
    for i in ids:
        path = manifest.episodes[i].path
        episode = load_episode(base / path if base else path)
        s = episode.states.astype(np.float64)
        a = episode.targets.astype(np.float64)
        if s_lo is None:
            s_lo, s_hi = s.min(axis=0), s.max(axis=0)
            t_lo, t_hi = a.min(axis=0), a.max(axis=0)
        else:
            s_lo, s_hi = np.minimum(s_lo, s.min(axis=0)), np.maximum(s_hi, s.max(axis=0))
            t_lo, t_hi = np.minimum(t_lo, a.min(axis=0)), np.maximum(t_hi, a.max(axis=0))
        mags = np.abs(episode.tactile.astype(np.float64))
        tac_mags.append(mags.reshape(-1, mags.shape[-1]))

    state_center, state_half = _center_half(s_lo, s_hi)
    target_center, target_half = _center_half(t_lo, t_hi)
    scale = np.percentile(np.concatenate(tac_mags, axis=0),
                          TACTILE_PERCENTILE, axis=0)
    scale = np.where(scale < DEGENERATE_SPAN, 1.0, scale)

    stats = NormStats(state_center, state_half, target_center, target_half, scale)
    manifest.stats[split_key] = stats.to_dict()
    return stats
