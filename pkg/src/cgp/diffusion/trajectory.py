"""Coupled state/latent trajectory layout and per-dim min-max normalization."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_HALF_RANGE = 1e-6


@dataclass(frozen=True)
class CoupledTrajectory:
    """A horizon of per-step rows laid out as [state | tactile latent]."""

    data: np.ndarray
    state_dim: int
    latent_dim: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != self.state_dim + self.latent_dim:
            raise ValueError(
                f"trajectory shape {data.shape} incompatible with "
                f"state_dim={self.state_dim} + latent_dim={self.latent_dim}")
        if data.shape[0] < 1:
            raise ValueError("trajectory needs at least one step")
        object.__setattr__(self, "data", data)

    @property
    def horizon(self) -> int:
        return int(self.data.shape[0])

    @property
    def states(self) -> np.ndarray:
        return self.data[:, :self.state_dim]

    @property
    def latents(self) -> np.ndarray:
        return self.data[:, self.state_dim:]


@dataclass
class TrajectoryNormalizer:
    """Per-dim affine map onto [-1, 1], fitted to the training split."""

    center: np.ndarray
    half: np.ndarray

    @classmethod
    def fit(cls, rows: np.ndarray) -> "TrajectoryNormalizer":
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ValueError("normalizer fits on a (rows, dims) array")
        lo, hi = rows.min(axis=0), rows.max(axis=0)
        return cls(center=0.5 * (lo + hi),
                   half=np.maximum(0.5 * (hi - lo), MIN_HALF_RANGE))

    @property
    def dim(self) -> int:
        return int(self.center.shape[0])

    def normalize(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=np.float64) - self.center) / self.half

    def denormalize(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y, dtype=np.float64) * self.half + self.center

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "half": self.half.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "TrajectoryNormalizer":
        return cls(center=np.asarray(d["center"], dtype=np.float64),
                   half=np.asarray(d["half"], dtype=np.float64))


def split_trajectory(y_hat: np.ndarray, normalizer: TrajectoryNormalizer,
                     state_dim: int, latent_dim: int,
                     ) -> tuple[np.ndarray, np.ndarray]:
    """De-normalize a sampled trajectory and slice it into states and latents.

    Palm-angle encodings (state columns 2:4) are pushed back onto the unit
    circle; a degenerate near-zero encoding snaps to angle zero.
    """
    y = np.asarray(y_hat, dtype=np.float64)
    if y.ndim != 2 or y.shape[1] != state_dim + latent_dim:
        raise ValueError(
            f"trajectory shape {y.shape} incompatible with "
            f"state_dim={state_dim} + latent_dim={latent_dim}")
    if normalizer.dim != y.shape[1]:
        raise ValueError("normalizer was fitted for a different layout")
    y = normalizer.denormalize(y)
    x, h = y[:, :state_dim].copy(), y[:, state_dim:].copy()
    enc = x[:, 2:4]
    norm = np.linalg.norm(enc, axis=1)
    ok = norm > 1e-8
    x[ok, 2:4] = enc[ok] / norm[ok, None]
    x[~ok, 2], x[~ok, 3] = 1.0, 0.0
    return x, h
