"""Diffusion persistence: weight checkpoint plus a JSON sidecar."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..codec.store import sidecar_path
from ..nn import load_params, save_params
from .model import DiffusionConfig, TrajectoryDiffusion
from .trajectory import TrajectoryNormalizer


def save_diffusion(model: TrajectoryDiffusion, path: str | Path) -> None:
    if not model.trained:
        raise RuntimeError("refusing to save an untrained diffusion model")
    save_params(path, model.state_dict())
    meta = {
        "kind": "trajectory_diffusion",
        "config": model.config.to_dict(),
        "normalizer": model.normalizer.to_dict(),
        "tactile_scale": model.tactile_scale.tolist(),
        "image_hw": list(model.image_hw),
        "n_units": model.n_units,
        "n_channels": model.n_channels,
    }
    sidecar_path(path).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")


def load_diffusion(path: str | Path) -> TrajectoryDiffusion:
    meta = json.loads(sidecar_path(path).read_text())
    if meta.get("kind") != "trajectory_diffusion":
        raise ValueError(
            f"sidecar at {sidecar_path(path)} does not describe a trajectory "
            "diffusion model")
    model = TrajectoryDiffusion(
        DiffusionConfig.from_dict(meta["config"]),
        image_hw=tuple(meta["image_hw"]), n_units=meta["n_units"],
        n_channels=meta["n_channels"])
    model.attach_stats(TrajectoryNormalizer.from_dict(meta["normalizer"]),
                       np.asarray(meta["tactile_scale"]))
    state = {k: np.asarray(v) for k, v in load_params(path).items()}
    model.load_state_dict(state)
    return model
