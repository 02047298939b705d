"""Mapping persistence: weight checkpoint plus a JSON sidecar."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..codec.model import TactileCodec
from ..codec.store import sidecar_path
from ..nn import load_params, save_params
from .model import MappingConfig, MappingModel, MappingStats


def save_mapping(model: MappingModel, path: str | Path) -> None:
    if not model.trained:
        raise RuntimeError("refusing to save an untrained mapping")
    save_params(path, model.state_dict())
    meta = {
        "kind": "contact_mapping",
        "config": model.config.to_dict(),
        "stats": model.stats.to_dict(),
        "state_dim": model.state_dim,
        "n_units": model.n_units,
        "n_channels": model.n_channels,
        "joint_limit_lo": model.joint_limit_lo.tolist(),
        "joint_limit_hi": model.joint_limit_hi.tolist(),
    }
    sidecar_path(path).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")


def load_mapping(path: str | Path,
                 codec: TactileCodec | None = None) -> MappingModel:
    meta = json.loads(sidecar_path(path).read_text())
    if meta.get("kind") != "contact_mapping":
        raise ValueError(
            f"sidecar at {sidecar_path(path)} does not describe a contact mapping")
    config = MappingConfig.from_dict(meta["config"])
    model = MappingModel(
        config, state_dim=meta["state_dim"], n_units=meta["n_units"],
        n_channels=meta["n_channels"],
        joint_limit_lo=np.asarray(meta["joint_limit_lo"]),
        joint_limit_hi=np.asarray(meta["joint_limit_hi"]))
    model.attach_stats(MappingStats.from_dict(meta["stats"]))
    if config.latent_path == "direct_latent" and config.inputs != "state_only":
        if codec is None:
            raise ValueError("this mapping consumes codec latents; pass the codec")
        model.attach_codec(codec)
    state = {k: np.asarray(v) for k, v in load_params(path).items()}
    model.load_state_dict(state)
    return model
