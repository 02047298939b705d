"""Codec persistence: weight checkpoint plus a JSON sidecar.

The weights live in the binary parameter format; the sidecar (same path
with ".json" appended) carries the architecture record and the tactile
force scale needed to rebuild the exact codec.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..nn import load_params, save_params
from .model import CodecConfig, TactileCodec


def sidecar_path(path: str | Path) -> Path:
    return Path(str(path) + ".json")


def save_codec(codec: TactileCodec, path: str | Path) -> None:
    save_params(path, codec.state_dict())
    meta = {
        "kind": "tactile_codec",
        "config": codec.config.to_dict(),
        "tactile_scale": codec.tactile_scale.tolist(),
    }
    sidecar_path(path).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")


def load_codec(path: str | Path) -> TactileCodec:
    meta = json.loads(sidecar_path(path).read_text())
    if meta.get("kind") != "tactile_codec":
        raise ValueError(f"sidecar at {sidecar_path(path)} does not describe a tactile codec")
    codec = TactileCodec(CodecConfig.from_dict(meta["config"]),
                         tactile_scale=np.asarray(meta["tactile_scale"]))
    state = {k: np.asarray(v) for k, v in load_params(path).items()}
    codec.load_state_dict(state)
    return codec
