"""On-disk episode recordings.

Layout: magic "CGPE", u32 version, u32 header length, a UTF-8 JSON header
(identity, dims, frame count, outcome, declared extra arrays), then the
frame block as contiguous little-endian float32 records in field order
image, tactile, state, target, t — followed by any extra arrays in header
order. Integers are little-endian.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"CGPE"
VERSION = 1


class EpisodeError(ValueError):
    """Raised when an episode file is malformed."""


@dataclass
class Episode:
    """One recorded manipulation episode at a fixed frame rate.

    Frames hold the full interaction stream: what the robot saw (image,
    tactile, state) and the controller reference it executed next (target).
    `t` is the simulation clock in seconds, not a wall clock, so identical
    runs serialize to identical bytes. Extra named channels (for example a
    policy's predicted horizons) ride along as float32 arrays.
    """
    task_id: str
    seed: int
    config_hash: str
    frame_hz: float
    success: bool
    cause: str
    images: np.ndarray      # (T, H, W) float32
    tactile: np.ndarray     # (T, n_stations, 2) float32
    states: np.ndarray      # (T, state_dim) float32
    targets: np.ndarray     # (T, state_dim) float32
    t: np.ndarray           # (T,) float32 seconds
    extras: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.images = np.ascontiguousarray(self.images, dtype=np.float32)
        self.tactile = np.ascontiguousarray(self.tactile, dtype=np.float32)
        self.states = np.ascontiguousarray(self.states, dtype=np.float32)
        self.targets = np.ascontiguousarray(self.targets, dtype=np.float32)
        self.t = np.ascontiguousarray(self.t, dtype=np.float32)
        self.extras = {k: np.ascontiguousarray(v, dtype=np.float32)
                       for k, v in self.extras.items()}
        n = self.images.shape[0]
        if n < 1:
            raise EpisodeError("episode must contain at least one frame")
        for name, arr, rank in (("images", self.images, 3),
                                ("tactile", self.tactile, 3),
                                ("states", self.states, 2),
                                ("targets", self.targets, 2),
                                ("t", self.t, 1)):
            if arr.ndim != rank or arr.shape[0] != n:
                raise EpisodeError(
                    f"{name} must have rank {rank} with {n} frames, got shape {arr.shape}")
        if self.states.shape != self.targets.shape:
            raise EpisodeError("states and targets must share one layout")

    @property
    def n_frames(self) -> int:
        return int(self.images.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Episode):
            return NotImplemented
        if (self.task_id, self.seed, self.config_hash, self.frame_hz,
                self.success, self.cause) != (other.task_id, other.seed,
                                              other.config_hash, other.frame_hz,
                                              other.success, other.cause):
            return False
        if sorted(self.extras) != sorted(other.extras):
            return False
        pairs = [(self.images, other.images), (self.tactile, other.tactile),
                 (self.states, other.states), (self.targets, other.targets),
                 (self.t, other.t)]
        pairs += [(self.extras[k], other.extras[k]) for k in self.extras]
        return all(a.shape == b.shape and np.array_equal(a, b) for a, b in pairs)

    def _header(self) -> dict:
        return {
            "task_id": self.task_id,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "frame_hz": self.frame_hz,
            "success": self.success,
            "cause": self.cause,
            "n_frames": self.n_frames,
            "image_shape": list(self.images.shape[1:]),
            "tactile_shape": list(self.tactile.shape[1:]),
            "state_dim": int(self.states.shape[1]),
            "extras": [[k, list(v.shape)] for k, v in self.extras.items()],
        }


def save_episode(episode: Episode, path: str | Path) -> None:
    header = json.dumps(episode._header(), sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(header)))
        fh.write(header)
        for arr in (episode.images, episode.tactile, episode.states,
                    episode.targets, episode.t):
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
        for arr in episode.extras.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def _read_exact(fh, n: int, section: str) -> bytes:
    offset = fh.tell()
    chunk = fh.read(n)
    if len(chunk) != n:
        raise EpisodeError(f"truncated at {section} (byte {offset}): "
                           f"wanted {n} bytes, got {len(chunk)}")
    return chunk


def _read_block(fh, shape, section: str) -> np.ndarray:
    count = int(np.prod(shape)) if len(shape) else 1
    payload = _read_exact(fh, 4 * count, section)
    return np.frombuffer(payload, dtype="<f4").reshape(shape).copy()


def load_episode(path: str | Path) -> Episode:
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != MAGIC:
            raise EpisodeError(f"bad magic {magic!r} at byte 0, expected {MAGIC!r}")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != VERSION:
            raise EpisodeError(
                f"unsupported episode version {version}, expected {VERSION}")
        (header_len,) = struct.unpack("<I", _read_exact(fh, 4, "header length"))
        try:
            header = json.loads(_read_exact(fh, header_len, "header").decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as err:
            raise EpisodeError(f"unreadable header: {err}") from err

        for key in ("task_id", "seed", "config_hash", "frame_hz", "success",
                    "cause", "n_frames", "image_shape", "tactile_shape",
                    "state_dim", "extras"):
            if key not in header:
                raise EpisodeError(f"header missing field {key!r}")
        n = int(header["n_frames"])
        img_shape = (n, *header["image_shape"])
        tac_shape = (n, *header["tactile_shape"])
        vec_shape = (n, int(header["state_dim"]))

        episode = Episode(
            task_id=header["task_id"],
            seed=int(header["seed"]),
            config_hash=header["config_hash"],
            frame_hz=float(header["frame_hz"]),
            success=bool(header["success"]),
            cause=header["cause"],
            images=_read_block(fh, img_shape, "frames (images)"),
            tactile=_read_block(fh, tac_shape, "frames (tactile)"),
            states=_read_block(fh, vec_shape, "frames (states)"),
            targets=_read_block(fh, vec_shape, "frames (targets)"),
            t=_read_block(fh, (n,), "frames (t)"),
            extras={name: _read_block(fh, tuple(shape), f"extra {name!r}")
                    for name, shape in header["extras"]},
        )
        trailing = fh.read(1)
        if trailing:
            raise EpisodeError(f"trailing bytes after final section (byte {fh.tell() - 1})")
    return episode
