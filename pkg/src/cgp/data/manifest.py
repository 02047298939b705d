"""Dataset manifests: episode listings, deterministic splits, stored stats."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .episode import Episode


@dataclass
class EpisodeEntry:
    path: str
    task_id: str
    seed: int
    success: bool
    n_frames: int
    config_hash: str

    @classmethod
    def describe(cls, episode: Episode, path: str | Path) -> "EpisodeEntry":
        return cls(path=str(path), task_id=episode.task_id, seed=episode.seed,
                   success=episode.success, n_frames=episode.n_frames,
                   config_hash=episode.config_hash)


@dataclass
class DatasetManifest:
    """Episode index plus split assignments and normalization stats.

    Splits always partition the full episode list; whether failed episodes
    are then used is the consumer's filter (training drops them by default).
    """
    episodes: list[EpisodeEntry] = field(default_factory=list)
    splits: dict[str, dict[str, list[int]]] = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    def add(self, entry: EpisodeEntry) -> None:
        self.episodes.append(entry)

    def indices(self, split_key: str, part: str,
                success_only: bool = False) -> list[int]:
        ids = self.splits[split_key][part]
        if success_only:
            ids = [i for i in ids if self.episodes[i].success]
        return ids

    def split(self, seed: int, ratio: float) -> str:
        """Deterministic episode-level train/val split; returns its key.

        `ratio` is the training fraction. Episodes are atomic: no frame of
        one episode ever lands in both parts.
        """
        if not 0.0 < ratio < 1.0:
            raise ValueError(f"ratio must be in (0, 1), got {ratio}")
        n = len(self.episodes)
        if n < 2:
            raise ValueError("need at least two episodes to split")
        order = np.random.default_rng(seed).permutation(n)
        n_train = min(n - 1, max(1, round(ratio * n)))
        key = f"{seed}:{ratio:g}"
        self.splits[key] = {
            "train": sorted(int(i) for i in order[:n_train]),
            "val": sorted(int(i) for i in order[n_train:]),
        }
        return key


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    payload = {
        "episodes": [vars(e) for e in manifest.episodes],
        "splits": manifest.splits,
        "stats": manifest.stats,
    }
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True))


def load_manifest(path: str | Path) -> DatasetManifest:
    payload = json.loads(Path(path).read_text())
    return DatasetManifest(
        episodes=[EpisodeEntry(**e) for e in payload["episodes"]],
        splits=payload["splits"],
        stats=payload["stats"],
    )
