from .episode import Episode, EpisodeError, load_episode, save_episode
from .manifest import DatasetManifest, EpisodeEntry, load_manifest, save_manifest
from .stats import NormStats, compute_norm_stats
from .experts import scripted_demo
from .replay import replay_episode

__all__ = [
    "DatasetManifest", "Episode", "EpisodeEntry", "EpisodeError", "NormStats",
    "compute_norm_stats", "load_episode", "load_manifest", "replay_episode",
    "save_episode", "save_manifest", "scripted_demo",
]
