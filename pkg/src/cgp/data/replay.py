"""Deterministic re-execution of recorded episodes."""
from __future__ import annotations

import numpy as np

from ..sim import TargetState, observe, reset_task, step
from .episode import Episode, EpisodeError


def replay_episode(episode: Episode, config: dict | None = None) -> dict[str, float]:
    """Re-run an episode's targets from a fresh reset of its scene.

    Returns the worst absolute deviation per observation channel between
    the recorded frames and the re-simulated ones. A faithful recording
    replays bit-exactly, so anything above float32 noise means the scene,
    config, or stepping cadence no longer matches.
    """
    world = reset_task(episode.task_id, episode.seed, config)
    if world.cfg.source_hash != episode.config_hash:
        raise EpisodeError(
            f"config hash mismatch: episode has {episode.config_hash}, "
            f"current config gives {world.cfg.source_hash}")
    ticks = round(world.cfg.control_rate / episode.frame_hz)
    if ticks < 1:
        raise EpisodeError(f"frame_hz {episode.frame_hz} exceeds control rate")

    worst = {"image": 0.0, "tactile": 0.0, "state": 0.0, "t": 0.0}
    for i in range(episode.n_frames):
        obs = observe(world)
        worst["image"] = max(worst["image"], float(
            np.abs(obs.image.astype(np.float32) - episode.images[i]).max()))
        worst["tactile"] = max(worst["tactile"], float(
            np.abs(obs.tactile.astype(np.float32) - episode.tactile[i]).max()))
        worst["state"] = max(worst["state"], float(
            np.abs(obs.state.astype(np.float32) - episode.states[i]).max()))
        now = np.float32(world.t_ticks / world.cfg.control_rate)
        worst["t"] = max(worst["t"], abs(float(now) - float(episode.t[i])))
        target = TargetState.from_vector(
            episode.targets[i].astype(np.float64), world.cfg.n_h)
        step(world, target, ticks)
    return worst
