"""Wall-press episodes: training data matched to the press fixtures.

Each episode reuses the single-finger press fixture, drives it to rest at
a few randomized force levels, and records only the settled tail of every
hold. At rest the commanded-minus-actual joint gap is exactly the contact
load through the compliance, so a mapping trained here can be checked
against that closed form on fresh fixtures.
"""
from __future__ import annotations

import numpy as np

from ..data import Episode
from ..data.experts import apply_target_noise
from ..sim import TargetState, observe, step
from ..sim.tasks import make_press_fixture, settle_press_fixture

# frames recorded per settled force level
FRAMES_PER_LEVEL = 9


def press_hold_episode(seed: int, noise_scale: float = 0.05,
                       n_levels: int = 3) -> Episode:
    """One fixture pressed at n_levels ascending loads, settled tails only."""
    if n_levels < 1:
        raise ValueError("n_levels must be positive")
    rng = np.random.default_rng([seed, 3581])
    world, approach = make_press_fixture(seed)
    cfg = world.cfg

    levels = np.sort(rng.uniform(1.2, 4.5, size=n_levels))
    noise_rng = np.random.default_rng([seed, 17, 9029])
    images, tactile, states, targets, times = [], [], [], [], []

    target = approach
    for force in levels:
        # refinement and settling run unrecorded; only the rest state counts
        target = settle_press_fixture(world, target, press_force=float(force))
        for _ in range(FRAMES_PER_LEVEL):
            noisy = apply_target_noise(target, noise_rng, noise_scale, cfg)
            vec = noisy.as_vector().astype(np.float32)
            executed = TargetState.from_vector(vec.astype(np.float64), cfg.n_h)
            obs = observe(world)
            images.append(obs.image.astype(np.float32))
            tactile.append(obs.tactile.astype(np.float32))
            states.append(obs.state.astype(np.float32))
            targets.append(vec)
            times.append(np.float32(world.t_ticks / cfg.control_rate))
            step(world, executed, cfg.ticks_per_policy_step)

    return Episode(
        task_id="press_bench", seed=seed, config_hash=cfg.source_hash,
        frame_hz=float(cfg.policy_rate), success=True, cause="completed",
        images=np.stack(images), tactile=np.stack(tactile),
        states=np.stack(states), targets=np.stack(targets),
        t=np.asarray(times, dtype=np.float32),
    )


def make_press_dataset(n_episodes: int, seed: int = 0,
                       noise_scale: float = 0.05) -> list[Episode]:
    if n_episodes < 1:
        raise ValueError("n_episodes must be positive")
    base = seed * 100_003
    return [press_hold_episode(base + i, noise_scale=noise_scale)
            for i in range(n_episodes)]
