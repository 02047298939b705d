"""Multi-modal observation packing: agent view, tactile frame, state vector."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .render import render_agent_view
from .world import World


@dataclass
class Observation:
    image: np.ndarray     # (H, W) grayscale in [0, 1]
    tactile: np.ndarray   # (n_stations, 2) local (normal, tangential) forces
    state: np.ndarray     # palm xy, palm angle encoding, joint angles

    def copy(self) -> "Observation":
        return Observation(self.image.copy(), self.tactile.copy(), self.state.copy())


def observe(world: World, h: int = 32, w: int = 32) -> Observation:
    """Pure snapshot of the world; calling twice without stepping matches."""
    return Observation(
        image=render_agent_view(world, h, w),
        tactile=world.tactile.copy(),
        state=world.state_vector(),
    )
