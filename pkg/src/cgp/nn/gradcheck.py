"""Central-difference gradient checking.

The check rebuilds the forward in float64 and perturbs individual parameter
entries by +/- h, comparing the numeric slope against the reverse-mode
gradient. Relative error uses a floor so near-zero gradients don't blow up
the ratio.
"""
from __future__ import annotations

import numpy as np

from .tensor import Tensor


def check_gradients(build_loss, params: list[Tensor], rng: np.random.Generator,
                    n_probes: int = 100, h: float = 1e-3, floor: float = 1e-6) -> float:
    """Return the max relative error over `n_probes` random parameter entries.

    `build_loss()` must rebuild the scalar loss graph from the current
    parameter values on every call. Parameters must be float64.
    """
    for p in params:
        if p.data.dtype != np.float64:
            raise ValueError("gradient checks require float64 parameters")
        p.zero_grad()
    loss = build_loss()
    loss.backward()
    analytic = [p.grad.copy() for p in params]

    sizes = np.array([p.data.size for p in params])
    total = int(sizes.sum())
    n_probes = min(n_probes, total)
    flat_choices = rng.choice(total, size=n_probes, replace=False)
    offsets = np.cumsum(sizes) - sizes

    worst = 0.0
    for flat in flat_choices:
        pi = int(np.searchsorted(offsets, flat, side="right") - 1)
        idx = np.unravel_index(int(flat - offsets[pi]), params[pi].data.shape)
        original = params[pi].data[idx]
        params[pi].data[idx] = original + h
        up = float(build_loss().data)
        params[pi].data[idx] = original - h
        down = float(build_loss().data)
        params[pi].data[idx] = original
        numeric = (up - down) / (2.0 * h)
        ana = float(analytic[pi][idx])
        rel = abs(numeric - ana) / max(abs(numeric), abs(ana), floor)
        worst = max(worst, rel)
    return worst
