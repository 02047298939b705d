"""Reconstruction error over per-unit force magnitudes."""
from __future__ import annotations

import numpy as np

ACTIVE_THRESHOLD = 1e-9  # Newtons; units at or below this carry no load


def tactile_metrics(u: np.ndarray, u_hat: np.ndarray) -> tuple[float, float | None, int]:
    """(mae, active_mae, n_active) between a frame (or batch) and its reconstruction.

    Each unit's force is collapsed to its Euclidean magnitude first. `mae`
    averages |mag - mag_hat| over every unit; `active_mae` restricts the
    average to units whose ground-truth magnitude is nonzero and is None
    when no unit is active.
    """
    u = np.asarray(u, dtype=np.float64)
    u_hat = np.asarray(u_hat, dtype=np.float64)
    if u.shape != u_hat.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {u_hat.shape}")
    mag = np.linalg.norm(u, axis=-1).ravel()
    mag_hat = np.linalg.norm(u_hat, axis=-1).ravel()
    err = np.abs(mag - mag_hat)
    active = mag > ACTIVE_THRESHOLD
    n_active = int(active.sum())
    active_mae = float(err[active].mean()) if n_active else None
    return float(err.mean()), active_mae, n_active
