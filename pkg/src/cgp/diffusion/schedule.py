"""Variance-preserving noise schedules and the forward perturbation.

Coefficients are tabulated once per schedule: alpha[j-1], sigma[j-1] pair with
diffusion step j in {1..J}. Both kinds are built from per-step betas so the
cumulative product stays strictly decreasing for any J.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SCHEDULE_KINDS = ("squared_cosine", "linear")

_COSINE_OFFSET = 0.008
# cap keeps alpha_J > 0 so the x0-extraction form of the DDIM update stays finite
_BETA_MAX = 0.999
_BETA_MIN = 1e-8


@dataclass(frozen=True)
class NoiseSchedule:
    J: int
    kind: str
    alpha: np.ndarray
    sigma: np.ndarray

    def coeffs(self, j) -> tuple[np.ndarray, np.ndarray]:
        """alpha_j, sigma_j for integer step(s) j in {1..J}."""
        j = np.asarray(j)
        if not np.issubdtype(j.dtype, np.integer):
            raise ValueError("diffusion step j must be integer")
        if np.any(j < 1) or np.any(j > self.J):
            raise ValueError(f"diffusion step j out of range 1..{self.J}")
        return self.alpha[j - 1], self.sigma[j - 1]


def _betas(J: int, kind: str) -> np.ndarray:
    if kind == "squared_cosine":
        t = np.arange(J + 1) / J
        f = np.cos((t + _COSINE_OFFSET) / (1.0 + _COSINE_OFFSET) * np.pi / 2.0) ** 2
        beta = 1.0 - f[1:] / f[:-1]
    else:
        # DDPM linear ramp rescaled so the total injected variance is J-free
        beta = np.linspace(0.1 / J, 20.0 / J, J)
    return np.clip(beta, _BETA_MIN, _BETA_MAX)


def make_schedule(J: int, kind: str = "squared_cosine") -> NoiseSchedule:
    if J < 2:
        raise ValueError("noise schedule needs J >= 2 steps")
    if kind not in SCHEDULE_KINDS:
        raise ValueError(f"unknown schedule kind {kind!r}; options: {SCHEDULE_KINDS}")
    alpha_bar = np.cumprod(1.0 - _betas(int(J), kind))
    return NoiseSchedule(J=int(J), kind=kind,
                         alpha=np.sqrt(alpha_bar), sigma=np.sqrt(1.0 - alpha_bar))


def q_sample(schedule: NoiseSchedule, y0: np.ndarray, j,
             epsilon: np.ndarray) -> np.ndarray:
    """Forward perturbation alpha_j * Y0 + sigma_j * eps.

    `j` is either one step shared by the whole array or a flat array giving
    one step per leading row.
    """
    y0 = np.asarray(y0, dtype=np.float64)
    epsilon = np.asarray(epsilon, dtype=np.float64)
    if epsilon.shape != y0.shape:
        raise ValueError(f"epsilon shape {epsilon.shape} != Y0 shape {y0.shape}")
    a, s = schedule.coeffs(j)
    if a.ndim == 1:
        if y0.ndim < 1 or a.shape[0] != y0.shape[0]:
            raise ValueError("per-item steps need one j per leading row of Y0")
        shape = (-1,) + (1,) * (y0.ndim - 1)
        a, s = a.reshape(shape), s.reshape(shape)
    return a * y0 + s * epsilon
