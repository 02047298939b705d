"""Trained policy containers and their single-inference act paths.

A bundle pairs a denoiser with whatever grounding it needs: CGP couples it
with the tactile codec and the contact mapping, the two diffusion-policy
baselines run the denoiser directly over target trajectories. All three
consume the same observation pipeline; the visuomotor variant simply feeds
its tactile branch zeros.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..codec.model import TactileCodec
from ..diffusion import TrajectoryDiffusion
from ..mapping import MappingModel

KINDS = ("cgp", "visuotactile_dp", "visuomotor_dp")
# provenance tags: every executed target names the stage that produced it
SOURCES = ("mapping", "denoiser", "plan", "safe_hold")


@dataclass(frozen=True)
class ActStep:
    """One inference: the executed chunk plus the full predicted horizon."""

    targets: np.ndarray              # (T_a, state_dim) clamped target vectors
    pred_states: np.ndarray | None   # (T, state_dim) denoised states, CGP only
    pred_latents: np.ndarray | None  # (T, M) denoised tactile latents, CGP only
    pred_targets: np.ndarray         # (T, state_dim) full-horizon targets
    source: str
    latency: float                   # seconds spent inside the policy

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"source {self.source!r} not in {SOURCES}")
        if np.asarray(self.targets).ndim != 2:
            raise ValueError("targets must be a (steps, state_dim) chunk")


@dataclass(frozen=True)
class PolicyBundle:
    """Immutable trained-policy container shared across seeded rollouts."""

    kind: str
    diffusion: TrajectoryDiffusion
    codec: TactileCodec | None = None
    mapping: MappingModel | None = None
    exec_horizon: int = 8
    sample_steps: int = 8
    joint_limit_lo: np.ndarray | None = None
    joint_limit_hi: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind {self.kind!r} not in {KINDS}")
        if not self.diffusion.trained:
            raise ValueError("policy bundle needs a trained denoiser")
        cfg = self.diffusion.config
        if not 1 <= self.exec_horizon <= cfg.horizon:
            raise ValueError(
                f"execution horizon {self.exec_horizon} must fit inside the "
                f"{cfg.horizon}-step prediction horizon")
        if not 1 <= self.sample_steps <= cfg.steps:
            raise ValueError(f"sample_steps must lie in 1..{cfg.steps}")
        if self.kind == "cgp":
            if self.codec is None or self.mapping is None:
                raise ValueError("cgp bundles carry a codec and a mapping")
            if not self.mapping.trained:
                raise ValueError("policy bundle needs a trained mapping")
            if self.codec.config.latent_dim != cfg.latent_dim:
                raise ValueError(
                    f"codec latent dim {self.codec.config.latent_dim} != "
                    f"denoiser latent dim {cfg.latent_dim}")
            if self.mapping.state_dim != cfg.state_dim:
                raise ValueError(
                    f"mapping state dim {self.mapping.state_dim} != "
                    f"denoiser state dim {cfg.state_dim}")
        else:
            if cfg.latent_dim != 0:
                raise ValueError("baselines diffuse plain target trajectories; "
                                 "the denoiser must have latent_dim 0")
            if self.codec is not None or self.mapping is not None:
                raise ValueError("baseline bundles carry no codec or mapping")
        n_h = cfg.state_dim - 4
        lo, hi = self.joint_limit_lo, self.joint_limit_hi
        if lo is None:
            lo = (self.mapping.joint_limit_lo if self.mapping is not None
                  else np.full(n_h, -2.4))   # hand-config default
        if hi is None:
            hi = (self.mapping.joint_limit_hi if self.mapping is not None
                  else np.full(n_h, 2.4))
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != (n_h,) or hi.shape != (n_h,):
            raise ValueError(f"joint limits must have shape ({n_h},)")
        object.__setattr__(self, "joint_limit_lo", lo)
        object.__setattr__(self, "joint_limit_hi", hi)

    @property
    def obs_horizon(self) -> int:
        return self.diffusion.config.obs_horizon

    @property
    def image_hw(self) -> tuple:
        return self.diffusion.image_hw

    def bind(self, world) -> None:
        """Pre-rollout dimension check against a freshly reset world."""
        cfg = world.cfg
        if cfg.n_h + 4 != self.diffusion.config.state_dim:
            raise ValueError(
                f"world state dim {cfg.n_h + 4} != bundle state dim "
                f"{self.diffusion.config.state_dim}")
        if cfg.n_stations != self.diffusion.n_units:
            raise ValueError(
                f"world has {cfg.n_stations} tactile units, bundle expects "
                f"{self.diffusion.n_units}")

    def act(self, images, tactile, states, sample_seed: int = 0,
            fallback=None) -> ActStep:
        if self.kind == "cgp":
            return cgp_act(self, images, tactile, states, sample_seed, fallback)
        return baseline_act(self, images, tactile, states, sample_seed, fallback)


def _clamp_joints(a: np.ndarray, bundle: PolicyBundle) -> np.ndarray:
    out = np.asarray(a, dtype=float).copy()
    out[:, 4:] = np.clip(out[:, 4:], bundle.joint_limit_lo,
                         bundle.joint_limit_hi)
    return out


def _hold_step(bundle: PolicyBundle, states, fallback, with_latents: bool,
               latency: float) -> ActStep:
    # the sampler produced non-finite values: freeze at the last target and
    # flag it instead of aborting, so rollouts stay comparable
    hold = np.asarray(states[-1] if fallback is None else fallback, dtype=float)
    cfg = bundle.diffusion.config
    nan_x = np.full((cfg.horizon, cfg.state_dim), np.nan)
    return ActStep(
        targets=np.tile(hold, (bundle.exec_horizon, 1)),
        pred_states=nan_x.copy() if with_latents else None,
        pred_latents=(np.full((cfg.horizon, cfg.latent_dim), np.nan)
                      if with_latents else None),
        pred_targets=nan_x,
        source="safe_hold",
        latency=latency)


def _sample(bundle: PolicyBundle, images, tactile, states,
            sample_seed: int) -> np.ndarray:
    cond = bundle.diffusion.encode_condition(images, tactile, states)
    return bundle.diffusion.ddim_sample(cond, n_steps=bundle.sample_steps,
                                        seed=sample_seed)


def cgp_act(bundle: PolicyBundle, images, tactile, states,
            sample_seed: int = 0, fallback=None) -> ActStep:
    """One CGP inference: denoise a coupled future, ground it step-wise.

    Every returned target is the contact mapping's output on a predicted
    (state, tactile latent) pair; raw denoised states are never executed.
    """
    if bundle.kind != "cgp":
        raise ValueError(f"bundle kind {bundle.kind!r} is not cgp")
    t0 = time.perf_counter()
    y = _sample(bundle, images, tactile, states, sample_seed)
    if np.isfinite(y).all():
        x_hat, h_hat = bundle.diffusion.split_trajectory(y)
        a_full = bundle.mapping.map_latent(x_hat, h_hat, codec=bundle.codec)
        if np.isfinite(a_full).all():
            targets = _clamp_joints(a_full[:bundle.exec_horizon], bundle)
            return ActStep(targets=targets, pred_states=x_hat,
                           pred_latents=h_hat, pred_targets=a_full,
                           source="mapping",
                           latency=time.perf_counter() - t0)
    return _hold_step(bundle, states, fallback, with_latents=True,
                      latency=time.perf_counter() - t0)


def baseline_act(bundle: PolicyBundle, images, tactile, states,
                 sample_seed: int = 0, fallback=None) -> ActStep:
    """One baseline inference: denoise the target trajectory directly."""
    if bundle.kind not in ("visuotactile_dp", "visuomotor_dp"):
        raise ValueError(f"bundle kind {bundle.kind!r} is not a baseline")
    t0 = time.perf_counter()
    if bundle.kind == "visuomotor_dp":
        tactile = np.zeros_like(np.asarray(tactile, dtype=float))
    y = _sample(bundle, images, tactile, states, sample_seed)
    if np.isfinite(y).all():
        a_full, _ = bundle.diffusion.split_trajectory(y)
        targets = _clamp_joints(a_full[:bundle.exec_horizon], bundle)
        return ActStep(targets=targets, pred_states=None, pred_latents=None,
                       pred_targets=a_full, source="denoiser",
                       latency=time.perf_counter() - t0)
    return _hold_step(bundle, states, fallback, with_latents=False,
                      latency=time.perf_counter() - t0)
