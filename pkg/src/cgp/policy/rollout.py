"""Receding-horizon closed-loop execution and its trace record."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data.episode import Episode
from ..data.experts import PLANNERS, apply_target_noise, lerp_plan
from ..sim import (
    SimFault,
    TargetState,
    observe,
    probe,
    reset_task,
    step,
    success_check,
)
from .bundle import SOURCES, ActStep


@dataclass(frozen=True)
class RolloutTrace:
    """Everything one closed-loop run produced, at policy-step resolution.

    Per-step rows hold the observation that preceded each executed target;
    per-inference blocks keep the full predicted horizons so predictions can
    later be time-aligned with what the sensors actually measured.
    """

    task_id: str
    seed: int
    policy_kind: str
    success: bool
    cause: str                       # completed | shattered | timeout | sim-fault
    shattered: bool
    timeout: bool
    fault: bool
    images: np.ndarray               # (S, H, W) float32
    tactile: np.ndarray              # (S, units, channels) float32
    states: np.ndarray               # (S, state_dim) float32
    targets: np.ndarray              # (S, state_dim) float32, executed
    t: np.ndarray                    # (S,) float32 seconds
    sources: tuple                   # per-step provenance tag
    pred_states: np.ndarray | None   # (n_inf, T, state_dim) float32
    pred_latents: np.ndarray | None  # (n_inf, T, M) float32
    pred_targets: np.ndarray         # (n_inf, horizon, state_dim) float32
    latency: np.ndarray              # (n_inf,) float32 seconds
    config_hash: str
    frame_hz: float

    @property
    def n_steps(self) -> int:
        return int(self.t.shape[0])

    @property
    def n_inferences(self) -> int:
        return int(self.latency.shape[0])

    def to_episode(self) -> Episode:
        """Trace in the dataset container; predictions ride in extras."""
        extras = {
            "pred_targets": self.pred_targets,
            "inference_latency": self.latency,
            "source_code": np.array([SOURCES.index(s) for s in self.sources],
                                    dtype=np.float32),
        }
        if self.pred_states is not None:
            extras["pred_states"] = self.pred_states
        if self.pred_latents is not None:
            extras["pred_latents"] = self.pred_latents
        return Episode(
            task_id=self.task_id, seed=self.seed,
            config_hash=self.config_hash, frame_hz=self.frame_hz,
            success=self.success, cause=self.cause,
            images=self.images, tactile=self.tactile, states=self.states,
            targets=self.targets, t=self.t, extras=extras)


class ExpertPolicy:
    """Scripted keyframe plan behind the policy act interface.

    The sanity ceiling for a task: running it through the same
    receding-horizon loop reproduces the raw scripted demos.
    """

    kind = "expert"

    def __init__(self, exec_horizon: int = 8, noise_scale: float = 0.0,
                 image_hw: tuple = (32, 32)):
        if exec_horizon < 1:
            raise ValueError("exec_horizon must be >= 1")
        self.exec_horizon = int(exec_horizon)
        self.obs_horizon = 1
        self.noise_scale = float(noise_scale)
        self.image_hw = (int(image_hw[0]), int(image_hw[1]))
        self._plan = None
        self._cfg = None
        self._dt = 0.0
        self._step = 0
        self._rng = None

    def bind(self, world) -> None:
        self._plan = PLANNERS[world.task_id](world)
        self._cfg = world.cfg
        self._dt = 1.0 / world.cfg.policy_rate
        self._step = 0
        # same noise stream construction as the demo recorder
        self._rng = np.random.default_rng([world.seed, len(world.task_id), 1013])

    def act(self, images, tactile, states, sample_seed: int = 0,
            fallback=None) -> ActStep:
        if self._plan is None:
            raise RuntimeError("expert policy is unbound: bind(world) first")
        rows = []
        for i in range(self.exec_horizon):
            target = lerp_plan(self._plan, (self._step + i) * self._dt)
            target = apply_target_noise(target, self._rng, self.noise_scale,
                                        self._cfg)
            rows.append(target.as_vector())
        self._step += self.exec_horizon
        chunk = np.asarray(rows, dtype=float)
        return ActStep(targets=chunk, pred_states=None, pred_latents=None,
                       pred_targets=chunk.copy(), source="plan", latency=0.0)


def run_rollout(task_id: str, policy, seed: int, max_steps: int = 60,
                config: dict | None = None) -> RolloutTrace:
    """Closed-loop seeded rollout; deterministic given (policy, seed).

    The policy is queried once per exec_horizon steps and each returned
    target is held for one full policy period, with the low-level controller
    ticking at the control rate in between. A simulator fault ends the run
    with the fault flag set rather than propagating.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    world = reset_task(task_id, seed, config)
    cfg = world.cfg
    policy.bind(world)
    h, w = policy.image_hw
    t_o = max(int(policy.obs_horizon), 1)

    rng = np.random.default_rng([seed, 2833])   # per-inference sample seeds
    history: list = []
    images, tactile, states, targets, times, sources = [], [], [], [], [], []
    acts: list[ActStep] = []
    pending: list[np.ndarray] = []
    last_target = world.hold_target().as_vector()
    probes: list[dict] = []
    success = fault = False

    while len(times) < max_steps:
        obs = observe(world, h, w)
        history.append(obs)
        if len(history) > t_o:
            history.pop(0)
        if not pending:
            hist = [history[0]] * (t_o - len(history)) + history
            act = policy.act(
                np.stack([o.image for o in hist]),
                np.stack([o.tactile for o in hist]),
                np.stack([o.state for o in hist]),
                sample_seed=int(rng.integers(0, 2 ** 31 - 1)),
                fallback=last_target)
            if len(act.targets) != policy.exec_horizon:
                raise ValueError(
                    f"policy returned {len(act.targets)} targets, expected "
                    f"exec_horizon {policy.exec_horizon}")
            acts.append(act)
            pending = [np.asarray(row, dtype=float) for row in act.targets]
        # float32 quantization before stepping, so saved traces replay exactly
        vec = pending.pop(0).astype(np.float32)
        images.append(obs.image.astype(np.float32))
        tactile.append(obs.tactile.astype(np.float32))
        states.append(obs.state.astype(np.float32))
        targets.append(vec)
        times.append(np.float32(world.t_ticks / cfg.control_rate))
        sources.append(acts[-1].source)
        last_target = vec.astype(np.float64)
        try:
            step(world, TargetState.from_vector(last_target, cfg.n_h),
                 cfg.ticks_per_policy_step)
        except SimFault:
            fault = True
            break
        probes.append(probe(world))
        if success_check(task_id, world, probes):
            success = True
            break
        if world.shattered:
            break

    timeout = not (success or fault or world.shattered) and len(times) >= max_steps
    if success:
        cause = "completed"
    elif fault:
        cause = "sim-fault"
    elif world.shattered:
        cause = "shattered"
    else:
        cause = "timeout"

    pred_states = pred_latents = None
    if acts and acts[0].pred_states is not None:
        pred_states = np.stack([a.pred_states for a in acts]).astype(np.float32)
    if acts and acts[0].pred_latents is not None:
        pred_latents = np.stack([a.pred_latents for a in acts]).astype(np.float32)
    return RolloutTrace(
        task_id=task_id, seed=seed, policy_kind=policy.kind,
        success=success, cause=cause, shattered=bool(world.shattered),
        timeout=timeout, fault=fault,
        images=np.stack(images), tactile=np.stack(tactile),
        states=np.stack(states), targets=np.stack(targets),
        t=np.asarray(times, dtype=np.float32), sources=tuple(sources),
        pred_states=pred_states, pred_latents=pred_latents,
        pred_targets=np.stack([a.pred_targets for a in acts]).astype(np.float32),
        latency=np.asarray([a.latency for a in acts], dtype=np.float32),
        config_hash=cfg.source_hash, frame_hz=float(cfg.policy_rate))
