"""Scripted demonstration experts.

Each expert builds a keyframe plan from the freshly reset scene (approach,
contact, manipulate, settle) and plays it back at the policy rate with
optional seeded target noise. Executed targets are quantized to float32
before stepping so a saved episode replays the exact same trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sim import (
    TargetState,
    World,
    observe,
    probe,
    reset_task,
    solve_station_tips,
    step,
    success_check,
)
from .episode import Episode

# nominal target-noise sigmas at noise_scale = 1
NOISE_PALM_POS = 0.004
NOISE_PALM_ANGLE = 0.04
NOISE_JOINT = 0.05


@dataclass
class Keyframe:
    t: float
    palm_pos: np.ndarray
    palm_angle: float
    joints: np.ndarray


def lerp_plan(plan: list[Keyframe], t: float) -> TargetState:
    """Piecewise-linear target along the plan, clamped at both ends."""
    if t <= plan[0].t:
        k = plan[0]
        return TargetState.from_angles(k.palm_pos.copy(), k.palm_angle,
                                       k.joints.copy())
    for a, b in zip(plan, plan[1:]):
        if t <= b.t:
            w = (t - a.t) / (b.t - a.t)
            return TargetState.from_angles(
                a.palm_pos + w * (b.palm_pos - a.palm_pos),
                a.palm_angle + w * (b.palm_angle - a.palm_angle),
                a.joints + w * (b.joints - a.joints))
    k = plan[-1]
    return TargetState.from_angles(k.palm_pos.copy(), k.palm_angle,
                                   k.joints.copy())


def _solve_tips(world: World, palm_pos, palm_angle: float, base_joints,
                tips: dict[int, np.ndarray]) -> np.ndarray:
    return solve_station_tips(world.cfg, palm_pos, palm_angle, base_joints, tips)


def _fragile_grasp_plan(world: World) -> list[Keyframe]:
    cfg = world.cfg
    egg = world.body("egg")
    ex, r = float(egg.pos[0]), float(egg.size[0])
    grasp_palm = np.array([ex, r + 0.115])
    # pinch with the outer fingers well below the equator: the egg center
    # rides above the contact line, so the squeeze normals carry its weight
    # without relying on friction (which creeps under sustained load)
    contact_r = r + cfg.unit_radius
    down = 0.008 / contact_r
    cos_t = np.sqrt(1.0 - down ** 2)

    def flank(radial: float) -> tuple[np.ndarray, np.ndarray]:
        dx, dy = radial * cos_t, -radial * down
        return (np.array([ex + dx, r + dy]), np.array([ex - dx, r + dy]))

    pre0, pre2 = flank(contact_r + 0.006)
    grip0, grip2 = flank(contact_r - 0.0009)
    q0 = world.q.copy()
    q_pre = _solve_tips(world, grasp_palm, np.pi, q0, {0: pre0, 2: pre2})
    q_grip = _solve_tips(world, grasp_palm, np.pi, q_pre, {0: grip0, 2: grip2})
    lift = grasp_palm + np.array([0.0, world.lift_height - r + 0.015])
    return [
        Keyframe(0.0, world.palm_pos.copy(), np.pi, q0),
        Keyframe(1.6, grasp_palm, np.pi, q_pre),
        Keyframe(2.6, grasp_palm, np.pi, q_grip),
        Keyframe(3.4, grasp_palm, np.pi, q_grip),
        Keyframe(6.4, lift, np.pi, q_grip),
        Keyframe(11.6, lift, np.pi, q_grip),
    ]


def _box_flip_plan(world: World) -> list[Keyframe]:
    cfg = world.cfg
    box = world.body("box")
    bx, by = float(box.pos[0]), float(box.pos[1])
    hw, hh = float(box.size[0]), float(box.size[1])
    theta = float(box.angle)
    center = np.array([bx, by])
    # pinch along the box's own width axis: a tilted box touched by a
    # horizontal pinch takes the first contact off its center line and
    # spins away (zero gravity, nothing else holds it)
    axis = np.array([np.cos(theta), np.sin(theta)])
    standoff = hw + cfg.unit_radius + 0.006
    squeeze = hw + cfg.unit_radius - 0.0012
    q0 = world.q.copy()
    origin = world.palm_pos.copy()
    lift = np.array([0.0, 0.04])
    # hover above the pinch points first; the swing from the reset pose
    # must stay clear of the box or the slightest brush launches it
    q_air = _solve_tips(world, origin, 0.0, q0, {
        0: center - standoff * axis + lift,
        2: center + standoff * axis + lift,
    })
    q_pre = _solve_tips(world, origin, 0.0, q_air, {
        0: center - standoff * axis,
        2: center + standoff * axis,
    })
    q_grip = _solve_tips(world, origin, 0.0, q_pre, {
        0: center - squeeze * axis,
        2: center + squeeze * axis,
    })
    return [
        Keyframe(0.0, origin, 0.0, q0),
        Keyframe(1.0, origin, 0.0, q_air),
        Keyframe(2.0, origin, 0.0, q_pre),
        Keyframe(4.0, origin, 0.0, q_grip),
        Keyframe(10.0, origin, np.pi / 2, q_grip),
        Keyframe(11.6, origin, np.pi / 2, q_grip),
    ]


def _wipe_plan(world: World) -> list[Keyframe]:
    cfg = world.cfg
    pad = world.body("pad")
    px = float(pad.pos[0])
    hw, hh = float(pad.size[0]), float(pad.size[1])
    palm_x = float(world.palm_pos[0])
    high = np.array([palm_x, world.palm_pos[1]])
    work = np.array([palm_x, 0.145])
    q0 = world.q.copy()
    # middle finger pushes the pad's left face, outer finger presses its
    # top so the pad stays planted against the table hard enough to scrub
    push_x = px - hw - cfg.unit_radius
    press_pt = np.array([px + 0.005, 2 * hh + cfg.unit_radius - 0.0010])
    q_air = _solve_tips(world, high, np.pi, q0, {
        1: np.array([push_x - 0.002, 0.070]),
        0: np.array([px + 0.005, 0.065]),
    })
    q_down = _solve_tips(world, work, np.pi, q_air, {
        1: np.array([push_x - 0.002, hh]),
        0: press_pt,
    })
    q_engage = _solve_tips(world, work, np.pi, q_down, {
        1: np.array([push_x + 0.0005, hh]),
        0: press_pt,
    })
    sweep_end = np.array([0.10, work[1]])
    return [
        Keyframe(0.0, world.palm_pos.copy(), np.pi, q0),
        Keyframe(1.0, high, np.pi, q_air),
        Keyframe(2.2, work, np.pi, q_down),
        Keyframe(3.0, work, np.pi, q_engage),
        Keyframe(7.5, sweep_end, np.pi, q_engage),
        Keyframe(8.4, sweep_end, np.pi, q_engage),
    ]


PLANNERS = {
    "box_flip": _box_flip_plan,
    "fragile_grasp": _fragile_grasp_plan,
    "wipe": _wipe_plan,
}


def apply_target_noise(target: TargetState, rng, noise_scale: float,
                 cfg) -> TargetState:
    if noise_scale <= 0.0:
        return target
    pos = target.palm_pos + noise_scale * NOISE_PALM_POS * rng.standard_normal(2)
    angle = target.palm_angle + noise_scale * NOISE_PALM_ANGLE * rng.standard_normal()
    joints = target.joints + noise_scale * NOISE_JOINT * rng.standard_normal(cfg.n_h)
    return TargetState.from_angles(pos, angle, joints)


def scripted_demo(task_id: str, seed: int, noise_scale: float = 0.0,
                  config: dict | None = None) -> Episode:
    """Run one expert rollout and package it as an Episode.

    The same (task_id, seed, noise_scale) always produces identical bytes:
    the noise stream is seeded and frame times come from the sim clock.
    """
    world = reset_task(task_id, seed, config)
    plan = PLANNERS[task_id](world)
    cfg = world.cfg
    dt = 1.0 / cfg.policy_rate
    n_steps = int(np.ceil(plan[-1].t / dt)) + 1
    rng = np.random.default_rng([seed, len(task_id), 1013])

    images, tactile, states, targets, times = [], [], [], [], []
    trace = []
    for k in range(n_steps):
        obs = observe(world)
        target = apply_target_noise(lerp_plan(plan, k * dt), rng, noise_scale, cfg)
        vec = target.as_vector().astype(np.float32)
        executed = TargetState.from_vector(vec.astype(np.float64), cfg.n_h)
        images.append(obs.image.astype(np.float32))
        tactile.append(obs.tactile.astype(np.float32))
        states.append(obs.state.astype(np.float32))
        targets.append(vec)
        times.append(np.float32(world.t_ticks / cfg.control_rate))
        step(world, executed, cfg.ticks_per_policy_step)
        trace.append(probe(world))

    success = success_check(task_id, world, trace)
    if success:
        cause = "completed"
    elif world.shattered:
        cause = "shattered"
    else:
        cause = "goal-not-reached"
    return Episode(
        task_id=task_id,
        seed=seed,
        config_hash=cfg.source_hash,
        frame_hz=float(cfg.policy_rate),
        success=success,
        cause=cause,
        images=np.stack(images),
        tactile=np.stack(tactile),
        states=np.stack(states),
        targets=np.stack(targets),
        t=np.asarray(times, dtype=np.float32),
    )
