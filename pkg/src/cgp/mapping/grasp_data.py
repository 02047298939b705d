"""Grasp-hold episode generator for the hand-configuration benchmark.

Zero-gravity scenes: one object from a small shape/size menu floats just
above the palm, the two outer fingertips descend beside it and squeeze to
a randomized depth, optionally joined by the middle finger pressing from
above, then everything holds still. The recorded (state, tactile, target)
frames cover free space, the squeeze transient, and long quasi-static
multi-contact holds.
"""
from __future__ import annotations

import numpy as np

from ..data import Episode
from ..data.experts import Keyframe, apply_target_noise, lerp_plan
from ..sim import (
    Body,
    TargetState,
    World,
    WorldConfig,
    load_task_config,
    observe,
    solve_station_tips,
    step,
)

# (shape, half extents) menu; sizes get jittered per episode
OBJECT_MENU: tuple[tuple[str, tuple[float, ...]], ...] = (
    ("circle", (0.012,)),
    ("circle", (0.016,)),
    ("circle", (0.020,)),
    ("circle", (0.024,)),
    ("box", (0.020, 0.015)),
    ("box", (0.025, 0.012)),
    ("box", (0.016, 0.020)),
    ("box", (0.030, 0.010)),
)


def _bench_world(seed: int, obj_index: int, rng: np.random.Generator) -> World:
    # zero-g hand parameters borrowed from the flip task's scene
    base = load_task_config("box_flip")
    cfg = WorldConfig.from_dict(base)
    world = World(cfg, task_id="grasp_bench", seed=seed)

    shape, size = OBJECT_MENU[obj_index % len(OBJECT_MENU)]
    size = tuple(s * rng.uniform(0.92, 1.08) for s in size)
    x = rng.uniform(-0.015, 0.015)
    crown = cfg.palm_half_height + cfg.palm_unit_radius
    mass = 0.1
    # rest just above the palm crown so the squeeze pins the object against
    # the palm stations instead of squirting it away (no gravity here)
    if shape == "circle":
        r = size[0]
        y = crown + r + 0.0005
        inertia = 0.5 * mass * r ** 2
        angle = 0.0
    else:
        hw, hh = size
        angle = rng.uniform(-0.12, 0.12)
        y = crown + hw * abs(np.sin(angle)) + hh * abs(np.cos(angle)) + 0.0005
        inertia = mass * (hw ** 2 + hh ** 2) / 3.0
    world.bodies.append(Body(name="obj", shape=shape, size=size, mass=mass,
                             inertia=inertia, pos=np.array([x, y]), angle=angle))
    world.q = np.clip(np.asarray(base["initial_joints"], dtype=float),
                      cfg.joint_limit_lo, cfg.joint_limit_hi)
    world.refresh_frames()
    return world


def _hold_plan(world: World, rng: np.random.Generator) -> list[Keyframe]:
    cfg = world.cfg
    obj = world.body("obj")
    center = obj.pos.copy()
    if obj.shape == "circle":
        half_w = half_h = float(obj.size[0])
        axis = np.array([1.0, 0.0])
    else:
        half_w, half_h = float(obj.size[0]), float(obj.size[1])
        axis = np.array([np.cos(obj.angle), np.sin(obj.angle)])

    standoff = half_w + cfg.unit_radius + 0.006
    depth = rng.uniform(0.0005, 0.0011)
    extra = rng.uniform(0.0001, 0.0006)
    squeeze = half_w + cfg.unit_radius - depth
    # aim a little above the equator so the pinch presses the object down
    # onto the palm stations; tips plus palm close the grasp
    aim = center + np.array([0.0, rng.uniform(0.001, 0.003)])
    lift = np.array([0.0, 0.045])

    q0 = world.q.copy()
    palm = world.palm_pos.copy()
    angle = world.palm_angle

    # hover beside the object before closing in, otherwise the swing from
    # the splayed reset pose brushes it away; the middle finger stays folded
    q_air = solve_station_tips(cfg, palm, angle, q0,
                               {0: aim - standoff * axis + lift,
                                2: aim + standoff * axis + lift})
    q_pre = solve_station_tips(cfg, palm, angle, q_air,
                               {0: aim - standoff * axis,
                                2: aim + standoff * axis})
    q_grip = solve_station_tips(cfg, palm, angle, q_pre,
                                {0: aim - squeeze * axis,
                                 2: aim + squeeze * axis})
    # second stage deepens the pinch so the hold covers two force levels
    q_firm = solve_station_tips(cfg, palm, angle, q_grip,
                                {0: aim - (squeeze - extra) * axis,
                                 2: aim + (squeeze - extra) * axis})

    # quick moves, long dwells: most recorded frames are settled, where the
    # gap between commanded and achieved configuration is pure contact load
    # (or, in the free dwells, the controller's tracking bias)
    return [
        Keyframe(0.0, palm, angle, q0),
        Keyframe(0.6, palm, angle, q_air),
        Keyframe(3.0, palm, angle, q_air),
        Keyframe(3.6, palm, angle, q_pre),
        Keyframe(4.4, palm, angle, q_pre),
        Keyframe(5.2, palm, angle, q_grip),
        Keyframe(7.4, palm, angle, q_grip),
        Keyframe(7.8, palm, angle, q_firm),
        Keyframe(10.2, palm, angle, q_firm),
    ]


# the swing out of the reset pose is executed but never recorded: its
# tracking lag would otherwise dominate the dataset's residual spread
RECORD_FROM = 1.4


def grasp_hold_episode(seed: int, noise_scale: float = 0.05) -> Episode:
    """One recorded hold; the object is picked from the menu by seed."""
    rng = np.random.default_rng([seed, 8237])
    world = _bench_world(seed, obj_index=seed, rng=rng)
    plan = _hold_plan(world, rng)
    cfg = world.cfg

    dt = 1.0 / cfg.policy_rate
    n_steps = int(np.ceil(plan[-1].t / dt)) + 1
    noise_rng = np.random.default_rng([seed, 11, 4519])
    images, tactile, states, targets, times = [], [], [], [], []
    for k in range(n_steps):
        target = apply_target_noise(lerp_plan(plan, k * dt), noise_rng, noise_scale, cfg)
        vec = target.as_vector().astype(np.float32)
        executed = TargetState.from_vector(vec.astype(np.float64), cfg.n_h)
        if k * dt >= RECORD_FROM - 1e-9:
            obs = observe(world)
            images.append(obs.image.astype(np.float32))
            tactile.append(obs.tactile.astype(np.float32))
            states.append(obs.state.astype(np.float32))
            targets.append(vec)
            times.append(np.float32(world.t_ticks / cfg.control_rate))
        step(world, executed, cfg.ticks_per_policy_step)

    return Episode(
        task_id="grasp_bench", seed=seed, config_hash=cfg.source_hash,
        frame_hz=float(cfg.policy_rate), success=True, cause="completed",
        images=np.stack(images), tactile=np.stack(tactile),
        states=np.stack(states), targets=np.stack(targets),
        t=np.asarray(times, dtype=np.float32),
    )


def make_grasp_dataset(n_episodes: int, seed: int = 0,
                       noise_scale: float = 0.05) -> list[Episode]:
    """Episodes cycle through the object menu with seeded size/pose jitter."""
    if n_episodes < 1:
        raise ValueError("n_episodes must be positive")
    base = seed * 100_003
    return [grasp_hold_episode(base + i, noise_scale=noise_scale)
            for i in range(n_episodes)]
