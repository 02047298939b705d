"""Task scenes, seeded randomization, success predicates, press fixtures.

Each task ships a plain-text config holding every physical constant and
randomization range; the hash of that config travels with every episode.
Gravity is off for the in-hand flip (the box is cradled above the palm)
and on for the two tabletop tasks.
"""
from __future__ import annotations

import importlib.resources as resources

import numpy as np

from ..configfile import load_config, parse_config_text
from .world import Body, Plane, TargetState, World, WorldConfig

TASK_IDS = ("box_flip", "fragile_grasp", "wipe")


def load_task_config(task_id: str) -> dict:
    if task_id not in TASK_IDS:
        raise ValueError(f"unknown task {task_id!r}, expected one of {TASK_IDS}")
    ref = resources.files("cgp.configs").joinpath(f"{task_id}.cfg")
    return parse_config_text(ref.read_text())


def reset_task(task_id: str, seed: int, config: dict | None = None) -> World:
    """Build a fresh seeded world for one task."""
    if config is None:
        config = load_task_config(task_id)
    cfg = WorldConfig.from_dict(config)
    rng = np.random.default_rng(seed)
    world = World(cfg, task_id=task_id, seed=seed)

    if task_id == "box_flip":
        _reset_box_flip(world, config, rng)
    elif task_id == "fragile_grasp":
        _reset_fragile_grasp(world, config, rng)
    elif task_id == "wipe":
        _reset_wipe(world, config, rng)
    else:
        raise ValueError(f"unknown task {task_id!r}, expected one of {TASK_IDS}")
    world.refresh_frames()
    return world


def _reset_box_flip(world: World, c: dict, rng) -> None:
    cfg = world.cfg
    hw, hh = c["box_half_w"], c["box_half_h"]
    x = rng.uniform(c["box_x_lo"], c["box_x_hi"])
    angle = rng.uniform(c["box_angle_lo"], c["box_angle_hi"])
    # rest the lowest corner just above the palm station crowns
    crown = cfg.palm_half_height + cfg.palm_unit_radius
    y = crown + hw * abs(np.sin(angle)) + hh * abs(np.cos(angle)) + c["box_clearance"]
    mass = c["box_mass"]
    world.bodies.append(Body(
        name="box", shape="box", size=(hw, hh), mass=mass,
        inertia=mass * (hw ** 2 + hh ** 2) / 3.0,
        pos=np.array([x, y]), angle=angle))
    world.q = _open_hand_pose(world, c)
    world.initial_body_angle = angle
    world.goal_angle_offset = c["goal_angle_offset"]


def _reset_fragile_grasp(world: World, c: dict, rng) -> None:
    r = rng.uniform(c["egg_r_lo"], c["egg_r_hi"])
    x = rng.uniform(c["egg_x_lo"], c["egg_x_hi"])
    mass = c["egg_mass"]
    world.planes.append(Plane(np.array([0.0, 1.0]), 0.0))
    world.bodies.append(Body(
        name="egg", shape="circle", size=(r,), mass=mass,
        inertia=0.5 * mass * r ** 2, pos=np.array([x, r])))
    world.f_max = c["f_max"]
    world.lift_height = c["lift_height"]
    world.palm_pos = np.array([c["palm_start_x"], c["palm_start_y"]])
    world.palm_angle = np.pi
    world.q = _open_hand_pose(world, c)


def _reset_wipe(world: World, c: dict, rng) -> None:
    hw, hh = c["pad_half_w"], c["pad_half_h"]
    x = c["pad_base_x"] + rng.uniform(c["pad_x_jitter_lo"], c["pad_x_jitter_hi"])
    mass = c["pad_mass"]
    world.planes.append(Plane(np.array([0.0, 1.0]), 0.0))
    world.bodies.append(Body(
        name="pad", shape="box", size=(hw, hh), mass=mass,
        inertia=mass * (hw ** 2 + hh ** 2) / 3.0, pos=np.array([x, hh])))
    n_cells = int(c["dirt_cells"])
    base = np.linspace(c["dirt_x_lo"], c["dirt_x_hi"], n_cells)
    jitter = rng.uniform(-c["dirt_jitter"], c["dirt_jitter"], size=n_cells)
    world.dirt_x = base + jitter
    world.dirt_cleared = np.zeros(n_cells, dtype=bool)
    world.wipe_press_min = c["wipe_press_min"]
    world.wipe_aside_x = c["wipe_aside_x"]
    world.palm_pos = np.array([x + c["palm_offset_x"], c["palm_start_y"]])
    world.palm_angle = np.pi
    world.q = _open_hand_pose(world, c)


def _open_hand_pose(world: World, c: dict) -> np.ndarray:
    q = np.zeros(world.cfg.n_h)
    pose = c.get("initial_joints")
    if pose is not None:
        q[:] = np.asarray(pose, dtype=float)
    return np.clip(q, world.cfg.joint_limit_lo, world.cfg.joint_limit_hi)


def probe(world: World) -> dict:
    """Per-step scalar snapshot consumed by success_check."""
    out = {"t": world.t_ticks * world.cfg.dt_physics * world.cfg.substeps_per_tick,
           "shattered": float(world.shattered)}
    if world.task_id == "box_flip":
        b = world.body("box")
        out["body_angle"] = b.angle
        out["body_omega"] = b.omega
    elif world.task_id == "fragile_grasp":
        b = world.body("egg")
        out["body_y"] = float(b.pos[1])
    elif world.task_id == "wipe":
        b = world.body("pad")
        out["pad_x"] = float(b.pos[0])
        out["dirt_all_cleared"] = float(world.dirt_cleared.all())
    return out


def _sustained(flags: np.ndarray, times: np.ndarray, duration: float) -> bool:
    """True if some contiguous window of at least `duration` is all-true."""
    start = None
    for i, ok in enumerate(flags):
        if ok and start is None:
            start = i
        elif not ok:
            start = None
        if start is not None and times[i] - times[start] >= duration - 1e-9:
            return True
    return False


def success_check(task_id: str, world: World, trace: list[dict]) -> bool:
    if task_id not in TASK_IDS:
        raise ValueError(f"unknown task {task_id!r}, expected one of {TASK_IDS}")
    if not trace:
        return False
    times = np.array([p["t"] for p in trace])
    if task_id == "box_flip":
        goal = world.initial_body_angle + world.goal_angle_offset
        err = np.array([abs(np.arctan2(np.sin(p["body_angle"] - goal),
                                       np.cos(p["body_angle"] - goal)))
                        for p in trace])
        slow = np.array([abs(p["body_omega"]) < 0.1 for p in trace])
        ok = (err <= np.deg2rad(10.0)) & slow
        return _sustained(ok, times, 1.0)
    if task_id == "fragile_grasp":
        if world.shattered or any(p["shattered"] for p in trace):
            return False
        ok = np.array([p["body_y"] >= world.lift_height for p in trace])
        return _sustained(ok, times, 4.0)
    cleared = np.array([p["dirt_all_cleared"] > 0 for p in trace])
    aside = np.array([p["pad_x"] > world.wipe_aside_x for p in trace])
    return bool((cleared & aside).any())


def make_press_fixture(seed: int) -> tuple[World, TargetState]:
    """Single finger pressing a fixed wall: the measurable contact-grounding
    setup. Returns the world plus an approach target that brings the finger
    into light wall contact; settle_press_fixture then converts it into a
    pure press along the contact normal."""
    rng = np.random.default_rng(seed)
    config = load_task_config("box_flip")
    config["gravity"] = 0.0
    cfg = WorldConfig.from_dict(config)
    world = World(cfg, task_id="press", seed=seed)

    wall_x = rng.uniform(0.105, 0.135)
    world.planes.append(Plane(np.array([-1.0, 0.0]), -wall_x, name="wall"))

    q_target = np.zeros(cfg.n_h)
    # fingers 0 and 1 lean safely away from the wall
    q_target[0] = 0.35
    q_target[3] = 0.25
    # finger 2 leans into the wall with a randomized curl
    q_target[6] = rng.uniform(-0.80, -0.60)
    q_target[7] = rng.uniform(-0.30, -0.10)
    q_target[8] = rng.uniform(-0.15, 0.0)
    world.palm_frozen = True
    world.q = q_target.copy()
    world.q[6] = -0.35          # start shy of the wall, then press in
    target = TargetState.from_angles(world.palm_pos.copy(), world.palm_angle,
                                     q_target)
    world.refresh_frames()
    return world, target


def settle_press_fixture(world: World, approach: TargetState,
                         press_force: float = 3.0) -> TargetState:
    """Drive the fixture to a resting press.

    Phase one settles against the wall under the approach target. Phase two
    re-aims the joint targets by exactly K_p^{-1} J^T (press_force * normal),
    so the held load is normal to the wall and friction unwinds to zero.
    """
    from .world import step
    from .kinematics import station_jacobian

    cfg = world.cfg
    step(world, approach, int(1.5 * cfg.control_rate))
    if not world.last_contacts:
        raise RuntimeError("press fixture never reached the wall")
    refined = approach
    for _ in range(4):
        gen = np.zeros(3 + cfg.n_h)
        count = len(world.last_contacts)
        for c in world.last_contacts:
            J = station_jacobian(cfg, world.layout, world.frames,
                                 world.palm_pos, c.station)
            gen += J.T @ ((press_force / count) * -c.normal)
        joints = world.q + gen[3:] / cfg.joint_kp
        refined = TargetState.from_angles(approach.palm_pos,
                                          approach.palm_angle, joints)
        step(world, refined, int(1.2 * cfg.control_rate))
        if not world.last_contacts:
            raise RuntimeError("press fixture lost wall contact while settling")
    return refined
