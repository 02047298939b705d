"""Deterministic planar world: impedance palm, PD fingers, penalty contacts.

Force convention: Contact.force is the force acting ON the robot (or on
body_a for body-vs-scene contacts); the other participant receives the
exact negation, so per-tick force sums cancel bitwise.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..configfile import config_hash
from .kinematics import (
    HandFrames,
    StationLayout,
    build_layout,
    forward_hand,
    perp,
    rot2,
    station_jacobian,
    station_velocity,
    wrap_angle,
)


class SimFault(RuntimeError):
    """Raised when integration produces non-finite state; carries a dump."""


def _as_array(value, n: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"expected scalar or length-{n} sequence, got shape {arr.shape}")
    return arr


@dataclass
class WorldConfig:
    """Physical constants and rates; built from a plain-text config dict."""
    n_fingers: int = 3
    links_per_finger: int = 3
    link_lengths: tuple = (0.05, 0.04, 0.03)
    units_per_link: int = 8
    palm_units: int = 8
    unit_radius: float = 0.006
    palm_unit_radius: float = 0.012
    palm_half_width: float = 0.08
    palm_half_height: float = 0.02
    finger_mounts: tuple = (-0.06, 0.0, 0.06)
    palm_mass: float = 1.5
    palm_inertia: float = 0.02
    joint_inertia: float = 0.04
    joint_kp: float = 30.0
    joint_kd: float = 2.0
    tau_max: float = 5.0
    palm_kp_lin: float = 600.0
    palm_kd_lin: float = 50.0
    palm_kp_ang: float = 8.0
    palm_kd_ang: float = 0.7
    joint_limit_lo: np.ndarray = field(default_factory=lambda: np.full(9, -2.4))
    joint_limit_hi: np.ndarray = field(default_factory=lambda: np.full(9, 2.4))
    kn: float = 20000.0
    cn: float = 30.0
    mu: float = 0.8
    v_reg: float = 1e-3
    gravity: float = 0.0
    dt_physics: float = 1e-3
    control_rate: int = 100
    policy_rate: int = 5
    render_center: tuple = (0.0, 0.12)
    render_half_extent: float = 0.25
    source_hash: str = ""

    def __post_init__(self):
        n_h = self.n_fingers * self.links_per_finger
        self.link_lengths = tuple(float(v) for v in np.atleast_1d(self.link_lengths))
        self.finger_mounts = tuple(float(v) for v in np.atleast_1d(self.finger_mounts))
        if len(self.link_lengths) != self.links_per_finger:
            raise ValueError(f"need {self.links_per_finger} link lengths, got {len(self.link_lengths)}")
        if len(self.finger_mounts) != self.n_fingers:
            raise ValueError(f"need {self.n_fingers} finger mounts, got {len(self.finger_mounts)}")
        self.joint_limit_lo = _as_array(self.joint_limit_lo, n_h)
        self.joint_limit_hi = _as_array(self.joint_limit_hi, n_h)
        for name in ("joint_kp", "joint_kd", "palm_kp_lin", "palm_kd_lin",
                     "palm_kp_ang", "palm_kd_ang", "kn", "mu", "v_reg",
                     "palm_mass", "palm_inertia", "joint_inertia"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if any(l <= 0 for l in self.link_lengths):
            raise ValueError("link lengths must be positive")
        if not (self.dt_physics <= 1.0 / self.control_rate <= 1.0 / self.policy_rate):
            raise ValueError("rates must satisfy dt_physics <= control period <= policy period")
        subs = 1.0 / (self.control_rate * self.dt_physics)
        if abs(subs - round(subs)) > 1e-9:
            raise ValueError("control period must be an integer number of physics steps")

    @property
    def n_h(self) -> int:
        return self.n_fingers * self.links_per_finger

    @property
    def n_stations(self) -> int:
        return self.n_fingers * self.links_per_finger * self.units_per_link + self.palm_units

    @property
    def substeps_per_tick(self) -> int:
        return round(1.0 / (self.control_rate * self.dt_physics))

    @property
    def ticks_per_policy_step(self) -> int:
        return self.control_rate // self.policy_rate

    @classmethod
    def from_dict(cls, values: dict) -> "WorldConfig":
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {k: v for k, v in values.items() if k in known}
        kwargs["source_hash"] = config_hash(values)
        return cls(**kwargs)


@dataclass
class Body:
    """Rigid object; static bodies never integrate but still exert reactions."""
    name: str
    shape: str              # "circle" or "box"
    size: tuple             # (radius,) or (half_w, half_h)
    mass: float
    inertia: float
    pos: np.ndarray
    angle: float = 0.0
    vel: np.ndarray = field(default_factory=lambda: np.zeros(2))
    omega: float = 0.0
    static: bool = False


@dataclass
class Plane:
    """Static half-plane: points satisfying normal . p >= offset are outside."""
    normal: np.ndarray
    offset: float
    name: str = "table"


@dataclass
class Contact:
    point: np.ndarray
    normal: np.ndarray      # unit, from the other participant toward side a
    penetration: float
    force: np.ndarray       # world frame, acting on side a
    station: int = -1       # tactile station index when side a is the robot
    body: str = ""          # other participant's name ("" for a plane)
    body_a: str = "robot"   # "robot" or a body name (body-vs-scene contacts)


@dataclass
class TargetState:
    """Controller reference: palm pose plus joint angles, limits applied."""
    palm_pos: np.ndarray
    palm_angle_enc: np.ndarray     # (cos, sin)
    joints: np.ndarray

    def __post_init__(self):
        self.palm_pos = np.asarray(self.palm_pos, dtype=float)
        self.palm_angle_enc = np.asarray(self.palm_angle_enc, dtype=float)
        self.joints = np.asarray(self.joints, dtype=float)
        norm = np.linalg.norm(self.palm_angle_enc)
        if not np.isfinite(norm) or norm < 1e-12:
            raise ValueError("palm angle encoding must be a finite nonzero vector")
        self.palm_angle_enc = self.palm_angle_enc / norm

    @property
    def palm_angle(self) -> float:
        return float(np.arctan2(self.palm_angle_enc[1], self.palm_angle_enc[0]))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.palm_pos, self.palm_angle_enc, self.joints])

    @classmethod
    def from_vector(cls, vec: np.ndarray, n_h: int) -> "TargetState":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (4 + n_h,):
            raise ValueError(f"target vector must have {4 + n_h} entries, got {vec.shape}")
        return cls(vec[0:2].copy(), vec[2:4].copy(), vec[4:].copy())

    @classmethod
    def from_angles(cls, palm_pos, palm_angle: float, joints) -> "TargetState":
        return cls(np.asarray(palm_pos, float),
                   np.array([np.cos(palm_angle), np.sin(palm_angle)]),
                   np.asarray(joints, float))


def pd_joint_torque(q_target: np.ndarray, q: np.ndarray, qdot: np.ndarray,
                    kp: float, kd: float, tau_max: float | None = None) -> np.ndarray:
    """Virtual spring-damper joint law kp*(q_target - q) - kd*qdot."""
    if kp <= 0 or kd < 0:
        raise ValueError("gains must be positive")
    vals = np.concatenate([np.atleast_1d(q_target), np.atleast_1d(q), np.atleast_1d(qdot)])
    if not np.isfinite(vals).all():
        raise ValueError("non-finite input to joint controller")
    tau = kp * (np.asarray(q_target) - np.asarray(q)) - kd * np.asarray(qdot)
    if tau_max is not None:
        tau = np.clip(tau, -tau_max, tau_max)
    return tau


def palm_impedance_wrench(target: TargetState, palm_pos: np.ndarray,
                          palm_angle: float, palm_vel: np.ndarray,
                          palm_omega: float, cfg: WorldConfig) -> np.ndarray:
    """Operational-space spring-damper wrench (fx, fy, tau) on the palm."""
    vals = np.concatenate([target.palm_pos, palm_pos, palm_vel,
                           [palm_angle, palm_omega]])
    if not np.isfinite(vals).all():
        raise ValueError("non-finite input to palm controller")
    f = cfg.palm_kp_lin * (target.palm_pos - palm_pos) - cfg.palm_kd_lin * palm_vel
    # angle error via the relative rotation so it wraps to (-pi, pi]
    c, s = np.cos(palm_angle), np.sin(palm_angle)
    tc, ts = target.palm_angle_enc
    err = np.arctan2(ts * c - tc * s, tc * c + ts * s)
    tau = cfg.palm_kp_ang * err - cfg.palm_kd_ang * palm_omega
    return np.array([f[0], f[1], tau])


class World:
    """One mutable simulation instance; clone() yields an independent copy."""

    def __init__(self, cfg: WorldConfig, task_id: str = "", seed: int = 0):
        self.cfg = cfg
        self.task_id = task_id
        self.seed = seed
        self.layout: StationLayout = build_layout(cfg)
        self.palm_pos = np.zeros(2)
        self.palm_angle = 0.0
        self.palm_vel = np.zeros(2)
        self.palm_omega = 0.0
        self.q = np.zeros(cfg.n_h)
        self.qdot = np.zeros(cfg.n_h)
        self.bodies: list[Body] = []
        self.planes: list[Plane] = []
        self.palm_frozen = False    # bench-mounted hand for press fixtures
        self.tactile = np.zeros((cfg.n_stations, 2))
        self.last_contacts: list[Contact] = []
        self.t_ticks = 0
        self.shattered = False
        self.f_max = np.inf
        self.dirt_x: np.ndarray = np.zeros(0)
        self.dirt_cleared: np.ndarray = np.zeros(0, dtype=bool)
        self.wipe_press_min = 0.0
        self.wipe_aside_x = 0.0
        self.goal_angle_offset = 0.0
        self.lift_height = 0.0
        self.initial_body_angle = 0.0
        self.frames: HandFrames = forward_hand(
            cfg, self.layout, self.palm_pos, self.palm_angle, self.q)

    def clone(self) -> "World":
        return copy.deepcopy(self)

    def body(self, name: str) -> Body:
        for b in self.bodies:
            if b.name == name:
                return b
        raise KeyError(f"no body named {name!r}")

    def refresh_frames(self) -> None:
        self.frames = forward_hand(self.cfg, self.layout, self.palm_pos,
                                   self.palm_angle, self.q)

    def state_vector(self) -> np.ndarray:
        """Observation layout: palm xy, palm angle encoding, joint angles."""
        return np.concatenate([
            self.palm_pos,
            [np.cos(self.palm_angle), np.sin(self.palm_angle)],
            self.q,
        ])

    def hold_target(self) -> TargetState:
        """Target that freezes the robot at its current configuration."""
        return TargetState.from_angles(self.palm_pos.copy(), self.palm_angle,
                                       self.q.copy())

    def energy(self, target: TargetState) -> float:
        """Kinetic + controller-spring + contact-spring + gravity energy."""
        cfg = self.cfg
        e = 0.5 * cfg.palm_mass * float(self.palm_vel @ self.palm_vel)
        e += 0.5 * cfg.palm_inertia * self.palm_omega ** 2
        e += 0.5 * cfg.joint_inertia * float(self.qdot @ self.qdot)
        dq = target.joints - self.q
        e += 0.5 * cfg.joint_kp * float(dq @ dq)
        dp = target.palm_pos - self.palm_pos
        e += 0.5 * cfg.palm_kp_lin * float(dp @ dp)
        c, s = np.cos(self.palm_angle), np.sin(self.palm_angle)
        tc, ts = target.palm_angle_enc
        err = np.arctan2(ts * c - tc * s, tc * c + ts * s)
        e += 0.5 * cfg.palm_kp_ang * err ** 2
        for b in self.bodies:
            if b.static:
                continue
            e += 0.5 * b.mass * float(b.vel @ b.vel) + 0.5 * b.inertia * b.omega ** 2
            e += -b.mass * cfg.gravity * b.pos[1]
        for c_ in self.last_contacts:
            e += 0.5 * cfg.kn * c_.penetration ** 2
        return e

    def _dump(self) -> str:
        return (f"t={self.t_ticks} palm={self.palm_pos} angle={self.palm_angle} "
                f"vel={self.palm_vel} omega={self.palm_omega} q={self.q} "
                f"qdot={self.qdot} bodies={[(b.name, b.pos, b.vel) for b in self.bodies]}")


def step(world: World, target: TargetState, n_control_ticks: int = 1) -> World:
    """Advance the world; controllers re-evaluate once per control tick."""
    from .contacts import resolve_contacts, read_tactile  # cycle-free at runtime

    cfg = world.cfg
    if target.joints.shape != (cfg.n_h,):
        raise ValueError(f"target joint dim {target.joints.shape} != {cfg.n_h}")
    dt = cfg.dt_physics
    joints_clamped = np.clip(target.joints, cfg.joint_limit_lo, cfg.joint_limit_hi)
    n_h = cfg.n_h

    for _ in range(n_control_ticks):
        tau = pd_joint_torque(joints_clamped, world.q, world.qdot,
                              cfg.joint_kp, cfg.joint_kd, cfg.tau_max)
        wrench = palm_impedance_wrench(target, world.palm_pos, world.palm_angle,
                                       world.palm_vel, world.palm_omega, cfg)
        contacts: list[Contact] = []
        for _ in range(cfg.substeps_per_tick):
            world.refresh_frames()
            contacts = resolve_contacts(world)
            gen = np.zeros(3 + n_h)
            body_force: dict[str, np.ndarray] = {}
            body_torque: dict[str, float] = {}
            for c in contacts:
                if c.station >= 0:
                    J = station_jacobian(cfg, world.layout, world.frames,
                                         world.palm_pos, c.station)
                    gen += J.T @ c.force
                    if c.body:
                        b = world.body(c.body)
                        body_force[c.body] = body_force.get(c.body, np.zeros(2)) - c.force
                        r = c.point - b.pos
                        body_torque[c.body] = body_torque.get(c.body, 0.0) + float(
                            r[0] * -c.force[1] - r[1] * -c.force[0])
                else:
                    b = world.body(c.body_a)
                    body_force[c.body_a] = body_force.get(c.body_a, np.zeros(2)) + c.force
                    r = c.point - b.pos
                    body_torque[c.body_a] = body_torque.get(c.body_a, 0.0) + float(
                        r[0] * c.force[1] - r[1] * c.force[0])

            if not world.palm_frozen:
                world.palm_vel = world.palm_vel + dt * (wrench[:2] + gen[:2]) / cfg.palm_mass
                world.palm_omega = world.palm_omega + dt * (wrench[2] + gen[2]) / cfg.palm_inertia
                world.palm_pos = world.palm_pos + dt * world.palm_vel
                world.palm_angle = world.palm_angle + dt * world.palm_omega
            world.qdot = world.qdot + dt * (tau + gen[3:]) / cfg.joint_inertia
            world.q = world.q + dt * world.qdot
            below = world.q < cfg.joint_limit_lo
            above = world.q > cfg.joint_limit_hi
            if below.any() or above.any():
                world.q = np.clip(world.q, cfg.joint_limit_lo, cfg.joint_limit_hi)
                world.qdot[below & (world.qdot < 0)] = 0.0
                world.qdot[above & (world.qdot > 0)] = 0.0
            for b in world.bodies:
                if b.static:
                    continue
                f = body_force.get(b.name, np.zeros(2))
                t = body_torque.get(b.name, 0.0)
                b.vel = b.vel + dt * (f / b.mass + np.array([0.0, cfg.gravity]))
                b.omega = b.omega + dt * t / b.inertia
                b.pos = b.pos + dt * b.vel
                b.angle = b.angle + dt * b.omega
            if np.isfinite(world.f_max) and not world.shattered:
                frame = read_tactile(world, contacts)
                if (np.linalg.norm(frame, axis=1) > world.f_max).any():
                    world.shattered = True

        world.refresh_frames()
        world.last_contacts = contacts
        world.tactile = read_tactile(world, contacts)
        world.t_ticks += 1
        if world.dirt_x.size:
            _update_wipe_progress(world, contacts)
        state = np.concatenate([world.palm_pos, [world.palm_angle, world.palm_omega],
                                world.palm_vel, world.q, world.qdot])
        if not np.isfinite(state).all():
            raise SimFault(f"non-finite robot state: {world._dump()}")
        for b in world.bodies:
            if not (np.isfinite(b.pos).all() and np.isfinite(b.vel).all()
                    and np.isfinite(b.angle) and np.isfinite(b.omega)):
                raise SimFault(f"non-finite body {b.name!r}: {world._dump()}")
    return world


def _update_wipe_progress(world: World, contacts: list[Contact]) -> None:
    """Clear dirt cells covered by the scrub pad while pressed onto the table."""
    try:
        pad = world.body("pad")
    except KeyError:
        return
    press = 0.0
    for c in contacts:
        if c.body_a == "pad" and c.body == "":
            press += abs(float(c.force @ c.normal))
    if press < world.wipe_press_min:
        return
    half_w = pad.size[0]
    lo, hi = pad.pos[0] - half_w, pad.pos[0] + half_w
    covered = (world.dirt_x >= lo) & (world.dirt_x <= hi)
    world.dirt_cleared |= covered
