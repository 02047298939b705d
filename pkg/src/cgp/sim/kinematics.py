"""Planar hand kinematics: frames, station layout, Jacobians, fingertip IK.

The hand is a rigid palm carrying n_fingers revolute chains. Every sensing
station doubles as contact geometry (a small circle), so contact points,
tactile readout, and force transmission all share one set of frames.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def rot2(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def perp(v: np.ndarray) -> np.ndarray:
    """90-degree counterclockwise rotation, works on (..., 2) arrays."""
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


def wrap_angle(a: float) -> float:
    return float(np.arctan2(np.sin(a), np.cos(a)))


@dataclass
class StationLayout:
    """Precomputed per-station indexing for one hand configuration.

    Stations 0..n_fingers*links_per_finger*units_per_link-1 sit on finger
    links (ordered finger-major, then link, then unit); the remaining
    palm_units sit along the palm's working edge.
    """
    finger: np.ndarray        # (n_stations,) finger index, -1 for palm units
    link: np.ndarray          # (n_stations,) link index within finger, -1 for palm
    frac: np.ndarray          # (n_stations,) position along link in [0,1]
    palm_local: np.ndarray    # (n_stations, 2) palm-frame position for palm units
    radius: np.ndarray        # (n_stations,) contact radius per station
    n_finger_stations: int


def build_layout(cfg) -> StationLayout:
    nf, nl, nu = cfg.n_fingers, cfg.links_per_finger, cfg.units_per_link
    n_fs = nf * nl * nu
    n = n_fs + cfg.palm_units
    finger = np.full(n, -1, dtype=np.int64)
    link = np.full(n, -1, dtype=np.int64)
    frac = np.zeros(n)
    palm_local = np.zeros((n, 2))
    radius = np.full(n, cfg.unit_radius)
    s = 0
    for f in range(nf):
        for l in range(nl):
            for u in range(nu):
                finger[s] = f
                link[s] = l
                frac[s] = (u + 0.5) / nu
                s += 1
    # palm units span the working edge, centered on the mount row
    span = cfg.palm_half_width - cfg.palm_unit_radius
    xs = np.linspace(-span, span, cfg.palm_units)
    for i in range(cfg.palm_units):
        palm_local[s] = (xs[i], cfg.palm_half_height)
        radius[s] = cfg.palm_unit_radius
        s += 1
    return StationLayout(finger, link, frac, palm_local, radius, n_fs)


@dataclass
class HandFrames:
    """World-frame kinematic snapshot of the whole hand."""
    joint_pos: np.ndarray      # (n_fingers, links_per_finger, 2) joint pivots
    link_angle: np.ndarray     # (n_fingers, links_per_finger) absolute angles
    tip_pos: np.ndarray        # (n_fingers, 2) fingertip points
    station_pos: np.ndarray    # (n_stations, 2)
    station_tangent: np.ndarray  # (n_stations, 2) unit axis of the carrying link
    station_normal: np.ndarray   # (n_stations, 2) perp of tangent


def forward_hand(cfg, layout: StationLayout, palm_pos: np.ndarray,
                 palm_angle: float, q: np.ndarray) -> HandFrames:
    nf, nl = cfg.n_fingers, cfg.links_per_finger
    R = rot2(palm_angle)
    mounts = np.asarray(cfg.finger_mounts)          # (nf,) palm-frame x offsets
    lengths = np.asarray(cfg.link_lengths)          # (nl,)
    qm = q.reshape(nf, nl)

    # absolute link angles: palm angle + straight-up reference + joint cumsum
    link_angle = palm_angle + np.pi / 2.0 + np.cumsum(qm, axis=1)
    u = np.stack([np.cos(link_angle), np.sin(link_angle)], axis=-1)  # (nf,nl,2)

    base = palm_pos + (R @ np.stack(
        [mounts, np.full(nf, cfg.palm_half_height)], axis=0)).T      # (nf,2)
    joint_pos = np.empty((nf, nl, 2))
    joint_pos[:, 0] = base
    for l in range(1, nl):
        joint_pos[:, l] = joint_pos[:, l - 1] + lengths[l - 1] * u[:, l - 1]
    tip_pos = joint_pos[:, nl - 1] + lengths[nl - 1] * u[:, nl - 1]

    n = layout.finger.shape[0]
    station_pos = np.empty((n, 2))
    station_tangent = np.empty((n, 2))
    fs = layout.n_finger_stations
    fi, li = layout.finger[:fs], layout.link[:fs]
    station_pos[:fs] = (joint_pos[fi, li]
                        + (layout.frac[:fs, None] * lengths[li, None]) * u[fi, li])
    station_tangent[:fs] = u[fi, li]
    station_pos[fs:] = palm_pos + layout.palm_local[fs:] @ R.T
    station_tangent[fs:] = R[:, 0]
    return HandFrames(joint_pos, link_angle, tip_pos, station_pos,
                      station_tangent, perp(station_tangent))


def station_jacobian(cfg, layout: StationLayout, frames: HandFrames,
                     palm_pos: np.ndarray, idx: int) -> np.ndarray:
    """Jacobian (2, 3 + n_h) of one station's world velocity wrt
    [palm vx, vy, omega, qdot_0..qdot_{n_h-1}]."""
    nl = cfg.links_per_finger
    n_h = cfg.n_fingers * nl
    J = np.zeros((2, 3 + n_h))
    p = frames.station_pos[idx]
    J[0, 0] = J[1, 1] = 1.0
    J[:, 2] = perp(p - palm_pos)
    f, l = layout.finger[idx], layout.link[idx]
    if f >= 0:
        for j in range(l + 1):
            J[:, 3 + f * nl + j] = perp(p - frames.joint_pos[f, j])
    return J


def station_velocity(cfg, layout: StationLayout, frames: HandFrames,
                     palm_pos: np.ndarray, palm_vel: np.ndarray,
                     palm_omega: float, qdot: np.ndarray, idx: int) -> np.ndarray:
    nl = cfg.links_per_finger
    p = frames.station_pos[idx]
    v = palm_vel + palm_omega * perp(p - palm_pos)
    f, l = layout.finger[idx], layout.link[idx]
    if f >= 0:
        for j in range(l + 1):
            v = v + qdot[f * nl + j] * perp(p - frames.joint_pos[f, j])
    return v


def fingertip_fk(cfg, palm_pos: np.ndarray, palm_angle: float,
                 finger_id: int, q_finger: np.ndarray) -> np.ndarray:
    """World position of one fingertip from its joint angles alone."""
    lengths = np.asarray(cfg.link_lengths)
    ang = palm_angle + np.pi / 2.0 + np.cumsum(q_finger)
    R = rot2(palm_angle)
    base = palm_pos + R @ np.array([cfg.finger_mounts[finger_id],
                                    cfg.palm_half_height])
    return base + np.stack([np.cos(ang), np.sin(ang)], axis=-1).T @ lengths


def _tip_jacobian(cfg, palm_angle: float, q_finger: np.ndarray) -> np.ndarray:
    lengths = np.asarray(cfg.link_lengths)
    ang = palm_angle + np.pi / 2.0 + np.cumsum(q_finger)
    seg = lengths[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    J = np.zeros((2, len(q_finger)))
    for j in range(len(q_finger)):
        J[:, j] = perp(seg[j:].sum(axis=0))
    return J


def fingertip_ik(cfg, palm_pos: np.ndarray, palm_angle: float, finger_id: int,
                 target_xy: np.ndarray, q_init: np.ndarray,
                 iters: int = 80, damping: float = 0.05) -> tuple[np.ndarray, float]:
    """Damped-least-squares IK for one finger; returns (joints, residual).

    Unreachable targets settle on the closest-point iterate; the residual
    reports the remaining gap so callers can decide what to do with it.
    """
    if not (0 <= finger_id < cfg.n_fingers):
        raise ValueError(f"finger_id {finger_id} out of range")
    nl = cfg.links_per_finger
    sl = slice(finger_id * nl, (finger_id + 1) * nl)
    lo, hi = cfg.joint_limit_lo[sl], cfg.joint_limit_hi[sl]
    q = np.clip(np.asarray(q_init, dtype=float).copy(), lo, hi)
    target = np.asarray(target_xy, dtype=float)
    best_q, best_err = q.copy(), np.inf
    for _ in range(iters):
        err = target - fingertip_fk(cfg, palm_pos, palm_angle, finger_id, q)
        en = float(np.linalg.norm(err))
        if en < best_err:
            best_q, best_err = q.copy(), en
        if en < 1e-10:
            break
        J = _tip_jacobian(cfg, palm_angle, q)
        # error-scaled damping: stiff far out, near-Newton close to the goal
        # (a fixed lambda crawls along the weak axis of nearly straight fingers)
        lam = max(1e-4, min(damping, en))
        A = J @ J.T + (lam ** 2) * np.eye(2)
        dq = J.T @ np.linalg.solve(A, err)
        dn = float(np.linalg.norm(dq))
        if dn > 0.5:
            dq *= 0.5 / dn
        q = np.clip(q + dq, lo, hi)
    return best_q, best_err


def solve_station_tips(cfg, palm_pos, palm_angle: float, base_joints,
                       tips: dict[int, np.ndarray]) -> np.ndarray:
    """Joint vector placing each finger's outermost contact station.

    The last station center sits one half-spacing short of the link tip,
    so the tip target is extended along the distal link direction until
    the station lands on the request. Two correction passes suffice.
    """
    palm_pos = np.asarray(palm_pos, dtype=float)
    # distance from link tip back to the outermost station center
    setback = cfg.link_lengths[-1] / (2 * cfg.units_per_link)
    nl = cfg.links_per_finger
    q = np.asarray(base_joints, dtype=float).copy()
    for finger, target in tips.items():
        sl = slice(finger * nl, (finger + 1) * nl)
        tip_target = np.asarray(target, dtype=float)
        for _ in range(3):
            q[sl], residual = fingertip_ik(cfg, palm_pos, palm_angle, finger,
                                           tip_target, q[sl])
            link_angle = palm_angle + np.pi / 2 + np.sum(q[sl])
            tip_target = target + setback * np.array(
                [np.cos(link_angle), np.sin(link_angle)])
        if residual > 2e-3:
            raise RuntimeError(
                f"finger {finger} cannot reach {target} (residual {residual:.4f})")
    return q
