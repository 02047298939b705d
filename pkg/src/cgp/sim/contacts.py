"""Penalty contacts with regularized Coulomb friction, and tactile readout.

Geometry is deliberately small: robot contact geometry is exactly the set
of station circles, objects are circles or oriented boxes, and the static
scene is half-planes. Bodies collide with stations and planes; body-body
pairs are not checked (scenes hold one dynamic object).
"""
from __future__ import annotations

import numpy as np

from .kinematics import perp, rot2, station_velocity
from .world import Body, Contact, World


def _contact_force(kn: float, cn: float, mu: float, v_reg: float, dt: float,
                   pen: float, n: np.ndarray, v_rel: np.ndarray,
                   m_eff: float) -> np.ndarray:
    """Force on side a given penetration, normal toward side a, and the
    relative velocity of side a with respect to side b at the point.

    The friction clamp is evaluated at the semi-implicitly updated slip
    velocity v_t / (1 + c dt / m_eff): at the regularization slope
    c = mu f_n / v_reg an explicit evaluation is unstable for light
    bodies at this timestep, while the implicit one sticks cleanly and
    matches the explicit law wherever the slope is benign.
    """
    v_n = float(v_rel @ n)
    f_n = kn * pen + cn * max(0.0, -v_n)
    t = perp(n)
    v_t = float(v_rel @ t)
    c = mu * f_n / v_reg
    if m_eff > 0.0 and c > 0.0:
        v_t = v_t / (1.0 + c * dt / m_eff)
    f_t = -mu * f_n * np.clip(v_t / v_reg, -1.0, 1.0)
    return f_n * n + f_t * t


def _station_body_candidates(world: World, body: Body):
    """Yield (station_idx, penetration, normal, point) for one body."""
    sp = world.frames.station_pos
    r = world.layout.radius
    if body.shape == "circle":
        br = body.size[0]
        delta = sp - body.pos
        dist = np.linalg.norm(delta, axis=1)
        hit = dist < r + br
        for i in np.nonzero(hit)[0]:
            d = dist[i]
            n = delta[i] / d if d > 1e-12 else np.array([0.0, 1.0])
            pen = r[i] + br - d
            point = body.pos + (br - 0.5 * pen) * n
            yield int(i), float(pen), n, point
    elif body.shape == "box":
        hw, hh = body.size
        R = rot2(body.angle)
        local = (sp - body.pos) @ R    # R^T applied row-wise
        cp = np.clip(local, [-hw, -hh], [hw, hh])
        delta = local - cp
        dist = np.linalg.norm(delta, axis=1)
        inside = dist < 1e-12
        hit = (dist < r) | inside
        for i in np.nonzero(hit)[0]:
            if inside[i]:
                # center swallowed by the box: exit along the shallower face
                dx = hw - abs(local[i, 0])
                dy = hh - abs(local[i, 1])
                if dx < dy:
                    n_local = np.array([np.sign(local[i, 0]) or 1.0, 0.0])
                    pen = r[i] + dx
                else:
                    n_local = np.array([0.0, np.sign(local[i, 1]) or 1.0])
                    pen = r[i] + dy
                surf = local[i] + (pen - r[i]) * n_local
            else:
                n_local = delta[i] / dist[i]
                pen = r[i] - dist[i]
                surf = cp[i]
            n = R @ n_local
            point = body.pos + R @ surf
            yield int(i), float(pen), n, point
    else:
        raise ValueError(f"unknown body shape {body.shape!r}")


def _body_point_vel(body: Body, point: np.ndarray) -> np.ndarray:
    if body.static:
        return np.zeros(2)
    return body.vel + body.omega * perp(point - body.pos)


def _robot_inv_mass(world: World, idx: int, t: np.ndarray) -> float:
    """Inverse effective mass of the robot along direction t at station idx."""
    from .kinematics import station_jacobian
    cfg = world.cfg
    J = station_jacobian(cfg, world.layout, world.frames, world.palm_pos, idx)
    jt = t @ J
    inv = (jt[0] ** 2 + jt[1] ** 2) / cfg.palm_mass + jt[2] ** 2 / cfg.palm_inertia
    inv += float(jt[3:] @ jt[3:]) / cfg.joint_inertia
    return inv


def _body_inv_mass(body: Body, point: np.ndarray, t: np.ndarray) -> float:
    if body.static:
        return 0.0
    r = point - body.pos
    cross = r[0] * t[1] - r[1] * t[0]
    return 1.0 / body.mass + cross ** 2 / body.inertia


def _box_corners(body: Body) -> np.ndarray:
    hw, hh = body.size
    R = rot2(body.angle)
    local = np.array([[hw, hh], [-hw, hh], [-hw, -hh], [hw, -hh]])
    return body.pos + local @ R.T


def resolve_contacts(world: World) -> list[Contact]:
    cfg = world.cfg
    contacts: list[Contact] = []
    kn, cn, mu, v_reg = cfg.kn, cfg.cn, cfg.mu, cfg.v_reg
    dt = cfg.dt_physics

    for body in world.bodies:
        for idx, pen, n, point in _station_body_candidates(world, body):
            v_s = station_velocity(cfg, world.layout, world.frames,
                                   world.palm_pos, world.palm_vel,
                                   world.palm_omega, world.qdot, idx)
            v_rel = v_s - _body_point_vel(body, point)
            t = perp(n)
            inv = _robot_inv_mass(world, idx, t) + _body_inv_mass(body, point, t)
            f = _contact_force(kn, cn, mu, v_reg, dt, pen, n, v_rel,
                               1.0 / inv if inv > 0 else 0.0)
            contacts.append(Contact(point=point, normal=n, penetration=pen,
                                    force=f, station=idx, body=body.name))

    sp = world.frames.station_pos
    r = world.layout.radius
    for plane in world.planes:
        sd = sp @ plane.normal - plane.offset
        hit = sd < r
        for i in np.nonzero(hit)[0]:
            pen = float(r[i] - sd[i])
            point = sp[i] - sd[i] * plane.normal
            v_s = station_velocity(cfg, world.layout, world.frames,
                                   world.palm_pos, world.palm_vel,
                                   world.palm_omega, world.qdot, int(i))
            t = perp(plane.normal)
            inv = _robot_inv_mass(world, int(i), t)
            f = _contact_force(kn, cn, mu, v_reg, dt, pen, plane.normal, v_s,
                               1.0 / inv if inv > 0 else 0.0)
            contacts.append(Contact(point=point, normal=plane.normal.copy(),
                                    penetration=pen, force=f, station=int(i)))

        for body in world.bodies:
            if body.static:
                continue
            if body.shape == "circle":
                br = body.size[0]
                d = float(body.pos @ plane.normal - plane.offset)
                if d < br:
                    pen = br - d
                    point = body.pos - d * plane.normal
                    v_rel = _body_point_vel(body, point)
                    t = perp(plane.normal)
                    inv = _body_inv_mass(body, point, t)
                    f = _contact_force(kn, cn, mu, v_reg, dt, pen,
                                       plane.normal, v_rel,
                                       1.0 / inv if inv > 0 else 0.0)
                    contacts.append(Contact(point=point, normal=plane.normal.copy(),
                                            penetration=pen, force=f,
                                            body_a=body.name))
            else:
                for corner in _box_corners(body):
                    d = float(corner @ plane.normal - plane.offset)
                    if d < 0.0:
                        pen = -d
                        v_rel = _body_point_vel(body, corner)
                        t = perp(plane.normal)
                        inv = _body_inv_mass(body, corner, t)
                        f = _contact_force(kn, cn, mu, v_reg, dt, pen,
                                           plane.normal, v_rel,
                                           1.0 / inv if inv > 0 else 0.0)
                        contacts.append(Contact(point=corner.copy(),
                                                normal=plane.normal.copy(),
                                                penetration=pen, force=f,
                                                body_a=body.name))
    return contacts


def read_tactile(world: World, contacts: list[Contact]) -> np.ndarray:
    """Per-station force sums in each unit's (normal, tangential) frame."""
    frame = np.zeros((world.cfg.n_stations, 2))
    tan = world.frames.station_tangent
    nor = world.frames.station_normal
    for c in contacts:
        s = c.station
        if s < 0:
            continue
        frame[s, 0] += float(c.force @ nor[s])
        frame[s, 1] += float(c.force @ tan[s])
    return frame


def tactile_to_world(world: World, frame: np.ndarray) -> np.ndarray:
    """Invert the local decomposition; returns (n_stations, 2) world forces."""
    return (frame[:, 0:1] * world.frames.station_normal
            + frame[:, 1:2] * world.frames.station_tangent)
