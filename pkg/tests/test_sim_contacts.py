"""Penalty contact model and tactile readout against closed-form cases."""
from __future__ import annotations

import numpy as np
import pytest

from cgp.sim import (
    Body,
    Contact,
    Plane,
    World,
    WorldConfig,
    read_tactile,
    resolve_contacts,
    tactile_to_world,
)


def _bare_world(**cfg_kw) -> World:
    """World with the hand parked far outside any test geometry."""
    world = World(WorldConfig(**cfg_kw))
    world.palm_pos = np.array([10.0, 10.0])
    world.refresh_frames()
    return world


def _circle(name, pos, r=0.02, mass=0.05, vel=(0.0, 0.0)):
    return Body(name=name, shape="circle", size=(r,), mass=mass,
                inertia=0.5 * mass * r ** 2, pos=np.asarray(pos, float),
                vel=np.asarray(vel, float))


class TestResolveContacts:
    def test_separated_circles_yield_nothing(self):
        world = _bare_world()
        world.bodies.append(_circle("ball", [0.0, 0.5]))
        assert resolve_contacts(world) == []

    def test_station_circle_overlap_detected(self):
        world = World(WorldConfig())
        world.refresh_frames()
        s = 12
        p = world.frames.station_pos[s]
        n = world.frames.station_normal[s]
        r_ball, pen = 0.004, 0.0005
        world.bodies.append(_circle(
            "ball", p + (world.layout.radius[s] + r_ball - pen) * n, r=r_ball))
        contacts = resolve_contacts(world)
        assert len(contacts) == 1
        c = contacts[0]
        assert c.station == s and c.body == "ball"
        assert c.penetration == pytest.approx(pen, rel=1e-9)
        np.testing.assert_allclose(np.linalg.norm(c.normal), 1.0)

    def test_resting_circle_on_plane_is_pure_stiffness(self):
        # v = 0 kills the cn and friction terms, leaving f_n = kn * d
        world = _bare_world()
        world.planes.append(Plane(np.array([0.0, 1.0]), 0.0))
        d = 2e-4
        world.bodies.append(_circle("ball", [0.0, 0.02 - d], r=0.02))
        contacts = [c for c in resolve_contacts(world) if c.body_a == "ball"]
        assert len(contacts) == 1
        c = contacts[0]
        assert c.penetration == pytest.approx(d, rel=1e-12)
        np.testing.assert_allclose(c.force, [0.0, world.cfg.kn * d], rtol=1e-12)

    def test_approaching_contact_adds_normal_damping(self):
        world = _bare_world()
        world.planes.append(Plane(np.array([0.0, 1.0]), 0.0))
        d, v = 2e-4, 0.05
        world.bodies.append(_circle("ball", [0.0, 0.02 - d], r=0.02, vel=(0.0, -v)))
        c = [c for c in resolve_contacts(world) if c.body_a == "ball"][0]
        assert c.force @ c.normal == pytest.approx(world.cfg.kn * d + world.cfg.cn * v)

    def test_separating_contact_has_no_damping_term(self):
        world = _bare_world()
        world.planes.append(Plane(np.array([0.0, 1.0]), 0.0))
        d = 2e-4
        world.bodies.append(_circle("ball", [0.0, 0.02 - d], r=0.02, vel=(0.0, 0.05)))
        c = [c for c in resolve_contacts(world) if c.body_a == "ball"][0]
        assert c.force @ c.normal == pytest.approx(world.cfg.kn * d)

    def test_sliding_friction_inside_cone_and_opposing(self):
        world = _bare_world()
        world.planes.append(Plane(np.array([0.0, 1.0]), 0.0))
        world.bodies.append(_circle("ball", [0.0, 0.02 - 2e-4], r=0.02,
                                    vel=(0.05, 0.0)))
        c = [c for c in resolve_contacts(world) if c.body_a == "ball"][0]
        t = np.array([-c.normal[1], c.normal[0]])
        f_n, f_t = c.force @ c.normal, c.force @ t
        v_t = np.array([0.05, 0.0]) @ t
        assert abs(f_t) <= world.cfg.mu * abs(f_n) + 1e-9
        assert f_t * v_t < 0.0

    def test_fast_slide_saturates_friction_cone(self):
        world = _bare_world()
        world.planes.append(Plane(np.array([0.0, 1.0]), 0.0))
        world.bodies.append(_circle("ball", [0.0, 0.02 - 2e-4], r=0.02,
                                    vel=(2.0, 0.0)))
        c = [c for c in resolve_contacts(world) if c.body_a == "ball"][0]
        t = np.array([-c.normal[1], c.normal[0]])
        ratio = abs(c.force @ t) / (world.cfg.mu * (c.force @ c.normal))
        assert ratio == pytest.approx(1.0, rel=1e-6)

    def test_box_corner_plane_contact(self):
        world = _bare_world()
        world.planes.append(Plane(np.array([0.0, 1.0]), 0.0))
        d = 1e-4
        world.bodies.append(Body(name="pad", shape="box", size=(0.03, 0.011),
                                 mass=0.1, inertia=1e-4,
                                 pos=np.array([0.0, 0.011 - d])))
        contacts = [c for c in resolve_contacts(world) if c.body_a == "pad"]
        assert len(contacts) == 2  # both bottom corners
        for c in contacts:
            assert c.penetration == pytest.approx(d, rel=1e-9)
            assert c.station == -1


class TestReadTactile:
    def test_no_contacts_all_zero(self):
        world = World(WorldConfig())
        world.refresh_frames()
        frame = read_tactile(world, [])
        np.testing.assert_array_equal(frame, np.zeros((80, 2)))

    def test_single_contact_lands_on_its_station(self):
        world = World(WorldConfig())
        world.refresh_frames()
        s = 12
        p = world.frames.station_pos[s]
        n = world.frames.station_normal[s]
        world.bodies.append(_circle(
            "ball", p + (world.layout.radius[s] + 0.004 - 5e-4) * n, r=0.004))
        frame = read_tactile(world, resolve_contacts(world))
        nonzero = np.nonzero(np.linalg.norm(frame, axis=1))[0]
        np.testing.assert_array_equal(nonzero, [s])
        assert world.layout.link[s] == 1  # middle link of finger 0

    def test_local_decomposition_of_fabricated_contact(self):
        world = World(WorldConfig())
        world.refresh_frames()
        s = 30
        f = np.array([0.7, -0.4])
        c = Contact(point=world.frames.station_pos[s],
                    normal=np.array([0.0, 1.0]), penetration=1e-4,
                    force=f, station=s)
        frame = read_tactile(world, [c])
        assert frame[s, 0] == pytest.approx(f @ world.frames.station_normal[s])
        assert frame[s, 1] == pytest.approx(f @ world.frames.station_tangent[s])

    def test_contacts_on_same_station_sum(self):
        world = World(WorldConfig())
        world.refresh_frames()
        s = 5
        f = np.array([0.2, 0.3])
        c = Contact(point=world.frames.station_pos[s], normal=np.array([0.0, 1.0]),
                    penetration=0.0, force=f, station=s)
        frame = read_tactile(world, [c, c])
        np.testing.assert_allclose(
            tactile_to_world(world, frame)[s], 2 * f, atol=1e-12)

    def test_scene_only_contacts_ignored(self):
        world = World(WorldConfig())
        world.refresh_frames()
        c = Contact(point=np.zeros(2), normal=np.array([0.0, 1.0]),
                    penetration=1e-4, force=np.array([0.0, 1.0]),
                    station=-1, body_a="ball")
        np.testing.assert_array_equal(read_tactile(world, [c]),
                                      np.zeros((80, 2)))

    def test_world_round_trip(self):
        rng = np.random.default_rng(9)
        world = World(WorldConfig())
        world.palm_pos = rng.normal(size=2) * 0.05
        world.palm_angle = rng.uniform(-np.pi, np.pi)
        world.q = rng.uniform(-1.0, 1.0, size=9)
        world.refresh_frames()
        frame = rng.normal(size=(80, 2))
        forces = tactile_to_world(world, frame)
        back = np.stack([
            (forces * world.frames.station_normal).sum(axis=1),
            (forces * world.frames.station_tangent).sum(axis=1),
        ], axis=1)
        np.testing.assert_allclose(back, frame, atol=1e-12)
