"""Agent view rasterizer and observation packing."""
from __future__ import annotations

import numpy as np
import pytest

from cgp.sim import Body, World, WorldConfig, observe, render_agent_view, reset_task
from cgp.sim.render import SHADE_BODY


def _empty_view_world() -> World:
    """Nothing inside the render window: hand parked far away, no scene."""
    world = World(WorldConfig())
    world.palm_pos = np.array([10.0, 10.0])
    world.refresh_frames()
    return world


class TestRender:
    def test_empty_world_is_uniform_background(self):
        img = render_agent_view(_empty_view_world(), 32, 32)
        np.testing.assert_array_equal(img, np.zeros((32, 32)))

    def test_deterministic(self):
        world = reset_task("wipe", 3)
        np.testing.assert_array_equal(render_agent_view(world, 32, 32),
                                      render_agent_view(world, 32, 32))

    def test_values_bounded_and_shaped(self):
        for task in ("box_flip", "fragile_grasp", "wipe"):
            img = render_agent_view(reset_task(task, 0), 24, 40)
            assert img.shape == (24, 40)
            assert img.min() >= 0.0 and img.max() <= 1.0
            assert img.max() > 0.0  # the hand is in frame

    def test_circle_area_matches_analytic_value(self):
        world = _empty_view_world()
        r = 0.1
        world.bodies.append(Body(name="disk", shape="circle", size=(r,),
                                 mass=1.0, inertia=1.0,
                                 pos=np.array(world.cfg.render_center)))
        h = w = 64
        img = render_agent_view(world, h, w)
        px_size = 2 * world.cfg.render_half_extent / w
        count = int((img == SHADE_BODY).sum())
        expected = np.pi * (r / px_size) ** 2
        perimeter = 2 * np.pi * r / px_size
        assert abs(count - expected) <= 2 * perimeter

    def test_bad_dimensions_rejected(self):
        with pytest.raises(ValueError):
            render_agent_view(_empty_view_world(), 0, 32)


class TestObserve:
    def test_dimensions(self):
        obs = observe(reset_task("box_flip", 0))
        assert obs.state.shape == (13,)
        assert obs.tactile.shape == (80, 2)
        assert obs.image.shape == (32, 32)

    def test_state_layout(self):
        world = reset_task("fragile_grasp", 2)
        obs = observe(world)
        np.testing.assert_array_equal(obs.state[0:2], world.palm_pos)
        np.testing.assert_allclose(obs.state[2:4],
                                   [np.cos(world.palm_angle),
                                    np.sin(world.palm_angle)])
        np.testing.assert_array_equal(obs.state[4:], world.q)

    def test_fresh_reset_has_zero_tactile(self):
        for task in ("box_flip", "fragile_grasp", "wipe"):
            obs = observe(reset_task(task, 0))
            np.testing.assert_array_equal(obs.tactile, np.zeros((80, 2)))

    def test_purity(self):
        world = reset_task("wipe", 1)
        before = world.state_vector()
        a = observe(world)
        b = observe(world)
        np.testing.assert_array_equal(a.image, b.image)
        np.testing.assert_array_equal(a.tactile, b.tactile)
        np.testing.assert_array_equal(a.state, b.state)
        np.testing.assert_array_equal(world.state_vector(), before)

    def test_returns_copies(self):
        world = reset_task("box_flip", 5)
        obs = observe(world)
        obs.tactile[:] = 7.0
        obs.state[:] = -1.0
        assert world.tactile.max() == 0.0
        assert world.state_vector()[0] != -1.0
