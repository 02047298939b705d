"""Hand kinematics: frames, station layout, Jacobians vs finite differences, IK."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cgp.sim import WorldConfig, fingertip_fk, fingertip_ik, forward_hand, wrap_angle
from cgp.sim.kinematics import (
    build_layout,
    perp,
    station_jacobian,
    station_velocity,
)

CFG = WorldConfig()
LAYOUT = build_layout(CFG)


def _rand_pose(rng):
    palm_pos = rng.uniform(-0.1, 0.1, size=2)
    palm_angle = rng.uniform(-np.pi, np.pi)
    q = rng.uniform(-1.2, 1.2, size=CFG.n_h)
    return palm_pos, palm_angle, q


class TestPrimitives:
    def test_wrap_angle_range_and_identity(self):
        assert wrap_angle(0.3) == pytest.approx(0.3)
        assert wrap_angle(np.pi + 0.1) == pytest.approx(-np.pi + 0.1)
        assert wrap_angle(-np.pi - 0.1) == pytest.approx(np.pi - 0.1)

    @given(st.floats(-50.0, 50.0), st.integers(-5, 5))
    @settings(max_examples=60, deadline=None)
    def test_wrap_angle_periodic(self, a, k):
        w = wrap_angle(a + 2 * np.pi * k)
        assert -np.pi - 1e-9 <= w <= np.pi + 1e-9
        assert abs(wrap_angle(a) - w) < 1e-9 or abs(abs(wrap_angle(a) - w) - 2 * np.pi) < 1e-9

    def test_perp_rotates_ccw(self):
        np.testing.assert_allclose(perp(np.array([1.0, 0.0])), [0.0, 1.0])
        np.testing.assert_allclose(perp(np.array([0.0, 1.0])), [-1.0, 0.0])
        v = np.array([[1.0, 2.0], [-3.0, 0.5]])
        p = perp(v)
        np.testing.assert_allclose((v * p).sum(axis=1), 0.0, atol=1e-15)


class TestLayout:
    def test_station_count(self):
        assert CFG.n_stations == 80
        assert LAYOUT.finger.shape == (80,)
        assert LAYOUT.n_finger_stations == 72

    def test_finger_major_ordering(self):
        # station s = finger*24 + link*8 + unit, fractions centered per unit
        assert LAYOUT.finger[0] == 0 and LAYOUT.link[0] == 0
        assert LAYOUT.finger[23] == 0 and LAYOUT.link[23] == 2
        assert LAYOUT.finger[24] == 1 and LAYOUT.link[24] == 0
        assert LAYOUT.frac[0] == pytest.approx(0.5 / 8)
        assert LAYOUT.frac[7] == pytest.approx(7.5 / 8)

    def test_palm_units_flagged_and_sized(self):
        assert (LAYOUT.finger[72:] == -1).all()
        np.testing.assert_allclose(LAYOUT.radius[:72], CFG.unit_radius)
        np.testing.assert_allclose(LAYOUT.radius[72:], CFG.palm_unit_radius)

    def test_palm_units_stay_inside_palm_edge(self):
        xs = LAYOUT.palm_local[72:, 0]
        assert xs.min() >= -CFG.palm_half_width + CFG.palm_unit_radius - 1e-12
        assert xs.max() <= CFG.palm_half_width - CFG.palm_unit_radius + 1e-12


class TestForwardHand:
    def test_upright_palm_fingers_point_up(self):
        frames = forward_hand(CFG, LAYOUT, np.zeros(2), 0.0, np.zeros(CFG.n_h))
        np.testing.assert_allclose(frames.link_angle, np.pi / 2)
        for f, mount in enumerate(CFG.finger_mounts):
            np.testing.assert_allclose(frames.joint_pos[f, 0],
                                       [mount, CFG.palm_half_height], atol=1e-15)
            np.testing.assert_allclose(
                frames.tip_pos[f],
                [mount, CFG.palm_half_height + sum(CFG.link_lengths)], atol=1e-12)

    def test_flipped_palm_mirrors_mounts(self):
        # palm angle pi: mounts mirror in x and fingers hang downward
        pos = np.array([0.0, 0.16])
        frames = forward_hand(CFG, LAYOUT, pos, np.pi, np.zeros(CFG.n_h))
        np.testing.assert_allclose(frames.joint_pos[2, 0],
                                   [pos[0] - 0.06, pos[1] - CFG.palm_half_height],
                                   atol=1e-12)
        assert (frames.tip_pos[:, 1] < pos[1] - CFG.palm_half_height).all()

    def test_station_frames_orthonormal(self):
        rng = np.random.default_rng(3)
        frames = forward_hand(CFG, LAYOUT, *_rand_pose(rng))
        dots = (frames.station_tangent * frames.station_normal).sum(axis=1)
        np.testing.assert_allclose(dots, 0.0, atol=1e-14)
        np.testing.assert_allclose(np.linalg.norm(frames.station_tangent, axis=1), 1.0)

    def test_fingertip_fk_matches_frames(self):
        rng = np.random.default_rng(4)
        palm_pos, palm_angle, q = _rand_pose(rng)
        frames = forward_hand(CFG, LAYOUT, palm_pos, palm_angle, q)
        for f in range(CFG.n_fingers):
            tip = fingertip_fk(CFG, palm_pos, palm_angle, f, q[f * 3:(f + 1) * 3])
            np.testing.assert_allclose(tip, frames.tip_pos[f], atol=1e-12)


class TestStationJacobian:
    def test_matches_finite_differences(self):
        # columns of J are d(station)/d(palm x, y, angle, q_j)
        rng = np.random.default_rng(11)
        h = 1e-6
        for _ in range(5):
            palm_pos, palm_angle, q = _rand_pose(rng)
            frames = forward_hand(CFG, LAYOUT, palm_pos, palm_angle, q)
            for idx in rng.integers(0, CFG.n_stations, size=6):
                J = station_jacobian(CFG, LAYOUT, frames, palm_pos, int(idx))

                def pos_at(dp=np.zeros(2), da=0.0, dq=None):
                    qq = q if dq is None else q + dq
                    fr = forward_hand(CFG, LAYOUT, palm_pos + dp, palm_angle + da, qq)
                    return fr.station_pos[int(idx)]

                for col, (dp, da, dq) in enumerate(
                        [(np.array([h, 0.0]), 0.0, None),
                         (np.array([0.0, h]), 0.0, None),
                         (np.zeros(2), h, None)]):
                    num = (pos_at(dp, da, dq) - pos_at(-dp, -da, dq)) / (2 * h)
                    np.testing.assert_allclose(J[:, col], num, atol=1e-6)
                for j in range(CFG.n_h):
                    e = np.zeros(CFG.n_h)
                    e[j] = h
                    num = (pos_at(dq=e) - pos_at(dq=-e)) / (2 * h)
                    np.testing.assert_allclose(J[:, 3 + j], num, atol=1e-6)

    def test_station_velocity_equals_jacobian_product(self):
        rng = np.random.default_rng(7)
        palm_pos, palm_angle, q = _rand_pose(rng)
        frames = forward_hand(CFG, LAYOUT, palm_pos, palm_angle, q)
        palm_vel = rng.normal(size=2)
        omega = rng.normal()
        qdot = rng.normal(size=CFG.n_h)
        gen = np.concatenate([palm_vel, [omega], qdot])
        for idx in (0, 13, 47, 71, 75):
            J = station_jacobian(CFG, LAYOUT, frames, palm_pos, idx)
            v = station_velocity(CFG, LAYOUT, frames, palm_pos, palm_vel,
                                 omega, qdot, idx)
            np.testing.assert_allclose(v, J @ gen, atol=1e-12)

    def test_palm_station_has_no_joint_columns(self):
        frames = forward_hand(CFG, LAYOUT, np.zeros(2), 0.2, np.zeros(CFG.n_h))
        J = station_jacobian(CFG, LAYOUT, frames, np.zeros(2), 76)
        np.testing.assert_array_equal(J[:, 3:], np.zeros((2, CFG.n_h)))


class TestFingertipIk:
    def test_fixed_point(self):
        q0 = np.array([0.3, -0.2, 0.1])
        target = fingertip_fk(CFG, np.zeros(2), 0.0, 1, q0)
        q, residual = fingertip_ik(CFG, np.zeros(2), 0.0, 1, target, q0)
        np.testing.assert_array_equal(q, q0)
        assert residual < 1e-9

    def test_reachable_target(self):
        rng = np.random.default_rng(21)
        for trial in range(8):
            f = int(rng.integers(0, 3))
            q_goal = rng.uniform(-1.0, 1.0, size=3)
            palm_pos = rng.uniform(-0.05, 0.05, size=2)
            palm_angle = rng.uniform(-np.pi, np.pi)
            target = fingertip_fk(CFG, palm_pos, palm_angle, f, q_goal)
            q, residual = fingertip_ik(CFG, palm_pos, palm_angle, f, target,
                                       np.zeros(3))
            reached = fingertip_fk(CFG, palm_pos, palm_angle, f, q)
            assert np.linalg.norm(reached - target) < 1e-3, f"trial {trial}"
            assert residual < 1e-3

    def test_unreachable_target_residual_bound(self):
        target = np.array([1.0, 1.0])
        q, residual = fingertip_ik(CFG, np.zeros(2), 0.0, 0, target, np.zeros(3))
        base = np.array([CFG.finger_mounts[0], CFG.palm_half_height])
        reach = sum(CFG.link_lengths)
        assert residual >= np.linalg.norm(target - base) - reach - 1e-6
        assert (q >= CFG.joint_limit_lo[:3]).all()
        assert (q <= CFG.joint_limit_hi[:3]).all()

    def test_result_respects_joint_limits(self):
        cfg = WorldConfig(joint_limit_lo=np.full(9, -0.3),
                          joint_limit_hi=np.full(9, 0.3))
        target = np.array([0.06, 0.13])
        q, _ = fingertip_ik(cfg, np.zeros(2), 0.0, 2, target,
                            np.array([0.25, -0.25, 0.0]))
        assert (np.abs(q) <= 0.3 + 1e-12).all()

    def test_bad_finger_rejected(self):
        with pytest.raises(ValueError):
            fingertip_ik(CFG, np.zeros(2), 0.0, 5, np.zeros(2), np.zeros(3))
