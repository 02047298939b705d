"""Low-resolution agent view: filled-shape rasterizer over a fixed window."""
from __future__ import annotations

import numpy as np

from .kinematics import rot2
from .world import World

# draw order fixes occlusion; later entries paint over earlier ones
SHADE_TABLE = 0.25
SHADE_BODY = 0.6
SHADE_PALM = 0.85
SHADE_LINK = 1.0
LINK_HALF_WIDTH = 0.008


def _pixel_grid(world: World, h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    cx, cy = world.cfg.render_center
    he = world.cfg.render_half_extent
    xs = cx - he + (np.arange(w) + 0.5) * (2 * he / w)
    ys = cy + he - (np.arange(h) + 0.5) * (2 * he / h)
    return np.meshgrid(xs, ys)


def _circle_mask(px, py, center, radius):
    return (px - center[0]) ** 2 + (py - center[1]) ** 2 <= radius ** 2


def _box_mask(px, py, center, angle, half_w, half_h):
    dx, dy = px - center[0], py - center[1]
    c, s = np.cos(angle), np.sin(angle)
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    return (np.abs(lx) <= half_w) & (np.abs(ly) <= half_h)


def _segment_mask(px, py, a, b, half_width):
    ab = b - a
    denom = float(ab @ ab)
    dx, dy = px - a[0], py - a[1]
    if denom < 1e-16:
        return dx ** 2 + dy ** 2 <= half_width ** 2
    t = np.clip((dx * ab[0] + dy * ab[1]) / denom, 0.0, 1.0)
    qx = a[0] + t * ab[0] - px
    qy = a[1] + t * ab[1] - py
    return qx ** 2 + qy ** 2 <= half_width ** 2


def render_agent_view(world: World, h: int = 32, w: int = 32) -> np.ndarray:
    """Grayscale view in [0,1]; background is exactly 0."""
    if h <= 0 or w <= 0:
        raise ValueError("image dimensions must be positive")
    px, py = _pixel_grid(world, h, w)
    img = np.zeros((h, w))

    for plane in world.planes:
        below = px * plane.normal[0] + py * plane.normal[1] - plane.offset <= 0
        img[below] = SHADE_TABLE
    for body in world.bodies:
        if body.shape == "circle":
            mask = _circle_mask(px, py, body.pos, body.size[0])
        else:
            mask = _box_mask(px, py, body.pos, body.angle, *body.size)
        img[mask] = SHADE_BODY

    cfg = world.cfg
    palm_mask = _box_mask(px, py, world.palm_pos, world.palm_angle,
                          cfg.palm_half_width, cfg.palm_half_height)
    img[palm_mask] = SHADE_PALM

    frames = world.frames
    lengths = np.asarray(cfg.link_lengths)
    for f in range(cfg.n_fingers):
        for l in range(cfg.links_per_finger):
            a = frames.joint_pos[f, l]
            ang = frames.link_angle[f, l]
            b = a + lengths[l] * np.array([np.cos(ang), np.sin(ang)])
            img[_segment_mask(px, py, a, b, LINK_HALF_WIDTH)] = SHADE_LINK
    return img
