#!/usr/bin/env python
# encoding: utf-8

"""RGB car intention image, the visual input of the network.

    R: obstacles (1.0), predicted exo paths (0.9^k), top particles (weight)
    G: planned ego path (1.0), goal disc (0.7)
    B: past ego poses (0.3 -> 1.0, most recent brightest), ego footprint (1.0)

The window is scene-fixed (north up) and centered on the ego. Overlapping
layers combine with max().
"""

import math
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from . import logging
from .belief import Belief, top_particles
from .file_utils import create_filename, mkdir_parent
from .pathplan import PlannedPath, Pose
from .world import Rect

logger = logging.get_logger(__name__, logging.DEBUG)

R, G, B = 0, 1, 2


class IntentionConfig(BaseModel):
    """Image geometry and channel intensities"""

    model_config = ConfigDict(frozen=True)

    size: int = Field(84, ge=2)
    window: float = Field(40.0, gt=0)
    pred_decay: float = 0.9
    top_particles: int = Field(3, ge=0)
    path_value: float = 1.0
    goal_value: float = 0.7
    goal_radius: float = 1.0
    past_poses: int = Field(8, ge=0)
    past_min: float = 0.3
    past_max: float = 1.0
    footprint: tuple[float, float] = (4.5, 1.8)


class _Frame:
    """World <-> pixel transform. Works on coordinates relative to the
    center, so that translating everything leaves the pixels unchanged."""

    def __init__(self, center: Sequence[float], cfg: IntentionConfig):
        self.cx, self.cy = float(center[0]), float(center[1])
        self.size = cfg.size
        self.half = cfg.window / 2.0
        self.px = cfg.window / cfg.size
        idx = np.arange(cfg.size) + 0.5
        self.xs = -self.half + idx * self.px  # per column
        self.ys = self.half - idx * self.px  # per row

    def pixels(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rows, cols, inside) of the points"""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        cols = np.floor((points[:, 0] - self.cx + self.half) / self.px).astype(int)
        rows = np.floor((self.half - (points[:, 1] - self.cy)) / self.px).astype(int)
        ok = (cols >= 0) & (cols < self.size) & (rows >= 0) & (rows < self.size)
        return rows, cols, ok

    def paint(self, channel: np.ndarray, points: np.ndarray, values) -> None:
        """channel[pixel] = max(channel[pixel], value)"""
        rows, cols, ok = self.pixels(points)
        values = np.broadcast_to(np.asarray(values, dtype=np.float32), ok.shape)
        np.maximum.at(channel, (rows[ok], cols[ok]), values[ok])

    def rect_mask(self, r: Rect) -> np.ndarray:
        cols = (r.xmin - self.cx <= self.xs) & (self.xs <= r.xmax - self.cx)
        rows = (r.ymin - self.cy <= self.ys) & (self.ys <= r.ymax - self.cy)
        return np.outer(rows, cols)

    def disc_mask(self, center: Sequence[float], radius: float) -> np.ndarray:
        dx = self.xs[None, :] - (center[0] - self.cx)
        dy = self.ys[:, None] - (center[1] - self.cy)
        return dx * dx + dy * dy <= radius * radius

    def box_mask(self, pose: Pose, length: float, width: float) -> np.ndarray:
        """Rotated rectangle centered on the pose"""
        dx = self.xs[None, :] - (pose.x - self.cx)
        dy = self.ys[:, None] - (pose.y - self.cy)
        cos_h, sin_h = math.cos(pose.heading), math.sin(pose.heading)
        along = dx * cos_h + dy * sin_h
        across = -dx * sin_h + dy * cos_h
        return (np.abs(along) <= length / 2.0) & (np.abs(across) <= width / 2.0)


def _densify(poses: Sequence[Pose], step: float) -> np.ndarray:
    """Points along the polyline, at most 'step' apart"""
    pts = [(p.x, p.y) for p in poses]
    if len(pts) < 2:
        return np.asarray(pts, dtype=float).reshape(-1, 2)

    rtn = []
    for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
        count = max(1, int(math.ceil(math.hypot(x1 - x0, y1 - y0) / step)))
        t = np.arange(count) / count
        rtn.append(np.stack([x0 + (x1 - x0) * t, y0 + (y1 - y0) * t], axis=1))
    rtn.append(np.asarray([pts[-1]], dtype=float))
    return np.concatenate(rtn)


def render_intention_image(
    b: Optional[Belief],
    ego_path: Optional[PlannedPath],
    past_poses: Sequence[Pose],
    preds: Optional[np.ndarray],
    obstacles: Sequence[Rect],
    cfg: None | IntentionConfig = None,
    *,
    center: None | Sequence[float] = None,
) -> np.ndarray:
    """(size, size, 3) float32 image with values in [0, 1]"""

    cfg = cfg or IntentionConfig()
    image = np.zeros((cfg.size, cfg.size, 3), dtype=np.float32)

    if center is None:
        if b is None:
            return image
        center = b.ego.pos

    frame = _Frame(center, cfg)

    for rect in obstacles:
        image[..., R][frame.rect_mask(rect)] = 1.0

    if preds is not None and np.size(preds):
        preds = np.asarray(preds, dtype=float)
        decay = cfg.pred_decay ** np.arange(preds.shape[1])
        for agent in preds:
            frame.paint(image[..., R], agent, decay)

    if b is not None and b.num_agents and cfg.top_particles:
        top = top_particles(b, cfg.top_particles)
        for i in range(b.num_agents):
            frame.paint(image[..., R], b.pos[top[:, i], i], b.weights[top[:, i], i])

    if ego_path is not None and ego_path.poses:
        frame.paint(image[..., G], _densify(ego_path.poses, frame.px / 2.0), cfg.path_value)

    if b is not None:
        disc = frame.disc_mask(b.ego.goal, cfg.goal_radius)
        image[..., G][disc] = np.maximum(image[..., G][disc], cfg.goal_value)

    past = list(past_poses)[-cfg.past_poses :] if cfg.past_poses else []
    if past:
        if len(past) == 1:
            ramp = np.array([cfg.past_max])
        else:
            ramp = np.linspace(cfg.past_min, cfg.past_max, len(past))
        frame.paint(image[..., B], [(p.x, p.y) for p in past], ramp)

    if b is not None:
        ego = Pose(b.ego.pos[0], b.ego.pos[1], b.ego.heading)
        image[..., B][frame.box_mask(ego, *cfg.footprint)] = 1.0

    return image


def save_png(image: np.ndarray, *paths):
    """8-bit RGB dump, value = round(255 * v)"""
    # pylint: disable=import-outside-toplevel
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    file = create_filename(*paths)
    mkdir_parent(file)
    with file.open("wb") as fd:
        plt.imsave(fd, data, format="png")

    logger.debug("Wrote intention image: %s", file)
    return file
