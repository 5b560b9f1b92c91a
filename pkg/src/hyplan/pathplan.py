#!/usr/bin/env python
# encoding: utf-8

"""Costmap and anytime weighted hybrid A* for the ego path"""

import math
import heapq
import itertools
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from . import logging
from .clock import Clock, WallClock
from .world import AgentState, Rect, normalize_heading

logger = logging.get_logger(__name__, logging.DEBUG)

SQRT2 = math.sqrt(2.0)


class PathPlanException(Exception):
    """PathPlanException"""


class NoPathException(PathPlanException):
    """The static map does not allow to reach the goal"""


class PathPlanConfig(BaseModel):
    """Costmap and hybrid A* settings"""

    model_config = ConfigDict(frozen=True)

    resolution: float = Field(0.2, gt=0)
    margin: float = Field(5.0, ge=0)
    pred_radius: float = 1.0
    pred_peak: float = 0.8
    pred_decay: float = 0.9
    heading_bins: int = Field(16, ge=4)
    steers: tuple[float, ...] = (-50.0, -25.0, 0.0, 25.0, 50.0)
    arc_length: float = Field(1.0, gt=0)
    check_step: float = Field(0.2, gt=0)
    cell_cost_weight: float = 5.0
    steer_change_weight: float = 0.02
    weights: tuple[float, ...] = (2.0, 1.5, 1.2, 1.0)
    budget_ms: float = Field(50.0, gt=0)
    max_expansions: int = Field(100_000, ge=1)
    wheelbase: float = Field(2.5, gt=0)
    d_goal: float = Field(2.0, gt=0)


class Pose(NamedTuple):
    """x, y in meters; heading in radians"""

    x: float
    y: float
    heading: float


class Costmap:
    """Grid of cell costs in [0, 1] plus a Blocked mask.

    Arrays are indexed [iy, ix]; cell (ix, iy) has its center at
    origin + (ix + 0.5, iy + 0.5) * resolution.
    """

    def __init__(
        self,
        origin: Sequence[float],
        resolution: float,
        cost: np.ndarray,
        blocked: np.ndarray,
    ):
        if cost.shape != blocked.shape:
            raise PathPlanException(f"Shape mismatch: {cost.shape} != {blocked.shape}")

        self.origin = (float(origin[0]), float(origin[1]))
        self.resolution = float(resolution)
        self.cost = cost
        self.blocked = blocked

    @property
    def height(self) -> int:
        return self.cost.shape[0]

    @property
    def width(self) -> int:
        return self.cost.shape[1]

    def index(self, x: float, y: float) -> tuple[int, int]:
        """(ix, iy) of the cell containing the point"""
        return (
            int(math.floor((x - self.origin[0]) / self.resolution)),
            int(math.floor((y - self.origin[1]) / self.resolution)),
        )

    def center(self, ix: int, iy: int) -> tuple[float, float]:
        return (
            self.origin[0] + (ix + 0.5) * self.resolution,
            self.origin[1] + (iy + 0.5) * self.resolution,
        )

    def inside(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """1D arrays of the x (columns) and y (rows) cell centers"""
        xs = self.origin[0] + (np.arange(self.width) + 0.5) * self.resolution
        ys = self.origin[1] + (np.arange(self.height) + 0.5) * self.resolution
        return xs, ys


def rasterize_rects(
    xs: np.ndarray, ys: np.ndarray, rects: Sequence[Rect]
) -> np.ndarray:
    """Mask [iy, ix] of all cells whose center lies inside any rectangle"""
    mask = np.zeros((len(ys), len(xs)), dtype=bool)
    for r in rects:
        cols = (r.xmin <= xs) & (xs <= r.xmax)
        rows = (r.ymin <= ys) & (ys <= r.ymax)
        mask |= np.outer(rows, cols)
    return mask


def build_costmap(
    ego_pos: Sequence[float],
    goal: Sequence[float],
    obstacles: Sequence[Rect],
    preds: None | np.ndarray,
    cfg: None | PathPlanConfig = None,
) -> Costmap:
    """Obstacles are Blocked. Cells within pred_radius of a predicted position
    at horizon step k cost max(existing, pred_peak * pred_decay^k)."""

    cfg = cfg or PathPlanConfig()
    res = cfg.resolution

    xmin, xmax = sorted((ego_pos[0], goal[0]))
    ymin, ymax = sorted((ego_pos[1], goal[1]))
    for r in obstacles:
        xmin, ymin = min(xmin, r.xmin), min(ymin, r.ymin)
        xmax, ymax = max(xmax, r.xmax), max(ymax, r.ymax)

    origin = (xmin - cfg.margin, ymin - cfg.margin)
    width = int(math.ceil((xmax + cfg.margin - origin[0]) / res))
    height = int(math.ceil((ymax + cfg.margin - origin[1]) / res))

    cmap = Costmap(origin, res, np.zeros((height, width)), np.zeros((height, width), bool))
    xs, ys = cmap.centers()
    cmap.blocked = rasterize_rects(xs, ys, obstacles)

    if preds is not None:
        radius = cfg.pred_radius
        span = int(math.ceil(radius / res)) + 1
        for agent in np.asarray(preds, dtype=float):
            for k, (px, py) in enumerate(agent):
                value = cfg.pred_peak * cfg.pred_decay**k
                cx, cy = cmap.index(px, py)
                x0, x1 = max(cx - span, 0), min(cx + span + 1, width)
                y0, y1 = max(cy - span, 0), min(cy + span + 1, height)
                if x0 >= x1 or y0 >= y1:
                    continue

                dx = xs[x0:x1][None, :] - px
                dy = ys[y0:y1][:, None] - py
                near = dx * dx + dy * dy <= radius * radius
                window = cmap.cost[y0:y1, x0:x1]
                window[near] = np.maximum(window[near], value)

    return cmap


class PlannedPath(NamedTuple):
    """Poses at the end of each motion primitive (first pose = start) and the
    steer label of every primitive. 'history' holds (weight, cost) of each
    improvement of the anytime search."""

    poses: tuple[Pose, ...]
    steers: tuple[float, ...]
    cost: float
    history: tuple[tuple[float, float], ...] = ()


def primitive_samples(pose: Pose, steer: float, cfg: PathPlanConfig) -> list[Pose]:
    """Poses every check_step along a constant curvature arc of arc_length"""

    count = max(1, int(round(cfg.arc_length / cfg.check_step)))
    kappa = math.tan(math.radians(steer)) / cfg.wheelbase
    x, y, h = pose
    sin_h, cos_h = math.sin(h), math.cos(h)

    rtn = []
    for j in range(1, count + 1):
        s = cfg.arc_length * j / count
        if kappa == 0.0:
            rtn.append(Pose(x + s * cos_h, y + s * sin_h, h))
        else:
            h2 = h + kappa * s
            rtn.append(
                Pose(
                    x + (math.sin(h2) - sin_h) / kappa,
                    y - (math.cos(h2) - cos_h) / kappa,
                    h2,
                )
            )
    return rtn


def heading_bin(heading: float, bins: int) -> int:
    """Bins are centered on multiples of 2pi / bins"""
    return int(round(normalize_heading(heading) / (2.0 * math.pi / bins))) % bins


def snap_pose(pose: Pose, cmap: Costmap, bins: int) -> Pose:
    """Cell center and heading bin center"""
    cx, cy = cmap.center(*cmap.index(pose.x, pose.y))
    return Pose(cx, cy, heading_bin(pose.heading, bins) * 2.0 * math.pi / bins)


def state_key(pose: Pose, steer_idx: int, cmap: Costmap, bins: int) -> tuple[int, int, int, int]:
    ix, iy = cmap.index(pose.x, pose.y)
    return ix, iy, heading_bin(pose.heading, bins), steer_idx


def successors(
    pose: Pose,
    prev_steer: float,
    cmap: Costmap,
    cfg: PathPlanConfig,
    lattice: bool = False,
) -> Iterator[tuple[int, Pose, float]]:
    """(steer index, end pose, step cost) of every valid motion primitive"""

    for idx, steer in enumerate(cfg.steers):
        samples = primitive_samples(pose, steer, cfg)
        cell_cost = 0.0
        for sample in samples:
            ix, iy = cmap.index(sample.x, sample.y)
            if not cmap.inside(ix, iy) or cmap.blocked[iy, ix]:
                break
            cell_cost += cmap.cost[iy, ix]
        else:
            end = samples[-1]
            if lattice:
                end = snap_pose(end, cmap, cfg.heading_bins)
                ix, iy = cmap.index(end.x, end.y)
                if not cmap.inside(ix, iy) or cmap.blocked[iy, ix]:
                    continue
            else:
                end = Pose(end.x, end.y, normalize_heading(end.heading))

            step = (
                cfg.arc_length
                + cfg.cell_cost_weight * cell_cost
                + cfg.steer_change_weight * abs(steer - prev_steer)
            )
            yield idx, end, step


def _nearest_steer_idx(steer: float, steers: Sequence[float]) -> int:
    return min(range(len(steers)), key=lambda i: abs(steers[i] - steer))


def hybrid_astar(
    start: Pose,
    goal: Sequence[float],
    cmap: Costmap,
    cfg: None | PathPlanConfig = None,
    *,
    clock: None | Clock = None,
    budget_ms: None | float = None,
    prev_steer: float = 0.0,
    lattice: bool = False,
) -> PlannedPath:
    """Anytime weighted hybrid A*.

    One search per weight of the schedule, each pruned by the best cost found
    so far. The budget only ends the schedule once a first path exists.
    With lattice=True successor poses are snapped to cell and heading-bin
    centers, which turns the search space into a finite graph.
    """

    cfg = cfg or PathPlanConfig()
    clock = clock or WallClock()
    budget_ms = cfg.budget_ms if budget_ms is None else budget_ms
    started = clock.now_ms()

    if lattice:
        start = snap_pose(start, cmap, cfg.heading_bins)

    gx, gy = float(goal[0]), float(goal[1])
    scale = 1.0 + SQRT2 * cmap.resolution

    def h1(pose: Pose) -> float:
        return max(0.0, math.hypot(pose.x - gx, pose.y - gy) - cfg.d_goal) / scale

    best: None | PlannedPath = None
    history: list[tuple[float, float]] = []
    expansions = 0
    counter = itertools.count()

    for weight in cfg.weights:
        if best is not None and clock.now_ms() - started > budget_ms:
            break

        # node: (pose, steer, parent index)
        nodes: list[tuple[Pose, float, int]] = [(start, prev_steer, -1)]
        start_key = state_key(start, _nearest_steer_idx(prev_steer, cfg.steers), cmap, cfg.heading_bins)
        best_g = {start_key: 0.0}
        open_list = [(weight * h1(start), next(counter), 0.0, 0, start_key)]
        found: None | tuple[float, int] = None

        while open_list:
            _f, _, g, node_id, key = heapq.heappop(open_list)
            if g > best_g.get(key, math.inf):
                continue

            pose, steer, _ = nodes[node_id]
            if math.hypot(pose.x - gx, pose.y - gy) <= cfg.d_goal:
                found = (g, node_id)
                break

            if best is not None and clock.now_ms() - started > budget_ms:
                break

            expansions += 1
            clock.charge("astar_expansion")
            if expansions > cfg.max_expansions:
                break

            for idx, child, step in successors(pose, steer, cmap, cfg, lattice):
                g2 = g + step
                h = h1(child)
                if best is not None and g2 + h >= best.cost:
                    continue

                child_key = state_key(child, idx, cmap, cfg.heading_bins)
                if g2 >= best_g.get(child_key, math.inf):
                    continue

                best_g[child_key] = g2
                nodes.append((child, cfg.steers[idx], node_id))
                heapq.heappush(open_list, (g2 + weight * h, next(counter), g2, len(nodes) - 1, child_key))

        if found is not None:
            cost, node_id = found
            poses: list[Pose] = []
            steers: list[float] = []
            while node_id >= 0:
                pose, steer, parent = nodes[node_id]
                poses.append(pose)
                if parent >= 0:
                    steers.append(steer)
                node_id = parent

            history.append((weight, cost))
            best = PlannedPath(tuple(reversed(poses)), tuple(reversed(steers)), cost, tuple(history))
            logger.debug("hybrid A*: w=%.2f cost=%.3f expansions=%d", weight, cost, expansions)

        elif best is None:
            if expansions > cfg.max_expansions:
                raise NoPathException(f"No path found within {cfg.max_expansions} expansions")
            raise NoPathException(f"No path from ({start.x:.2f}, {start.y:.2f}) to ({gx:.2f}, {gy:.2f})")

        if expansions > cfg.max_expansions:
            break

    assert best is not None
    return best


def extract_steering(path: PlannedPath, ego: None | AgentState = None) -> float:
    """Steer (degrees) of the first motion primitive; 0 for a single pose"""
    # pylint: disable=unused-argument
    return path.steers[0] if path.steers else 0.0
