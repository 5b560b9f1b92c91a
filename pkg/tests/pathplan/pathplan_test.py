#!/usr/bin/env python
# -*- coding: utf-8 -*-

# pylint: disable=missing-function-docstring, missing-module-docstring

import heapq
import itertools
import math

import numpy as np
import pytest

from hyplan.clock import ClockConfig, VirtualClock
from hyplan.pathplan import (
    Costmap,
    NoPathException,
    PathPlanConfig,
    PlannedPath,
    Pose,
    build_costmap,
    extract_steering,
    hybrid_astar,
    snap_pose,
    state_key,
    successors,
)
from hyplan.world import Rect


def test_costmap():
    preds = np.array([[(20.0, 0.0), (30.0, 0.0), (40.0, 0.0)]])
    cfg = PathPlanConfig()
    cmap = build_costmap((0.0, -1.5), (60.0, -1.5), [Rect(10, -5, 12, -3)], preds, cfg)

    ix, iy = cmap.index(11.0, -4.0)
    assert cmap.blocked[iy, ix]
    ix, iy = cmap.index(11.0, 0.0)
    assert not cmap.blocked[iy, ix]

    for k, (x, y) in enumerate(preds[0]):
        ix, iy = cmap.index(x + 0.05, y + 0.05)
        assert cmap.cost[iy, ix] == pytest.approx(cfg.pred_peak * cfg.pred_decay**k)

    ix, iy = cmap.index(25.0, 0.0)
    assert cmap.cost[iy, ix] == 0.0
    assert cmap.cost.max() == pytest.approx(cfg.pred_peak)

    # The margin keeps the start and goal off the border
    assert cmap.inside(*cmap.index(0.0, -1.5))
    assert cmap.inside(*cmap.index(60.0, -1.5))
    assert not cmap.inside(*cmap.index(-10.0, -1.5))

    # Overlapping predictions keep the max
    preds = np.array([[(20.0, 0.0)], [(20.0, 0.0)], [(20.0, 0.0)]])
    cmap = build_costmap((0.0, -1.5), (60.0, -1.5), [], preds, cfg)
    assert cmap.cost.max() == pytest.approx(cfg.pred_peak)


def test_open_road():
    cfg = PathPlanConfig(resolution=0.5)
    cmap = build_costmap((0.0, -1.5), (30.0, -1.5), [], None, cfg)
    path = hybrid_astar(Pose(0.0, -1.5, 0.0), (30.0, -1.5), cmap, cfg, clock=VirtualClock())

    assert path.poses[0] == Pose(0.0, -1.5, 0.0)
    end = path.poses[-1]
    assert math.hypot(end.x - 30.0, end.y + 1.5) <= cfg.d_goal
    assert len(path.steers) == len(path.poses) - 1
    assert set(path.steers) <= set(cfg.steers)
    assert extract_steering(path) == 0.0
    assert path.cost == pytest.approx(path.history[-1][1])


def test_anytime():
    cfg = PathPlanConfig(resolution=0.5, weights=(3.0, 2.0, 1.5, 1.0))
    obstacles = [Rect(10.0, -3.5, 14.0, 0.5)]
    preds = np.array([[(20.0, -1.5 + 0.1 * k) for k in range(20)]])
    cmap = build_costmap((0.0, -1.5), (30.0, -1.5), obstacles, preds, cfg)
    path = hybrid_astar(Pose(0.0, -1.5, 0.0), (30.0, -1.5), cmap, cfg, clock=VirtualClock())

    costs = [cost for _, cost in path.history]
    assert costs
    assert all(a >= b for a, b in zip(costs[:-1], costs[1:]))
    assert [w for w, _ in path.history] == sorted((w for w, _ in path.history), reverse=True)
    assert path.cost == costs[-1]

    # Around the obstacle: not straight
    assert any(x != 0.0 for x in path.steers)


def test_budget():
    # Every expansion costs 1 ms: the budget stops the schedule right after
    # the first solution, but never before
    clock = VirtualClock(ClockConfig(astar_expansion_ms=1.0))
    cfg = PathPlanConfig(resolution=0.5, weights=(2.0, 1.0))
    cmap = build_costmap((0.0, -1.5), (30.0, -1.5), [], None, cfg)
    path = hybrid_astar(Pose(0.0, -1.5, 0.0), (30.0, -1.5), cmap, cfg, clock=clock, budget_ms=1.0)
    assert len(path.history) == 1
    assert path.history[0][0] == 2.0
    assert clock.counts["astar_expansion"] > 1


def test_no_path():
    cfg = PathPlanConfig(resolution=0.5)
    # The start is walled in
    walls = [Rect(-3, -5, -2, 2), Rect(2, -5, 3, 2), Rect(-3, -5, 3, -4), Rect(-3, 1, 3, 2)]
    cmap = build_costmap((0.0, -1.5), (30.0, -1.5), walls, None, cfg)
    with pytest.raises(NoPathException):
        hybrid_astar(Pose(0.0, -1.5, 0.0), (30.0, -1.5), cmap, cfg, clock=VirtualClock())


def test_at_goal():
    cfg = PathPlanConfig(resolution=0.5)
    cmap = build_costmap((0.0, 0.0), (1.0, 0.0), [], None, cfg)
    path = hybrid_astar(Pose(0.0, 0.0, 0.0), (1.0, 0.0), cmap, cfg)
    assert path.poses == (Pose(0.0, 0.0, 0.0),)
    assert path.cost == 0.0
    assert extract_steering(path) == 0.0
    assert extract_steering(PlannedPath((Pose(0, 0, 0),), (), 0.0)) == 0.0


def dijkstra(start: Pose, goal, cmap: Costmap, cfg: PathPlanConfig) -> float:
    """Exhaustive search over the same lattice of motion primitives"""

    start = snap_pose(start, cmap, cfg.heading_bins)
    steer_idx = cfg.steers.index(0.0)
    counter = itertools.count()
    best = {state_key(start, steer_idx, cmap, cfg.heading_bins): 0.0}
    queue = [(0.0, next(counter), start, 0.0, steer_idx)]
    while queue:
        g, _, pose, steer, idx = heapq.heappop(queue)
        if g > best.get(state_key(pose, idx, cmap, cfg.heading_bins), math.inf):
            continue
        if math.hypot(pose.x - goal[0], pose.y - goal[1]) <= cfg.d_goal:
            return g

        for child_idx, child, step in successors(pose, steer, cmap, cfg, lattice=True):
            key = state_key(child, child_idx, cmap, cfg.heading_bins)
            if g + step < best.get(key, math.inf):
                best[key] = g + step
                heapq.heappush(queue, (g + step, next(counter), child, cfg.steers[child_idx], child_idx))

    return math.inf


def random_corridor(rng: np.random.Generator, size: int = 30) -> Costmap:
    cost = rng.uniform(0.0, 0.3, size=(size, size))
    blocked = np.zeros((size, size), dtype=bool)
    blocked[:, 14:16] = True
    gap = int(rng.integers(4, size - 6))
    blocked[gap : gap + 4, 14:16] = False
    blocked[rng.uniform(size=(size, size)) < 0.03] = True
    blocked[13:18, 0:5] = False
    blocked[13:18, 25:30] = False
    return Costmap((0.0, 0.0), 1.0, cost, blocked)


@pytest.mark.slow
def test_dijkstra_oracle():
    cfg = PathPlanConfig(
        resolution=1.0, arc_length=2.0, check_step=0.25, weights=(1.0,), budget_ms=1e9, max_expansions=10**6
    )
    rng = np.random.default_rng(11)
    start, goal = Pose(2.5, 15.5, 0.0), (27.5, 15.5)

    for _ in range(20):
        cmap = random_corridor(rng)
        expected = dijkstra(start, goal, cmap, cfg)
        if expected == math.inf:
            with pytest.raises(NoPathException):
                hybrid_astar(start, goal, cmap, cfg, clock=VirtualClock(), lattice=True)
            continue

        path = hybrid_astar(start, goal, cmap, cfg, clock=VirtualClock(), lattice=True)
        assert path.cost == pytest.approx(expected, abs=1e-9)
