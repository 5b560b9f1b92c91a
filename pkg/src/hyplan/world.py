#!/usr/bin/env python
# encoding: utf-8

"""Traffic world: kinematics, transition, occluded observation, reward and
outcome classification.

Everything in here is a pure function over immutable values (NamedTuples)
and safe to call from concurrent evaluation workers.
"""

import math
from enum import Enum, IntEnum
from typing import NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

TWO_PI = 2.0 * math.pi

Vec2 = tuple[float, float]


class AgentKind(str, Enum):
    """Exo agents are tagged pedestrian or car. The ego is a car."""

    PEDESTRIAN = "pedestrian"
    CAR = "car"


class Acc(IntEnum):
    """Velocity actions. The int value is the network output index."""

    ACCELERATE = 0
    DECELERATE = 1
    MAINTAIN = 2


# Safest first. Used to break ties between equally valued actions.
SAFETY_ORDER = (Acc.DECELERATE, Acc.MAINTAIN, Acc.ACCELERATE)


class Outcome(str, Enum):
    """Episode outcome"""

    CRASH = "crash"
    NEAR_MISS = "near_miss"
    GOAL = "goal"
    TIMEOUT = "timeout"


class AgentState(NamedTuple):
    """Position, goal and velocity in meters (per second); heading in [0, 2pi)"""

    pos: Vec2
    goal: Vec2
    vel: Vec2
    heading: float
    kind: AgentKind = AgentKind.PEDESTRIAN

    @property
    def speed(self) -> float:
        return math.hypot(*self.vel)


class Action(NamedTuple):
    """Steer in degrees in [-50, 50], positive turns left"""

    steer: float
    acc: Acc


class Rect(NamedTuple):
    """Axis aligned rectangle, meters"""

    xmin: float
    ymin: float
    xmax: float
    ymax: float


class WorldState(NamedTuple):
    """Exact traffic situation at step t"""

    ego: AgentState
    exo: tuple[AgentState, ...]
    obstacles: tuple[Rect, ...]
    t: int = 0


class Observation(NamedTuple):
    """The ego is fully observed. None marks an occluded exo agent."""

    ego: AgentState
    exo_pos: tuple[Optional[Vec2], ...]


class RewardConfig(BaseModel):
    """World constants: discount, rewards, thresholds and kinematics"""

    model_config = ConfigDict(frozen=True)

    gamma: float = 0.98
    r_crash: float = -1000.0
    r_near_miss: float = -200.0
    r_goal: float = 1000.0
    r_step: float = -1.0
    r_acc_switch: float = -0.1
    d_crash: float = 1.3
    d_near: float = 2.0
    v_near_min: float = 0.5
    d_goal: float = 2.0
    dt: float = Field(0.25, gt=0)
    v_max_ego: float = Field(8.33, gt=0)
    accel_rate: float = 1.5
    decel_rate: float = -3.0
    wheelbase: float = Field(2.5, gt=0)
    max_steer: float = 50.0
    v_max_pedestrian: float = 2.0
    v_max_car: float = 10.0
    t_max: int = Field(120, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must be in (0, 1): {self.gamma}")
        if not self.d_crash < self.d_near:
            raise ValueError("d_crash must be smaller than d_near")
        if not self.decel_rate < 0 < self.accel_rate:
            raise ValueError("Expected decel_rate < 0 < accel_rate")
        return self

    def rate(self, acc: Acc) -> float:
        if acc == Acc.ACCELERATE:
            return self.accel_rate
        if acc == Acc.DECELERATE:
            return self.decel_rate
        return 0.0

    def v_max(self, kind: AgentKind) -> float:
        return self.v_max_car if kind == AgentKind.CAR else self.v_max_pedestrian


def normalize_heading(heading: float) -> float:
    """Map into [0, 2pi)"""
    heading = heading % TWO_PI
    # -1e-20 % 2pi == 2pi in floating point
    return 0.0 if heading >= TWO_PI else heading


def make_agent(
    pos: Sequence[float],
    goal: Sequence[float],
    speed: float,
    kind: AgentKind = AgentKind.PEDESTRIAN,
    heading: None | float = None,
) -> AgentState:
    """An agent heading (and moving) towards its goal, unless heading is given"""
    pos = (float(pos[0]), float(pos[1]))
    goal = (float(goal[0]), float(goal[1]))
    if heading is None:
        dx, dy = goal[0] - pos[0], goal[1] - pos[1]
        heading = math.atan2(dy, dx) if (dx or dy) else 0.0

    heading = normalize_heading(heading)
    vel = (speed * math.cos(heading), speed * math.sin(heading))
    return AgentState(pos, goal, vel, heading, kind)


def bicycle_step(ego: AgentState, a: Action, cfg: RewardConfig) -> AgentState:
    """Rear-axle kinematic bicycle. The speed is updated first, then the
    pose moves along the circular arc of constant speed and steering."""

    steer = max(-cfg.max_steer, min(cfg.max_steer, a.steer))
    speed = min(max(ego.speed + cfg.rate(a.acc) * cfg.dt, 0.0), cfg.v_max_ego)

    tan_steer = math.tan(math.radians(steer))
    heading = ego.heading + speed / cfg.wheelbase * tan_steer * cfg.dt

    x, y = ego.pos
    if tan_steer == 0.0:
        x += speed * math.cos(ego.heading) * cfg.dt
        y += speed * math.sin(ego.heading) * cfg.dt
    elif speed > 0.0:
        radius = cfg.wheelbase / tan_steer
        x += radius * (math.sin(heading) - math.sin(ego.heading))
        y -= radius * (math.cos(heading) - math.cos(ego.heading))

    heading = normalize_heading(heading)
    vel = (speed * math.cos(heading), speed * math.sin(heading))
    return AgentState((x, y), ego.goal, vel, heading, ego.kind)


def exo_step(agent: AgentState, dt: float) -> AgentState:
    """Move straight towards the goal at constant speed; stop at the goal"""

    dx = agent.goal[0] - agent.pos[0]
    dy = agent.goal[1] - agent.pos[1]
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        return agent

    speed = agent.speed
    heading = normalize_heading(math.atan2(dy, dx))
    vel = (speed * dx / dist, speed * dy / dist)
    step = speed * dt
    if dist <= step:
        return AgentState(agent.goal, agent.goal, vel, heading, agent.kind)

    pos = (agent.pos[0] + dx / dist * step, agent.pos[1] + dy / dist * step)
    return AgentState(pos, agent.goal, vel, heading, agent.kind)


def transition(s: WorldState, a: Action, cfg: RewardConfig) -> WorldState:
    """Advance the world by one dt"""
    ego = bicycle_step(s.ego, a, cfg)
    exo = tuple(exo_step(x, cfg.dt) for x in s.exo)
    return WorldState(ego, exo, s.obstacles, s.t + 1)


def line_of_sight(
    origin: Sequence[float], targets: np.ndarray, obstacles: Sequence[Rect]
) -> np.ndarray:
    """Vectorized visibility of many targets from one origin.

    A target is hidden if the segment origin->target runs through the
    interior of any rectangle (Liang-Barsky clipping; the clipped part must
    have positive length and its midpoint strictly inside the rectangle).
    Touching a corner or running along an edge keeps the target visible.
    """

    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    visible = np.ones(len(targets), dtype=bool)
    if len(obstacles) == 0 or len(targets) == 0:
        return visible

    o = np.asarray(origin, dtype=float)
    d = targets - o

    with np.errstate(divide="ignore", invalid="ignore"):
        for rect in obstacles:
            t0 = np.zeros(len(targets))
            t1 = np.ones(len(targets))
            for axis, lo, hi in ((0, rect.xmin, rect.xmax), (1, rect.ymin, rect.ymax)):
                da = d[:, axis]
                parallel = da == 0.0
                ta = (lo - o[axis]) / da
                tb = (hi - o[axis]) / da
                inside = lo <= o[axis] <= hi
                t_lo = np.where(parallel, -np.inf if inside else np.inf, np.minimum(ta, tb))
                t_hi = np.where(parallel, np.inf, np.maximum(ta, tb))
                t0 = np.maximum(t0, t_lo)
                t1 = np.minimum(t1, t_hi)

            hit = t1 > t0
            mid = o + d * ((t0 + t1) / 2.0)[:, None]
            interior = (
                (rect.xmin < mid[:, 0])
                & (mid[:, 0] < rect.xmax)
                & (rect.ymin < mid[:, 1])
                & (mid[:, 1] < rect.ymax)
            )
            visible &= ~(hit & interior)

    return visible


def points_in_rects(points: np.ndarray, obstacles: Sequence[Rect]) -> np.ndarray:
    """Closed containment test, any rectangle"""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    rtn = np.zeros(len(points), dtype=bool)
    for r in obstacles:
        rtn |= (
            (r.xmin <= points[:, 0])
            & (points[:, 0] <= r.xmax)
            & (r.ymin <= points[:, 1])
            & (points[:, 1] <= r.ymax)
        )
    return rtn


def observe(s: WorldState) -> Observation:
    """Noiseless observation; occluded exo agents are reported as None"""
    if not s.exo:
        return Observation(s.ego, ())

    targets = np.array([x.pos for x in s.exo], dtype=float)
    visible = line_of_sight(s.ego.pos, targets, s.obstacles)
    exo_pos = tuple(x.pos if v else None for x, v in zip(s.exo, visible))
    return Observation(s.ego, exo_pos)


def min_pedestrian_distance(s: WorldState) -> float:
    """Center distance ego <-> closest pedestrian (inf without pedestrians)"""
    ex, ey = s.ego.pos
    dists = [
        math.hypot(x.pos[0] - ex, x.pos[1] - ey)
        for x in s.exo
        if x.kind == AgentKind.PEDESTRIAN
    ]
    return min(dists, default=math.inf)


def step_event(s: WorldState, cfg: RewardConfig) -> None | Outcome:
    """At most one event, precedence crash > near-miss > goal"""
    dist = min_pedestrian_distance(s)
    if dist < cfg.d_crash:
        return Outcome.CRASH
    if dist < cfg.d_near and s.ego.speed > cfg.v_near_min:
        return Outcome.NEAR_MISS

    gx, gy = s.ego.goal
    if math.hypot(s.ego.pos[0] - gx, s.ego.pos[1] - gy) < cfg.d_goal:
        return Outcome.GOAL

    return None


def reward(
    s: WorldState, a: Action, s_next: WorldState, prev_acc: None | Acc, cfg: RewardConfig
) -> float:
    """Reward of the transition s -> s_next"""
    # pylint: disable=unused-argument
    event = step_event(s_next, cfg)
    if event == Outcome.CRASH:
        return cfg.r_crash
    if event == Outcome.NEAR_MISS:
        return cfg.r_near_miss
    if event == Outcome.GOAL:
        return cfg.r_goal

    switched = prev_acc is not None and a.acc != prev_acc
    return cfg.r_step + (cfg.r_acc_switch if switched else 0.0)


def classify_outcome(episode: Sequence[WorldState], cfg: RewardConfig) -> Outcome:
    """The first event along the trajectory, Timeout if there is none"""
    if not episode:
        raise ValueError("Episode must not be empty")

    for s in episode[: cfg.t_max + 1]:
        event = step_event(s, cfg)
        if event is not None:
            return event

    return Outcome.TIMEOUT


def time_to_goal(episode: Sequence[WorldState], cfg: RewardConfig) -> None | float:
    """Seconds until the goal was reached, or None"""
    for s in episode[: cfg.t_max + 1]:
        event = step_event(s, cfg)
        if event == Outcome.GOAL:
            return s.t * cfg.dt
        if event == Outcome.CRASH:
            return None

    return None
