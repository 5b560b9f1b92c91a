#!/usr/bin/env python
# encoding: utf-8

"""Particle belief over the exo agents' latent state.

Each exo agent carries its own K weighted hypotheses (position, goal, speed).
Agents are tracked independently; a joint hypothesis is obtained by picking
one particle per agent (see planner.sample_scenarios).
"""

from typing import Any, NamedTuple, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from . import logging
from .scenarios import Scene
from .world import (
    Action,
    AgentKind,
    AgentState,
    Observation,
    Rect,
    RewardConfig,
    bicycle_step,
    line_of_sight,
    points_in_rects,
)

logger = logging.get_logger(__name__, logging.DEBUG)


class BeliefException(Exception):
    """BeliefException"""


class DegenerateBeliefException(BeliefException):
    """All hypotheses of an agent contradict the observation"""


class BeliefConfig(BaseModel):
    """Particle filter settings"""

    model_config = ConfigDict(frozen=True)

    particles: int = Field(100, ge=1)
    sigma_obs: float = Field(0.5, gt=0)
    # Resample if ESS < resample_ratio * particles
    resample_ratio: float = Field(0.5, ge=0, le=1)
    pedestrian_speed: tuple[float, float] = (0.5, 2.0)
    car_speed: tuple[float, float] = (3.0, 8.0)
    spawn_tries: int = Field(50, ge=1)


class Belief(NamedTuple):
    """K particles for each of the n exo agents.

    pos, goal: (K, n, 2); speed, weights: (K, n); weights[:, i] sums to 1
    """

    ego: AgentState
    pos: np.ndarray
    goal: np.ndarray
    speed: np.ndarray
    weights: np.ndarray
    kinds: tuple[AgentKind, ...]
    goal_sets: tuple[np.ndarray, ...]
    spawn: tuple[Rect, ...]
    obstacles: tuple[Rect, ...]
    t: int = 0
    resets: int = 0

    @property
    def num_particles(self) -> int:
        return self.pos.shape[0]

    @property
    def num_agents(self) -> int:
        return self.pos.shape[1]


def effective_sample_size(weights: np.ndarray) -> np.ndarray:
    """1 / sum(w^2), per column"""
    return 1.0 / np.sum(np.square(weights), axis=0)


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Indexes of the surviving particles (one random offset, K even strata)"""
    k = len(weights)
    positions = (rng.random() + np.arange(k)) / k
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    return np.minimum(np.searchsorted(cumulative, positions), k - 1)


def sample_hidden_positions(
    region: Rect,
    ego_pos: Sequence[float],
    obstacles: Sequence[Rect],
    count: int,
    rng: np.random.Generator,
    tries: int = 50,
) -> np.ndarray:
    """Rejection sample positions in region which the ego can not see"""

    rtn = np.empty((0, 2))
    low, high = (region.xmin, region.ymin), (region.xmax, region.ymax)
    for _ in range(tries):
        points = rng.uniform(low, high, size=(count, 2))
        hidden = ~line_of_sight(ego_pos, points, obstacles) & ~points_in_rects(points, obstacles)
        rtn = np.concatenate([rtn, points[hidden]])
        if len(rtn) >= count:
            return rtn[:count]

    logger.debug(
        "Only %d of %d hidden positions found in %s. Filling with unconstrained ones",
        len(rtn),
        count,
        region,
    )
    fill = rng.uniform(low, high, size=(count - len(rtn), 2))
    return np.concatenate([rtn, fill])


def _sample_agent(
    i: int,
    obs_pos: None | Sequence[float],
    ego: AgentState,
    kinds: Sequence[AgentKind],
    goal_sets: Sequence[np.ndarray],
    spawn: Sequence[Rect],
    obstacles: Sequence[Rect],
    rng: np.random.Generator,
    cfg: BeliefConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    k = cfg.particles
    goals = goal_sets[i][rng.integers(len(goal_sets[i]), size=k)]
    lo, hi = cfg.car_speed if kinds[i] == AgentKind.CAR else cfg.pedestrian_speed
    speed = rng.uniform(lo, hi, size=k)
    if obs_pos is not None:
        pos = np.tile(np.asarray(obs_pos, dtype=float), (k, 1))
    else:
        pos = sample_hidden_positions(spawn[i], ego.pos, obstacles, k, rng, cfg.spawn_tries)

    return pos, goals, speed


def init_belief(
    o0: Observation, scene: Scene, rng: np.random.Generator, cfg: None | BeliefConfig = None
) -> Belief:
    """Uniform weights; goal from the scene's hypotheses, speed uniform, and
    either the observed position or a hidden one from the spawn region"""

    cfg = cfg or BeliefConfig()
    k, n = cfg.particles, len(o0.exo_pos)
    kinds = tuple(x.kind for x in scene.state.exo)
    goal_sets = tuple(np.asarray(x, dtype=float).reshape(-1, 2) for x in scene.goals)
    obstacles = scene.state.obstacles

    pos = np.zeros((k, n, 2))
    goal = np.zeros((k, n, 2))
    speed = np.zeros((k, n))
    for i, obs in enumerate(o0.exo_pos):
        pos[:, i], goal[:, i], speed[:, i] = _sample_agent(
            i, obs, o0.ego, kinds, goal_sets, scene.spawn, obstacles, rng, cfg
        )

    weights = np.full((k, n), 1.0 / k)
    return Belief(o0.ego, pos, goal, speed, weights, kinds, goal_sets, scene.spawn, obstacles, 0, 0)


def advance_positions(
    pos: np.ndarray, goal: np.ndarray, speed: np.ndarray, dt: float
) -> np.ndarray:
    """Vectorized exo_step: straight to the goal, stop at the goal"""
    delta = goal - pos
    dist = np.hypot(delta[..., 0], delta[..., 1])
    step = speed * dt
    with np.errstate(divide="ignore", invalid="ignore"):
        moved = pos + delta / dist[..., None] * step[..., None]

    arrived = (dist <= step)[..., None]
    rtn = np.where(arrived, goal, moved)
    return np.where((dist == 0.0)[..., None], pos, rtn)


def predict_particles(b: Belief, a: Action, cfg: RewardConfig) -> Belief:
    """Propagate ego and every hypothesis one dt; weights unchanged"""
    ego = bicycle_step(b.ego, a, cfg)
    pos = advance_positions(b.pos, b.goal, b.speed, cfg.dt)
    return b._replace(ego=ego, pos=pos, t=b.t + 1)


def _normalize(w: np.ndarray, agent: int) -> np.ndarray:
    total = w.sum()
    if not total > 0.0:
        raise DegenerateBeliefException(f"All hypotheses of exo agent {agent} contradict the observation")
    return w / total


def update_belief(
    b: Belief, o: Observation, rng: np.random.Generator, cfg: None | BeliefConfig = None
) -> Belief:
    """Bayes update with the (noiseless) observation, then resample if needed"""

    cfg = cfg or BeliefConfig()
    if len(o.exo_pos) != b.num_agents:
        raise BeliefException(
            f"Observation has {len(o.exo_pos)} agents, the belief {b.num_agents}"
        )

    pos, goal, speed = b.pos.copy(), b.goal.copy(), b.speed.copy()
    weights = b.weights.copy()
    resets = b.resets
    k = b.num_particles

    for i, obs in enumerate(o.exo_pos):
        w = weights[:, i]
        if obs is not None:
            d2 = np.sum(np.square(pos[:, i] - np.asarray(obs)), axis=1)
            w = w * np.exp(-d2 / (2.0 * cfg.sigma_obs**2))
            pos[:, i] = obs
        else:
            seen = line_of_sight(o.ego.pos, pos[:, i], b.obstacles)
            w = np.where(seen, 0.0, w)

        try:
            w = _normalize(w, i)
        except DegenerateBeliefException as exc:
            logger.warning("Belief reset at t=%d: %s", b.t, exc)
            resets += 1
            pos[:, i], goal[:, i], speed[:, i] = _sample_agent(
                i, obs, o.ego, b.kinds, b.goal_sets, b.spawn, b.obstacles, rng, cfg
            )
            w = np.full(k, 1.0 / k)

        if 1.0 / np.sum(np.square(w)) < cfg.resample_ratio * k:
            idx = systematic_resample(w, rng)
            pos[:, i], goal[:, i], speed[:, i] = pos[idx, i], goal[idx, i], speed[idx, i]
            w = np.full(k, 1.0 / k)

        weights[:, i] = w

    return b._replace(
        ego=o.ego, pos=pos, goal=goal, speed=speed, weights=weights, resets=resets
    )


def mode_particles(b: Belief) -> np.ndarray:
    """Index of the highest weight particle per agent (ties: lowest index)"""
    return np.argmax(b.weights, axis=0)


def top_particles(b: Belief, count: int = 3) -> np.ndarray:
    """(count, n) indexes, highest weight first (stable)"""
    order = np.argsort(-b.weights, axis=0, kind="stable")
    return order[: min(count, b.num_particles)]


def summary(b: Belief) -> dict[str, Any]:
    """Compact, JSON friendly description for the episode log"""
    mode = mode_particles(b)
    agents = np.arange(b.num_agents)
    return {
        "t": b.t,
        "resets": b.resets,
        "ess": [round(float(x), 3) for x in effective_sample_size(b.weights)] if b.num_agents else [],
        "modeSpeed": [round(float(x), 3) for x in b.speed[mode, agents]],
        "modeGoal": [[round(float(v), 3) for v in x] for x in b.goal[mode, agents]],
    }
