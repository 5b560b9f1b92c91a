#!/usr/bin/env python
# encoding: utf-8

"""Belief tree: determinized scenarios, nodes, one-step simulation and
observation branching"""

import math
from typing import Any, NamedTuple, Optional, Sequence

import numpy as np

from ..belief import Belief, advance_positions
from ..world import Acc, Action, AgentKind, AgentState, Rect, RewardConfig, bicycle_step, line_of_sight


class ScenarioSet(NamedTuple):
    """K determinized exo worlds. pos, goal: (K, n, 2); speed: (K, n)"""

    pos: np.ndarray
    goal: np.ndarray
    speed: np.ndarray
    weights: np.ndarray
    seeds: np.ndarray
    kinds: tuple[AgentKind, ...]

    def __len__(self) -> int:
        return len(self.weights)


def sample_scenarios(b: Belief, count: int, rng: np.random.Generator) -> ScenarioSet:
    """One particle per agent and scenario, drawn proportional to weight;
    without replacement as long as there is enough support."""

    n = b.num_agents
    idx = np.zeros((count, n), dtype=int)
    for i in range(n):
        w = b.weights[:, i]
        support = int(np.count_nonzero(w > 0))
        idx[:, i] = rng.choice(b.num_particles, size=count, replace=support < count, p=w)

    agents = np.arange(n)[None, :]
    seeds = rng.integers(0, 2**31 - 1, size=count)
    return ScenarioSet(
        b.pos[idx, agents].reshape(count, n, 2),
        b.goal[idx, agents].reshape(count, n, 2),
        b.speed[idx, agents].reshape(count, n),
        np.full(count, 1.0 / count),
        seeds,
        b.kinds,
    )


class BeliefNode:
    """A node of the belief tree.

    'ids' index the scenarios reaching this node, 'pos' holds their exo
    positions. The ego is deterministic given the action sequence, so every
    scenario of a node shares the same ego state.
    """

    __slots__ = (
        "id", "parent", "action", "depth", "ids", "pos", "weight", "ego",
        "prev_acc", "last_reward", "terminal", "lower", "upper", "phi",
        "closed", "children", "step_reward",
    )

    def __init__(
        self,
        node_id: int,
        parent: Optional["BeliefNode"],
        action: Optional[Acc],
        depth: int,
        ids: np.ndarray,
        pos: np.ndarray,
        weight: float,
        ego: AgentState,
        prev_acc: Optional[Acc],
        last_reward: float,
        terminal: bool = False,
    ):
        self.id = node_id
        self.parent = parent
        self.action = action
        self.depth = depth
        self.ids = ids
        self.pos = pos
        self.weight = weight
        self.ego = ego
        self.prev_acc = prev_acc
        self.last_reward = last_reward
        self.terminal = terminal
        self.lower = 0.0
        self.upper = 0.0
        self.phi = 0.0
        self.closed = False
        self.children: dict[Acc, list["BeliefNode"]] = {}
        self.step_reward: dict[Acc, float] = {}

    @property
    def expanded(self) -> bool:
        return bool(self.children)

    @property
    def gap(self) -> float:
        return max(0.0, self.upper - self.lower)

    def q_values(self, gamma: float) -> dict[Acc, tuple[float, float]]:
        """(lower, upper) per action, from the children"""
        rtn = {}
        for acc, children in self.children.items():
            lower = upper = 0.0
            for child in children:
                share = child.weight / self.weight
                lower += share * child.lower
                upper += share * child.upper
            reward = self.step_reward[acc]
            rtn[acc] = (reward + gamma * lower, reward + gamma * upper)
        return rtn

    def to_dict(self, confidence: bool = False) -> dict[str, Any]:
        rtn = {
            "id": self.id,
            "parent": self.parent.id if self.parent is not None else None,
            "action": self.action.name if self.action is not None else None,
            "depth": self.depth,
            "weight": self.weight,
            "L": self.lower,
            "U": self.upper,
            "closed": self.closed,
        }
        if confidence:
            rtn["phi"] = self.phi
        return rtn


class StepGroup(NamedTuple):
    """Scenarios sharing one observation after a step"""

    key: tuple
    ids: np.ndarray
    pos: np.ndarray
    weight: float
    reward: float
    terminal: bool


def observation_key(
    terminal: bool,
    ego: AgentState,
    exo_pos: np.ndarray,
    visible: np.ndarray,
    pos_bin: float,
    speed_bin: float,
) -> tuple:
    """(terminal, ego speed bin, per agent cell or None if occluded)"""
    cells = tuple(
        (int(math.floor(p[0] / pos_bin)), int(math.floor(p[1] / pos_bin))) if v else None
        for p, v in zip(exo_pos, visible)
    )
    return (bool(terminal), int(math.floor(ego.speed / speed_bin)), cells)


def simulate_step(
    node: BeliefNode,
    acc: Acc,
    steer: float,
    scenarios: ScenarioSet,
    obstacles: Sequence[Rect],
    cfg: RewardConfig,
    *,
    pos_bin: float = 1.0,
    speed_bin: float = 0.5,
    speed_noise: float = 0.0,
) -> tuple[AgentState, list[StepGroup], float]:
    """Advance every scenario of the node by one step. Returns the new ego,
    the scenario groups by observation (first appearance order) and the
    scenario-weighted mean reward."""

    ego = bicycle_step(node.ego, Action(steer, acc), cfg)

    speed = scenarios.speed[node.ids]
    if speed_noise > 0.0:
        noise = np.array(
            [np.random.default_rng([int(s), node.depth]).normal(0.0, speed_noise, speed.shape[1])
             for s in scenarios.seeds[node.ids]]
        ).reshape(speed.shape)
        speed = np.maximum(speed + noise, 0.0)

    pos = advance_positions(node.pos, scenarios.goal[node.ids], speed, cfg.dt)
    weights = scenarios.weights[node.ids]
    m, n = speed.shape

    peds = np.array([k == AgentKind.PEDESTRIAN for k in scenarios.kinds], dtype=bool)
    if n and peds.any():
        dist = np.hypot(pos[..., 0] - ego.pos[0], pos[..., 1] - ego.pos[1])
        dmin = np.where(peds[None, :], dist, np.inf).min(axis=1)
    else:
        dmin = np.full(m, np.inf)

    goal_reached = math.hypot(ego.pos[0] - ego.goal[0], ego.pos[1] - ego.goal[1]) < cfg.d_goal
    crash = dmin < cfg.d_crash
    near = ~crash & (dmin < cfg.d_near) & (ego.speed > cfg.v_near_min)
    goal = ~crash & ~near & goal_reached
    step = cfg.r_step + (cfg.r_acc_switch if node.prev_acc is not None and acc != node.prev_acc else 0.0)
    rewards = np.where(crash, cfg.r_crash, np.where(near, cfg.r_near_miss, np.where(goal, cfg.r_goal, step)))
    terminal = crash | goal

    visible = np.ones((m, n), dtype=bool)
    for i in range(n):
        visible[:, i] = line_of_sight(ego.pos, pos[:, i], obstacles)

    order: dict[tuple, list[int]] = {}
    for j in range(m):
        key = observation_key(terminal[j], ego, pos[j], visible[j], pos_bin, speed_bin)
        order.setdefault(key, []).append(j)

    groups = []
    for key, members in order.items():
        sel = np.asarray(members, dtype=int)
        w = float(weights[sel].sum())
        groups.append(
            StepGroup(
                key,
                node.ids[sel],
                pos[sel],
                w,
                float(np.dot(weights[sel], rewards[sel]) / w),
                bool(key[0]),
            )
        )

    mean_reward = float(np.dot(weights, rewards) / weights.sum())
    return ego, groups, mean_reward


class EffortStats(NamedTuple):
    """Planning effort of one decision"""

    pt: float = 0.0
    ptn: int = 0
    ptd: float = 0.0
    bnn: int = 0
    obf: float = 0.0
    nnet: float = 0.0

    def to_dict(self) -> dict[str, float]:
        return {
            "PT": self.pt,
            "PTN": self.ptn,
            "PTD": self.ptd,
            "BNN": self.bnn,
            "OBF": self.obf,
            "NNET": self.nnet,
        }
