#!/usr/bin/env python
# encoding: utf-8

"""Lower and upper value bounds for new belief tree nodes.

TrainBounds:   L = L_tr, U = critic value
DeployBounds:  U = calibrated MC dropout mean, L mixes L_tr and U by confidence
LtrBounds:     L = L_tr, U = analytic "full speed to the goal" bound, no network
"""

import math
from typing import Callable, NamedTuple, Optional, Protocol

import numpy as np
import torch

from .. import logging
from ..belief import Belief, advance_positions
from ..calibration import CalibrationTable, confidence, crude_calibrate
from ..clock import Clock, WallClock
from ..intention import IntentionConfig, render_intention_image
from ..learner.network import LstmState, NavPPO, make_features, mc_forward_stats, to_batch
from ..pathplan import PlannedPath, Pose
from ..world import AgentKind, RewardConfig
from .tree import BeliefNode, ScenarioSet

logger = logging.get_logger(__name__, logging.DEBUG)


class SearchContext(NamedTuple):
    """Inputs of one decision which the bounds need besides the node"""

    belief: Belief
    scenarios: ScenarioSet
    ego_path: Optional[PlannedPath] = None
    past_poses: tuple[Pose, ...] = ()
    preds: Optional[np.ndarray] = None
    lstm: Optional[LstmState] = None


class BoundsProvider(Protocol):
    """(L, U, phi) for a freshly created node"""

    nnet_ms: float

    def bounds(self, node: BeliefNode, ctx: SearchContext) -> tuple[float, float, float]: ...


def heuristic_l_tr(
    node: BeliefNode, scenarios: ScenarioSet, cfg: RewardConfig, horizon: int = 20
) -> float:
    """Crash penalty discounted by the steps until the first ego/pedestrian
    contact, ego and pedestrians moving on straight lines. Scenario weighted
    mean; scenarios without contact within the horizon add 0."""

    peds = np.array([k == AgentKind.PEDESTRIAN for k in scenarios.kinds], dtype=bool)
    if not peds.any() or len(node.ids) == 0:
        return 0.0

    goal = scenarios.goal[node.ids][:, peds]
    speed = scenarios.speed[node.ids][:, peds]
    weights = scenarios.weights[node.ids]
    pos = node.pos[:, peds]

    ego = np.asarray(node.ego.pos, dtype=float)
    step = node.ego.speed * cfg.dt * np.array([math.cos(node.ego.heading), math.sin(node.ego.heading)])

    first = np.full(len(weights), -1)
    for k in range(horizon + 1):
        if k:
            pos = advance_positions(pos, goal, speed, cfg.dt)
            ego = ego + step
        dist = np.hypot(pos[..., 0] - ego[0], pos[..., 1] - ego[1]).min(axis=1)
        hit = (first < 0) & (dist < cfg.d_crash)
        first[hit] = k
        if (first >= 0).all():
            break

    values = np.where(first >= 0, cfg.gamma ** np.maximum(first, 0) * cfg.r_crash, 0.0)
    return float(np.dot(weights, values) / weights.sum())


def optimistic_upper(node: BeliefNode, cfg: RewardConfig, horizon: int = 20) -> float:
    """Step penalties until the goal is reached at full speed, then the goal
    reward. Without a goal inside the horizon only the step penalties count."""

    dist = math.hypot(node.ego.goal[0] - node.ego.pos[0], node.ego.goal[1] - node.ego.pos[1])
    remaining = max(0.0, dist - cfg.d_goal)
    k = int(math.ceil(remaining / (cfg.v_max_ego * cfg.dt))) if remaining > 0 else 0
    k = max(k, 1)

    if k > horizon:
        return sum(cfg.gamma**j * cfg.r_step for j in range(horizon))
    return sum(cfg.gamma**j * cfg.r_step for j in range(k - 1)) + cfg.gamma ** (k - 1) * cfg.r_goal


class NetworkEvaluator:
    """Renders node intention images and runs the network on them. All time
    spent here accumulates in nnet_ms."""

    def __init__(
        self,
        net: NavPPO,
        reward_cfg: RewardConfig,
        intention_cfg: None | IntentionConfig = None,
        clock: None | Clock = None,
    ):
        self.net = net
        self.reward_cfg = reward_cfg
        self.intention_cfg = intention_cfg or IntentionConfig(size=net.arch.image_size)
        self.clock = clock or WallClock()
        self.nnet_ms = 0.0

    def node_belief(self, node: BeliefNode, ctx: SearchContext) -> Belief:
        scen = ctx.scenarios
        w = scen.weights[node.ids] / scen.weights[node.ids].sum()
        n = scen.pos.shape[1]
        return ctx.belief._replace(
            ego=node.ego,
            pos=node.pos,
            goal=scen.goal[node.ids],
            speed=scen.speed[node.ids],
            weights=np.repeat(w[:, None], n, axis=1),
        )

    def inputs(self, node: BeliefNode, ctx: SearchContext) -> tuple[np.ndarray, np.ndarray]:
        past = []
        parent = node.parent
        while parent is not None:
            past.append(Pose(parent.ego.pos[0], parent.ego.pos[1], parent.ego.heading))
            parent = parent.parent
        past = list(ctx.past_poses) + past[::-1]

        b = self.node_belief(node, ctx)
        image = render_intention_image(b, ctx.ego_path, past, ctx.preds, b.obstacles, self.intention_cfg)
        features = make_features(node.last_reward, node.prev_acc, node.ego.speed, self.reward_cfg.v_max_ego)
        return image, features

    def _state(self, ctx: SearchContext) -> LstmState:
        return ctx.lstm if ctx.lstm is not None else self.net.zero_state()

    def value(self, node: BeliefNode, ctx: SearchContext) -> float:
        start = self.clock.now_ms()
        image, features = self.inputs(node, ctx)
        with torch.no_grad():
            img, feat = to_batch(self.net, image, features)
            _, value, _ = self.net(img, feat, self._state(ctx))
        self.clock.charge("network_forward")
        self.nnet_ms += self.clock.now_ms() - start
        return float(value[0])

    def mc_stats(self, node: BeliefNode, ctx: SearchContext, passes: int, rng: np.random.Generator):
        start = self.clock.now_ms()
        image, features = self.inputs(node, ctx)
        rtn = mc_forward_stats(self.net, image, features, self._state(ctx), passes, rng)
        self.clock.charge("network_forward")
        self.nnet_ms += self.clock.now_ms() - start
        return rtn


class TrainBounds:
    """L = L_tr, U = V(node image). 'upper' replaces the critic if given."""

    def __init__(
        self,
        evaluator: Optional[NetworkEvaluator],
        reward_cfg: RewardConfig,
        horizon: int = 20,
        upper: None | Callable[[BeliefNode, SearchContext], float] = None,
    ):
        if evaluator is None and upper is None:
            raise ValueError("TrainBounds requires a network evaluator or an upper bound function")

        self.evaluator = evaluator
        self.reward_cfg = reward_cfg
        self.horizon = horizon
        self.upper = upper

    @property
    def nnet_ms(self) -> float:
        return self.evaluator.nnet_ms if self.evaluator is not None else 0.0

    def bounds(self, node: BeliefNode, ctx: SearchContext) -> tuple[float, float, float]:
        lower = heuristic_l_tr(node, ctx.scenarios, self.reward_cfg, self.horizon)
        upper = self.upper(node, ctx) if self.upper is not None else self.evaluator.value(node, ctx)
        return lower, upper, 0.0


class DeployBounds:
    """U = calibrated mean, L = min((1 - phi) L_tr + phi U, U).

    'force_confidence' pins phi (0 disables pruning). Without a fitted table
    the identity calibration applies, i.e. the raw MC statistics drive phi.
    """

    def __init__(
        self,
        evaluator: NetworkEvaluator,
        table: None | CalibrationTable,
        reward_cfg: RewardConfig,
        rng: np.random.Generator,
        *,
        passes: int = 10,
        horizon: int = 20,
        force_confidence: None | float = None,
    ):
        if force_confidence is not None and not 0.0 <= force_confidence <= 1.0:
            raise ValueError(f"Confidence must be in [0, 1]: {force_confidence}")

        self.evaluator = evaluator
        self.table = table or CalibrationTable.identity()
        self.reward_cfg = reward_cfg
        self.rng = rng
        self.passes = passes
        self.horizon = horizon
        self.force_confidence = force_confidence

    @property
    def nnet_ms(self) -> float:
        return self.evaluator.nnet_ms

    def calibrated_estimate(self, node: BeliefNode, ctx: SearchContext) -> tuple[float, float]:
        mu, var = self.evaluator.mc_stats(node, ctx, self.passes, self.rng)
        return crude_calibrate(mu, var, self.table)

    def bounds(self, node: BeliefNode, ctx: SearchContext) -> tuple[float, float, float]:
        mu, var = self.calibrated_estimate(node, ctx)
        phi = self.force_confidence if self.force_confidence is not None else confidence(var, self.table)
        l_tr = heuristic_l_tr(node, ctx.scenarios, self.reward_cfg, self.horizon)
        return min((1.0 - phi) * l_tr + phi * mu, mu), mu, phi


class LtrBounds:
    """Hand designed bounds only; never touches a network"""

    nnet_ms = 0.0

    def __init__(self, reward_cfg: RewardConfig, horizon: int = 20):
        self.reward_cfg = reward_cfg
        self.horizon = horizon

    def bounds(self, node: BeliefNode, ctx: SearchContext) -> tuple[float, float, float]:
        lower = heuristic_l_tr(node, ctx.scenarios, self.reward_cfg, self.horizon)
        return lower, optimistic_upper(node, self.reward_cfg, self.horizon), 0.0

