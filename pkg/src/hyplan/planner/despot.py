#!/usr/bin/env python
# encoding: utf-8

"""Anytime belief tree search for the velocity action.

A planning call samples K scenarios from the belief and then runs trials
until the root gap is small enough, the trial cap is reached, or the
time budget is used up. Each trial follows the action with the highest
upper bound and the observation branch with the largest weighted,
discounted gap, expands the node it ends on and backs the bounds up along
its path.
"""

from typing import Any, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .. import logging
from ..belief import Belief
from ..clock import Clock, WallClock
from ..learner.network import LstmState
from ..pathplan import PlannedPath, Pose
from ..world import SAFETY_ORDER, Acc, RewardConfig
from .bounds import BoundsProvider, SearchContext
from .tree import BeliefNode, EffortStats, ScenarioSet, sample_scenarios, simulate_step

logger = logging.get_logger(__name__, logging.DEBUG)


class PlannerException(Exception):
    """PlannerException"""


class EmptyBeliefException(PlannerException):
    """The belief has no particles (or no weight) to sample scenarios from"""


class PlannerConfig(BaseModel):
    """Search parameters"""

    model_config = ConfigDict(frozen=True)

    scenarios: int = Field(32, ge=1)
    max_depth: int = Field(20, ge=1)
    eps_term: float = Field(0.05, gt=0, lt=1)
    budget_ms: float = Field(100.0, gt=0)
    max_trials: int = Field(200, ge=1)
    prune_confidence: float = Field(0.95, gt=0, le=1)
    pos_bin: float = Field(1.0, gt=0)
    speed_bin: float = Field(0.5, gt=0)
    temperature: float = Field(0.5, gt=0)
    exo_speed_noise: float = Field(0.0, ge=0)


class PlanResult(NamedTuple):
    """policy is indexed by Acc value"""

    policy: np.ndarray
    acc: Acc
    stats: EffortStats
    q_values: dict[Acc, tuple[float, float]]
    trace: Optional[dict[str, Any]] = None


def safest_argmax(values: dict[Acc, float]) -> Acc:
    """argmax with ties resolved Decelerate > Maintain > Accelerate"""
    best = max(values.values())
    for acc in SAFETY_ORDER:
        if acc in values and values[acc] == best:
            return acc
    raise PlannerException(f"No action to choose from: {values}")


def policy_from_lower(lower: dict[Acc, float], temperature: float) -> np.ndarray:
    """Softmax over the min-max normalized lower bounds"""
    values = np.array([lower[acc] for acc in Acc], dtype=float)
    hi, lo = values.max(), values.min()
    logits = (values - hi) / (hi - lo + 1e-9) / temperature
    e = np.exp(logits - logits.max())
    return e / e.sum()


class BeliefTree:
    """The tree of one planning call"""

    def __init__(
        self,
        ctx: SearchContext,
        provider: BoundsProvider,
        cfg: PlannerConfig,
        reward_cfg: RewardConfig,
        clock: Clock,
        *,
        steer: float = 0.0,
        prev_acc: Optional[Acc] = None,
        last_reward: float = 0.0,
    ):
        self.ctx = ctx
        self.provider = provider
        self.cfg = cfg
        self.reward_cfg = reward_cfg
        self.clock = clock
        self.steer = steer
        self.nodes: list[BeliefNode] = []
        self.branching: list[int] = []

        scen = ctx.scenarios
        self.root = self._new_node(
            None, None, np.arange(len(scen)), scen.pos, float(scen.weights.sum()),
            ctx.belief.ego, prev_acc, last_reward, terminal=False,
        )
        self.initial_gap = self.root.gap

    def _new_node(self, parent, action, ids, pos, weight, ego, prev_acc, last_reward, terminal):
        depth = 0 if parent is None else parent.depth + 1
        node = BeliefNode(len(self.nodes), parent, action, depth, ids, pos, weight, ego, prev_acc, last_reward, terminal)
        self.nodes.append(node)

        if terminal:
            node.closed = True
            return node

        lower, upper, phi = self.provider.bounds(node, self.ctx)
        node.upper = upper
        node.lower = min(lower, upper)
        node.phi = phi
        node.closed = node.gap <= 0.0 or phi >= self.cfg.prune_confidence or depth >= self.cfg.max_depth
        return node

    def expand(self, node: BeliefNode) -> None:
        """One child per action and observation"""
        steer = self.steer if node.depth == 0 else 0.0
        for acc in Acc:
            ego, groups, mean_reward = simulate_step(
                node,
                acc,
                steer,
                self.ctx.scenarios,
                self.ctx.belief.obstacles,
                self.reward_cfg,
                pos_bin=self.cfg.pos_bin,
                speed_bin=self.cfg.speed_bin,
                speed_noise=self.cfg.exo_speed_noise,
            )
            self.clock.charge("node_simulation", len(node.ids))
            node.step_reward[acc] = mean_reward
            node.children[acc] = [
                self._new_node(node, acc, g.ids, g.pos, g.weight, ego, acc, g.reward, g.terminal) for g in groups
            ]
            self.branching.append(len(groups))

    def excess(self, node: BeliefNode) -> float:
        return node.weight * self.reward_cfg.gamma**node.depth * node.gap

    def upper_action(self, node: BeliefNode) -> Acc:
        q = node.q_values(self.reward_cfg.gamma)
        return safest_argmax({acc: u for acc, (_, u) in q.items()})

    def backup(self, node: BeliefNode) -> None:
        q = node.q_values(self.reward_cfg.gamma)
        node.lower = max(node.lower, max(low for low, _ in q.values()))
        node.upper = min(node.upper, max(up for _, up in q.values()))
        node.lower = min(node.lower, node.upper)

        best = safest_argmax({acc: u for acc, (_, u) in q.items()})
        if node.gap <= 0.0 or all(child.closed for child in node.children[best]):
            node.closed = True

    def trial(self) -> tuple[list[BeliefNode], int]:
        """Returns the path and the depth reached"""
        threshold = self.cfg.eps_term * self.initial_gap
        node, path, depth = self.root, [self.root], 0

        while node.depth < self.cfg.max_depth:
            if node is not self.root:
                if node.closed:
                    break
                if self.excess(node) <= threshold:
                    node.closed = True
                    break
            elif node.closed and node.expanded:
                break

            if not node.expanded:
                self.expand(node)
            depth = max(depth, node.depth + 1)

            acc = self.upper_action(node)
            open_children = [c for c in node.children[acc] if not c.closed]
            if not open_children:
                break
            node = max(open_children, key=self.excess)
            path.append(node)

        for n in reversed(path):
            if n.expanded:
                self.backup(n)

        return path, depth


class DespotPlanner:
    """Velocity planner. One instance per episode; the bounds provider may
    be shared."""

    def __init__(
        self,
        provider: BoundsProvider,
        cfg: None | PlannerConfig = None,
        reward_cfg: None | RewardConfig = None,
        clock: None | Clock = None,
    ):
        self.provider = provider
        self.cfg = cfg or PlannerConfig()
        self.reward_cfg = reward_cfg or RewardConfig()
        self.clock = clock or WallClock()

    def plan(
        self,
        b: Belief,
        rng: np.random.Generator,
        *,
        steer: float = 0.0,
        prev_acc: Optional[Acc] = None,
        last_reward: float = 0.0,
        ego_path: Optional[PlannedPath] = None,
        past_poses: Sequence[Pose] = (),
        preds: Optional[np.ndarray] = None,
        lstm: Optional[LstmState] = None,
        scenarios: Optional[ScenarioSet] = None,
        trace: bool = False,
    ) -> PlanResult:
        """Search the belief tree and return the planner policy and action"""

        if b.num_particles == 0 or (b.num_agents and not (b.weights.sum(axis=0) > 0).all()):
            raise EmptyBeliefException("Belief has no particles to sample scenarios from")

        start = self.clock.now_ms()
        nnet_start = self.provider.nnet_ms

        if scenarios is None:
            scenarios = sample_scenarios(b, self.cfg.scenarios, rng)

        ctx = SearchContext(b, scenarios, ego_path, tuple(past_poses), preds, lstm)
        tree = BeliefTree(
            ctx, self.provider, self.cfg, self.reward_cfg, self.clock,
            steer=steer, prev_acc=prev_acc, last_reward=last_reward,
        )
        root = tree.root

        trials = []
        depths = []
        while True:
            path, depth = tree.trial()
            depths.append(depth)
            if trace:
                trials.append(
                    {
                        "trial": len(depths),
                        "path": [n.id for n in path],
                        "depth": depth,
                        "L": root.lower,
                        "U": root.upper,
                    }
                )

            if root.closed or len(depths) >= self.cfg.max_trials:
                break
            if root.gap <= self.cfg.eps_term * tree.initial_gap:
                break
            if self.clock.now_ms() - start >= self.cfg.budget_ms:
                logger.debug("Planning budget used up after %d trials", len(depths))
                break

        q = root.q_values(self.reward_cfg.gamma)
        acc = safest_argmax({a: low for a, (low, _) in q.items()})
        policy = policy_from_lower({a: low for a, (low, _) in q.items()}, self.cfg.temperature)

        stats = EffortStats(
            pt=self.clock.now_ms() - start,
            ptn=len(depths),
            ptd=float(np.mean(depths)),
            bnn=len(tree.nodes),
            obf=float(np.mean(tree.branching)) if tree.branching else 0.0,
            nnet=self.provider.nnet_ms - nnet_start,
        )

        logger.debug(
            "Planned %s: L=%.3f, U=%.3f, trials=%d, nodes=%d",
            acc.name, root.lower, root.upper, stats.ptn, stats.bnn,
        )

        dump = None
        if trace:
            dump = {
                "action": acc.name,
                "policy": [float(p) for p in policy],
                "trials": trials,
                "nodes": [n.to_dict() for n in tree.nodes],
            }

        return PlanResult(policy, acc, stats, q, dump)


def plan_velocity(
    b: Belief,
    provider: BoundsProvider,
    cfg: None | PlannerConfig = None,
    rng: None | np.random.Generator = None,
    **kvargs,
) -> PlanResult:
    """Single planning call with a throwaway planner"""
    planner = DespotPlanner(provider, cfg, kvargs.pop("reward_cfg", None), kvargs.pop("clock", None))
    return planner.plan(b, rng or np.random.default_rng(0), **kvargs)
