#!/usr/bin/env python
# encoding: utf-8

"""The 4 Hz controller: one decision pipeline per episode worker"""

from typing import Optional

import numpy as np
import torch

from .. import logging
from ..belief import Belief
from ..calibration import CalibrationTable
from ..clock import Clock, create_clock
from ..learner.network import LstmState, NavPPO, mc_forward_stats, to_batch
from ..pathplan import Pose
from ..pipeline import Decision, Pipeline
from ..planner.bounds import DeployBounds, LtrBounds, NetworkEvaluator, TrainBounds
from ..planner.despot import DespotPlanner
from ..prediction import Predictor, no_prediction, predict_trajectories
from ..scenarios import Scene
from ..world import Acc, Observation
from .settings import HarnessException, MissingModelException, Settings
from .steps import CostmapStep, IntentionStep, PathStep, PredictStep, SteeringStep, VelocityStep

logger = logging.get_logger(__name__, logging.DEBUG)

METHODS = (
    "hyplan",
    "hyplan-noprune",
    "hyplan-nocalib",
    "hyplan-nopred",
    "despot-ltr",
    "navppo-only",
)

# Training bounds, planner policy sampled
TRAIN = "train"

NEEDS_MODEL = {"hyplan", "hyplan-noprune", "hyplan-nocalib", "hyplan-nopred", "navppo-only", TRAIN}
NEEDS_CALIBRATION = {"hyplan", "hyplan-nopred"}


def scene_rng(seed: int, scene: Scene, purpose: int) -> np.random.Generator:
    """Independent, reproducible streams per (run seed, scene, purpose)"""
    return np.random.default_rng([seed & 0xFFFFFFFF, scene.seed & 0xFFFFFFFF, purpose])


class Controller:
    """Runs the 'control' pipeline for every tick of an episode and keeps
    the per episode state (past poses, LSTM carry, previous action and
    reward)."""

    def __init__(
        self,
        settings: Settings,
        method: str,
        net: Optional[NavPPO] = None,
        table: Optional[CalibrationTable] = None,
        *,
        clock: None | Clock = None,
        trace: bool = False,
        mc_stats: bool = False,
    ):
        if method not in METHODS and method != TRAIN:
            raise HarnessException(f"Unknown method: '{method}'. Expected one of {METHODS}")
        if method in NEEDS_MODEL and net is None:
            raise MissingModelException(f"Method '{method}' requires a model file (--model)")
        if method in NEEDS_CALIBRATION and table is None:
            raise MissingModelException(f"Method '{method}' requires a calibration file (--calib)")
        if net is not None and settings.intention.size != net.arch.image_size:
            raise HarnessException(
                f"Intention image size {settings.intention.size} != network input {net.arch.image_size}"
            )

        self.settings = settings
        self.method = method
        self.net = net if method != "despot-ltr" else None
        self.table = table
        self.clock = clock or create_clock(settings.clock_name, settings.clock)
        self.trace = trace
        self.mc_stats = mc_stats
        self.sample_action = method == TRAIN
        self.predictor: Predictor = no_prediction if method == "hyplan-nopred" else predict_trajectories

        self.pipeline = Pipeline(clock=self.clock)
        self.pipeline.add_pipeline("control")
        for name, step in (
            ("predict", PredictStep),
            ("costmap", CostmapStep),
            ("path", PathStep),
            ("steering", SteeringStep),
            ("intention", IntentionStep),
            ("velocity", VelocityStep),
        ):
            self.pipeline.add_step("control", step(self.pipeline, name, self))

        self.evaluator = None
        if self.net is not None:
            self.net.eval()
            self.evaluator = NetworkEvaluator(self.net, settings.reward, settings.intention, self.clock)

        self.planner: Optional[DespotPlanner] = None
        self.planner_rng = self.action_rng = self.mc_rng = np.random.default_rng(0)
        self.past_poses: list[Pose] = []
        self.lstm: Optional[LstmState] = None
        self.prev_acc: Optional[Acc] = None
        self.last_reward = 0.0

    def _bounds(self, bounds_rng: np.random.Generator):
        cfg, horizon = self.settings, self.settings.planner.max_depth
        passes = cfg.calibration.passes
        if self.method == TRAIN:
            return TrainBounds(self.evaluator, cfg.reward, horizon)
        if self.method == "despot-ltr":
            return LtrBounds(cfg.reward, horizon)
        if self.method == "hyplan-noprune":
            return DeployBounds(
                self.evaluator, self.table, cfg.reward, bounds_rng, passes=passes, horizon=horizon, force_confidence=0.0
            )
        if self.method == "hyplan-nocalib":
            scale = self.table.conf_scale if self.table is not None else 1.0
            return DeployBounds(
                self.evaluator, CalibrationTable.identity(scale), cfg.reward, bounds_rng, passes=passes, horizon=horizon
            )
        return DeployBounds(self.evaluator, self.table, cfg.reward, bounds_rng, passes=passes, horizon=horizon)

    def on_new_scene(self, scene: Scene, seed: int):
        """Reset the episode state, fresh random streams"""
        self.planner_rng = scene_rng(seed, scene, 2)
        self.action_rng = scene_rng(seed, scene, 4)
        self.mc_rng = scene_rng(seed, scene, 5)

        if self.method == "navppo-only":
            self.planner = None
        else:
            provider = self._bounds(scene_rng(seed, scene, 3))
            self.planner = DespotPlanner(provider, self.settings.planner, self.settings.reward, self.clock)

        self.past_poses = []
        self.lstm = self.net.zero_state() if self.net is not None else None
        self.prev_acc = None
        self.last_reward = 0.0
        self.pipeline.on_new_scene(scene)

    def control_step(self, b: Belief, obs: Observation, t: int) -> Decision:
        """One tick: path and steering, then the velocity"""

        decision = Decision(t=t, belief=b, obs=obs, lstm=self.lstm)
        self.pipeline.process("control", decision)

        if self.mc_stats and "image" in decision:
            decision["mc"] = mc_forward_stats(
                self.net, decision["image"], decision["features"], self.lstm,
                self.settings.calibration.passes, self.mc_rng,
            )

        budget_ms = self.settings.reward.dt * 1000.0
        if decision.meta["elapsed_ms"] > budget_ms:
            logger.warning(
                "%s: decision took %.1f ms (tick is %.0f ms)",
                decision.decision_id,
                decision.meta["elapsed_ms"],
                budget_ms,
            )

        return decision

    def advance(self, decision: Decision, reward: float) -> None:
        """The decision has been executed and earned 'reward'"""
        b = decision["belief"]
        self.past_poses.append(Pose(b.ego.pos[0], b.ego.pos[1], b.ego.heading))

        if self.net is not None and "image" in decision:
            with torch.no_grad():
                img, feat = to_batch(self.net, decision["image"], decision["features"])
                self.lstm = self.net.trunk(img, feat, self.lstm)

        self.prev_acc = decision["action"].acc
        self.last_reward = reward

