#!/usr/bin/env python
# encoding: utf-8

"""The steps of the 'control' pipeline: predict, costmap, path, steering,
intention image, velocity"""

import numpy as np
import torch

from .. import logging
from ..learner.network import make_features, softmax, to_batch
from ..pathplan import NoPathException, Pose, build_costmap, extract_steering, hybrid_astar
from ..intention import render_intention_image
from ..pipeline import Decision, DecisionStep
from ..planner.tree import EffortStats
from ..world import Acc, Action

logger = logging.get_logger(__name__, logging.DEBUG)


class ControlStep(DecisionStep):
    """A step with access to the controller (configs, network, planner and
    the per episode state)"""

    def __init__(self, proc, name: str, controller):
        super().__init__(proc, name)
        self.controller = controller


class PredictStep(ControlStep):
    def main(self, decision: Decision):
        ctrl = self.controller
        b = decision["belief"]
        decision["preds"] = ctrl.predictor(
            decision["obs"].exo_pos, b, ctrl.settings.prediction.horizon, ctrl.settings.reward.dt
        )


class CostmapStep(ControlStep):
    def main(self, decision: Decision):
        b = decision["belief"]
        decision["costmap"] = build_costmap(
            b.ego.pos, b.ego.goal, b.obstacles, decision["preds"], self.controller.settings.pathplan
        )


class PathStep(ControlStep):
    """Hybrid A*. Without a path the tick ends with the fallback action."""

    def main(self, decision: Decision):
        ctrl = self.controller
        b = decision["belief"]
        start = Pose(b.ego.pos[0], b.ego.pos[1], b.ego.heading)
        try:
            decision["path"] = hybrid_astar(
                start,
                b.ego.goal,
                decision["costmap"],
                ctrl.settings.pathplan,
                clock=ctrl.clock,
                prev_steer=self.step_data.get("steer", 0.0),
            )
        except NoPathException as exc:
            logger.warning("%s: %s. Fallback: steer 0, decelerate", decision.decision_id, exc)
            decision["path"] = None
            decision["fallback"] = True
            decision["action"] = Action(0.0, Acc.DECELERATE)
            decision["stats"] = EffortStats()
            return True

        steers = decision["path"].steers
        self.step_data["steer"] = steers[0] if steers else 0.0
        return None


class SteeringStep(ControlStep):
    def main(self, decision: Decision):
        decision["steer"] = extract_steering(decision["path"], decision["belief"].ego)


class IntentionStep(ControlStep):
    """Root intention image and features; only if a network is in use"""

    def main(self, decision: Decision):
        ctrl = self.controller
        if ctrl.net is None:
            return

        b = decision["belief"]
        decision["image"] = render_intention_image(
            b, decision["path"], ctrl.past_poses, decision["preds"], b.obstacles, ctrl.settings.intention
        )
        decision["features"] = make_features(
            ctrl.last_reward, ctrl.prev_acc, b.ego.speed, ctrl.settings.reward.v_max_ego
        )


class VelocityStep(ControlStep):
    """Planner (or policy network) acceleration"""

    def main(self, decision: Decision):
        ctrl = self.controller
        if ctrl.planner is None:
            self._from_policy(decision)
        else:
            self._from_planner(decision)

        decision["action"] = Action(decision["steer"], decision["acc"])

    def _from_policy(self, decision: Decision):
        ctrl = self.controller
        start = ctrl.clock.now_ms()
        with torch.no_grad():
            img, feat = to_batch(ctrl.net, decision["image"], decision["features"])
            logits, _, _ = ctrl.net(img, feat, ctrl.lstm)
        ctrl.clock.charge("network_forward")
        elapsed = ctrl.clock.now_ms() - start

        policy = softmax(logits[0].double().numpy())
        decision["policy"] = policy
        decision["acc"] = Acc(int(ctrl.action_rng.choice(len(policy), p=policy)))
        decision["stats"] = EffortStats(pt=elapsed, nnet=elapsed)

    def _from_planner(self, decision: Decision):
        ctrl = self.controller
        result = ctrl.planner.plan(
            decision["belief"],
            ctrl.planner_rng,
            steer=decision["steer"],
            prev_acc=ctrl.prev_acc,
            last_reward=ctrl.last_reward,
            ego_path=decision["path"],
            past_poses=ctrl.past_poses,
            preds=decision["preds"],
            lstm=ctrl.lstm,
            trace=ctrl.trace,
        )

        if ctrl.sample_action:
            acc = Acc(int(ctrl.action_rng.choice(len(result.policy), p=result.policy)))
        else:
            acc = result.acc

        decision["policy"] = np.asarray(result.policy)
        decision["acc"] = acc
        decision["stats"] = result.stats
        if result.trace is not None:
            decision["trace"] = result.trace
