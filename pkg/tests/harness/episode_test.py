#!/usr/bin/env python
# -*- coding: utf-8 -*-

# pylint: disable=missing-function-docstring, missing-module-docstring

import numpy as np
import pytest
import torch

from hyplan.calibration import CalibrationConfig, CalibrationTable
from hyplan.clock import VirtualClock
from hyplan.harness import (
    Controller,
    HarnessException,
    MissingModelException,
    NonemptySplitRequiredException,
    run_scene,
    train_procedure,
)
from hyplan.harness.controller import TRAIN
from hyplan.intention import IntentionConfig
from hyplan.learner.network import NavPPO, NetworkArch
from hyplan.learner.ppo import TransitionBuffer
from hyplan.pathplan import PathPlanConfig
from hyplan.planner import PlannerConfig
from hyplan.scenarios import build_scene, template_by_id
from hyplan.world import Acc, Action, Observation, Outcome, Rect, RewardConfig

from builders import ExactBounds, ego_state, point_belief, tiny_settings


def tiny_net(seed=0) -> NavPPO:
    torch.manual_seed(seed)
    return NavPPO(NetworkArch.tiny())


def test_controller_errors():
    settings = tiny_settings()
    with pytest.raises(HarnessException):
        Controller(settings, "unknown")

    with pytest.raises(MissingModelException):
        Controller(settings, "hyplan")

    with pytest.raises(MissingModelException):
        Controller(settings, "hyplan", tiny_net())

    with pytest.raises(MissingModelException):
        Controller(settings, TRAIN)

    with pytest.raises(HarnessException):
        Controller(tiny_settings(intention=IntentionConfig(size=16)), "navppo-only", tiny_net())

    # Neither a model nor a calibration table
    Controller(settings, "despot-ltr")
    # Pruning disabled: no calibration table needed
    Controller(settings, "hyplan-noprune", tiny_net())
    Controller(settings, "hyplan", tiny_net(), CalibrationTable.identity())


def test_run_scene():
    settings = tiny_settings(reward=RewardConfig(t_max=6))
    scene = build_scene(template_by_id(1), 1.0, 20.0, 0)
    log = run_scene(scene, Controller(settings, "despot-ltr"), 0)

    assert log.scene_id == scene.scene_id
    assert log.method == "despot-ltr"
    assert len(log.steps) == 6
    assert log.outcome == Outcome.TIMEOUT

    step = log.steps[0]
    assert step["t"] == 0
    assert step["acc"] in {x.name for x in Acc}
    assert set(step["stats"]) == {"PT", "PTN", "PTD", "BNN", "OBF", "NNET"}
    assert step["stats"]["NNET"] == 0.0
    assert step["stats"]["PTN"] >= 1
    assert set(step["belief"]) >= {"t", "resets", "ess"}

    # Deterministic with the virtual clock
    again = run_scene(scene, Controller(settings, "despot-ltr"), 0)
    assert again.records() == log.records()


def test_navppo_only():
    settings = tiny_settings(reward=RewardConfig(t_max=4))
    scene = build_scene(template_by_id(4), 1.0, 30.0, 0)
    log = run_scene(scene, Controller(settings, "navppo-only", tiny_net()), 0)

    assert len(log.steps) == 4
    for step in log.steps:
        assert step["stats"]["BNN"] == 0
        assert step["stats"]["NNET"] > 0.0


def test_training_transitions():
    settings = tiny_settings(reward=RewardConfig(t_max=5))
    scene = build_scene(template_by_id(2), 1.0, 25.0, 0)
    controller = Controller(settings, TRAIN, tiny_net(), mc_stats=True)

    buffer, mc = TransitionBuffer(), []
    log = run_scene(scene, controller, 0, buffer=buffer, mc=mc)
    assert len(buffer) == len(log.steps) == 5
    assert len(mc) == 5
    assert not buffer.terminated
    assert buffer.final is not None

    first = buffer.transitions[0]
    assert first.image.shape == (8, 8, 3)
    # No previous action at t=0
    assert first.features[1:4].tolist() == [0.0, 0.0, 0.0]
    assert not first.h.any()
    assert first.policy.sum() == pytest.approx(1.0)
    assert buffer.transitions[1].features[1 + buffer.transitions[0].acc] == 1.0


class AcceleratingController(Controller):
    """Exact bounds which always favour Accelerate"""

    def _bounds(self, bounds_rng):
        values = {Acc.ACCELERATE: 100.0, Acc.MAINTAIN: 0.0, Acc.DECELERATE: -100.0}
        return ExactBounds(lambda n: values[n.action] if n.depth >= 1 else None)


@pytest.mark.slow
def test_reaches_goal():
    settings = tiny_settings(planner=PlannerConfig(scenarios=4, max_depth=1, max_trials=2, budget_ms=1e9))
    scene = build_scene(template_by_id(4), 0.5, 45.0, 0)
    log = run_scene(scene, AcceleratingController(settings, "despot-ltr"), 0)

    assert log.outcome == Outcome.GOAL
    assert not log.near_miss
    assert log.ttg == pytest.approx(len(log.steps) * settings.reward.dt)
    assert all(x["acc"] == "ACCELERATE" for x in log.steps if not x["fallback"])


def test_train_procedure_splits():
    scene = build_scene(template_by_id(1), 1.0, 20.0, 0)
    with pytest.raises(NonemptySplitRequiredException):
        train_procedure([], [scene], tiny_settings())

    with pytest.raises(NonemptySplitRequiredException):
        train_procedure([scene], [], tiny_settings())


@pytest.mark.slow
def test_train_procedure():
    settings = tiny_settings(
        reward=RewardConfig(t_max=12),
        calibration=CalibrationConfig(min_samples=4, passes=4),
    )
    train = [build_scene(template_by_id(1), 1.0, 20.0, 0)]
    calib = [build_scene(template_by_id(2), 1.5, 25.0, 0), build_scene(template_by_id(5), 0.5, 30.0, 0)]
    net, table, meta = train_procedure(train, calib, settings, seed=3, clock=VirtualClock())

    assert net.arch == settings.arch
    assert np.isfinite(table.mean_z)
    assert table.var_z >= 0.0
    assert table.conf_scale > 0.0
    assert meta["calibSamples"] >= 4
    assert meta["trainScenes"] == 1
    assert meta["calibScenes"] == 2
    assert meta["trainingMs"] > 0.0


def walls_around(x, y, d=5.0, w=2.0):
    """A closed box of 4 walls around (x, y)"""
    return (
        Rect(x - d - w, y - d - w, x - d, y + d + w),
        Rect(x + d, y - d - w, x + d + w, y + d + w),
        Rect(x - d - w, y - d - w, x + d + w, y - d),
        Rect(x - d - w, y + d, x + d + w, y + d + w),
    )


def test_no_path_fallback():
    settings = tiny_settings(
        reward=RewardConfig(t_max=2), pathplan=PathPlanConfig(resolution=1.0, weights=(2.0,))
    )
    net = tiny_net()
    controller = Controller(settings, TRAIN, net)
    controller.on_new_scene(build_scene(template_by_id(1), 1.0, 20.0, 0), 0)
    lstm = controller.lstm

    ego = ego_state()
    b = point_belief(ego, obstacles=walls_around(*ego.pos))
    decision = controller.control_step(b, Observation(ego, ()), 0)

    assert decision["fallback"] is True
    assert decision["path"] is None
    assert decision["action"] == Action(0.0, Acc.DECELERATE)
    assert decision["stats"].to_dict()["PTN"] == 0
    # The remaining steps did not run
    assert "image" not in decision
    assert "policy" not in decision
    assert decision["_trace_"][-1] == ("path", "stop")

    controller.advance(decision, -1.0)
    assert controller.lstm is lstm
    assert controller.prev_acc == Acc.DECELERATE

    # A whole episode without a path: every tick falls back, no transition
    scene = build_scene(template_by_id(1), 1.0, 20.0, 0)
    x, y = scene.state.ego.pos
    scene = scene._replace(state=scene.state._replace(obstacles=walls_around(x, y)))
    buffer = TransitionBuffer()
    log = run_scene(scene, Controller(settings, TRAIN, net), 0, buffer=buffer)

    assert log.steps
    for step in log.steps:
        assert step["fallback"]
        assert (step["steer"], step["acc"]) == (0.0, "DECELERATE")
    assert len(buffer) == 0
