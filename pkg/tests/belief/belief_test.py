#!/usr/bin/env python
# -*- coding: utf-8 -*-

# pylint: disable=missing-function-docstring, missing-module-docstring

import numpy as np
import pytest

from hyplan.belief import (
    BeliefConfig,
    BeliefException,
    effective_sample_size,
    init_belief,
    mode_particles,
    predict_particles,
    summary,
    systematic_resample,
    top_particles,
    update_belief,
)
from hyplan.scenarios import build_scene, template_by_id
from hyplan.world import Acc, Action, Observation, RewardConfig, line_of_sight, observe, points_in_rects

from builders import ego_state, point_belief

CFG = BeliefConfig(particles=50)


def test_init_visible():
    scene = build_scene(template_by_id(1), 1.0, 20.0, 0)
    obs = observe(scene.state)
    b = init_belief(obs, scene, np.random.default_rng(0), CFG)

    assert b.pos.shape == (50, 1, 2)
    assert b.num_particles == 50
    assert b.num_agents == 1
    assert np.allclose(b.pos[:, 0], obs.exo_pos[0])
    assert np.allclose(b.weights.sum(axis=0), 1.0)
    assert ((0.5 <= b.speed) & (b.speed <= 2.0)).all()

    goals = {tuple(x) for x in np.asarray(scene.goals[0])}
    assert {tuple(x) for x in b.goal[:, 0]} <= goals


def test_init_occluded():
    scene = build_scene(template_by_id(2), 1.0, 20.0, 0)
    obs = observe(scene.state)
    assert obs.exo_pos[0] is None

    b = init_belief(obs, scene, np.random.default_rng(1), CFG)
    pos = b.pos[:, 0]
    assert len({tuple(x) for x in pos}) > 1
    assert not line_of_sight(scene.state.ego.pos, pos, scene.state.obstacles).any()
    assert not points_in_rects(pos, scene.state.obstacles).any()

    region = scene.spawn[0]
    assert ((region.xmin <= pos[:, 0]) & (pos[:, 0] <= region.xmax)).all()
    assert ((region.ymin <= pos[:, 1]) & (pos[:, 1] <= region.ymax)).all()


def test_update_visible():
    ego = ego_state()
    b = point_belief(ego, [((5.0, 0.0), (5.0, 5.0), 1.0)])
    b.pos[1:, 0] = (15.0, 0.0)
    b.goal[1:, 0] = (5.0, -5.0)

    obs = Observation(ego, ((5.0, 0.0),))
    nxt = update_belief(b, obs, np.random.default_rng(0), BeliefConfig(particles=4))

    assert np.allclose(nxt.pos[:, 0], (5.0, 0.0))
    # Resampled: only the consistent hypothesis survives, weights uniform again
    assert np.allclose(nxt.goal[:, 0], (5.0, 5.0))
    assert np.allclose(nxt.weights, 0.25)
    assert nxt.resets == 0

    with pytest.raises(BeliefException):
        update_belief(b, Observation(ego, ()), np.random.default_rng(0))


def test_update_occluded():
    scene = build_scene(template_by_id(2), 1.0, 20.0, 0)
    obs = observe(scene.state)
    b = init_belief(obs, scene, np.random.default_rng(2), CFG)

    # One hypothesis is moved into plain sight, the observation says 'hidden'
    b.pos[0, 0] = (5.0, -1.5)
    nxt = update_belief(b, obs, np.random.default_rng(2), BeliefConfig(particles=50, resample_ratio=0.0))
    assert nxt.weights[0, 0] == 0.0
    assert nxt.weights[:, 0].sum() == pytest.approx(1.0)


def test_belief_reset():
    ego = ego_state()
    b = point_belief(ego, [((5.0, 0.0), (5.0, 5.0), 1.0)])

    # Every hypothesis is visible, but the agent is reported occluded
    obs = Observation(ego, (None,))
    nxt = update_belief(b, obs, np.random.default_rng(0), BeliefConfig(particles=4))
    assert nxt.resets == 1
    assert np.allclose(nxt.weights, 0.25)


def test_predict_particles():
    ego = ego_state()
    b = point_belief(ego, [((5.0, 0.0), (5.0, 5.0), 2.0)])
    nxt = predict_particles(b, Action(0.0, Acc.ACCELERATE), RewardConfig())
    assert nxt.t == 1
    assert np.allclose(nxt.pos[:, 0], (5.0, 0.5))
    assert nxt.ego.speed == pytest.approx(4.375)
    assert np.array_equal(nxt.weights, b.weights)


def test_particle_selection():
    ego = ego_state()
    b = point_belief(ego, [((5.0, 0.0), (5.0, 5.0), 1.0), ((9.0, 0.0), (9.0, 5.0), 1.0)])
    b.weights[:, 0] = (0.1, 0.4, 0.4, 0.1)
    b.weights[:, 1] = (0.1, 0.2, 0.3, 0.4)

    assert mode_particles(b).tolist() == [1, 3]
    assert top_particles(b, 3).tolist() == [[1, 3], [2, 2], [0, 1]]
    assert top_particles(b, 10).shape == (4, 2)

    data = summary(b)
    assert data["t"] == 0
    assert len(data["ess"]) == 2
    assert data["modeGoal"] == [[5.0, 5.0], [9.0, 5.0]]

    assert effective_sample_size(np.full((4, 1), 0.25))[0] == pytest.approx(4.0)


def test_systematic_resample():
    rng = np.random.default_rng(0)
    assert systematic_resample(np.array([0.0, 1.0, 0.0]), rng).tolist() == [1, 1, 1]

    idx = systematic_resample(np.array([0.5, 0.5]), rng)
    assert sorted(idx.tolist()) == [0, 1]


def test_resample_keeps_mean_speed():
    rng = np.random.default_rng(3)
    weights = rng.dirichlet(np.ones(50))
    speed = rng.uniform(0.5, 2.0, size=50)
    expected = float(weights @ speed)

    means = [speed[systematic_resample(weights, rng)].mean() for _ in range(1000)]
    assert abs(np.mean(means) - expected) < 0.05
