#!/usr/bin/env python
# -*- coding: utf-8 -*-

# pylint: disable=missing-function-docstring, missing-module-docstring

import math

import numpy as np
import pytest

from hyplan.intention import IntentionConfig, render_intention_image, save_png
from hyplan.pathplan import PlannedPath, Pose
from hyplan.world import Rect

from builders import ego_state, point_belief

CFG = IntentionConfig()
R, G, B = 0, 1, 2


def pixel(x, y, center=(0.0, -1.5), cfg=CFG):
    px = cfg.window / cfg.size
    col = math.floor((x - center[0] + cfg.window / 2) / px)
    row = math.floor((cfg.window / 2 - (y - center[1])) / px)
    return row, col


def test_layers():
    ego = ego_state()
    b = point_belief(ego, [((10.0, 5.0), (10.0, -5.0), 1.0)])
    obstacles = [Rect(5.0, -5.0, 8.0, -3.0)]
    image = render_intention_image(b, None, [], None, obstacles, CFG)

    assert image.shape == (84, 84, 3)
    assert image.dtype == np.float32
    assert 0.0 <= image.min() and image.max() <= 1.0

    assert image[pixel(6.5, -4.0)][R] == 1.0
    assert image[pixel(10.0, 5.0)][R] == 0.25
    assert image[pixel(0.0, -1.5)][B] == 1.0
    # The goal is outside the window, and there is no path
    assert image[..., G].max() == 0.0


def test_path_and_goal():
    ego = ego_state(goal=(5.0, -1.5))
    b = point_belief(ego, [])
    path = PlannedPath((Pose(0.0, -1.5, math.pi), Pose(-6.0, -1.5, math.pi)), (0.0,), 6.0)
    image = render_intention_image(b, path, [], None, [], CFG)

    assert image[pixel(-3.0, -1.5)][G] == 1.0
    assert image[pixel(-6.0, -1.5)][G] == 1.0
    assert image[pixel(5.0, -1.5)][G] == pytest.approx(0.7)
    assert image[pixel(0.0, 8.0)][G] == 0.0


def test_predictions():
    b = point_belief(ego_state(), [])
    preds = np.array([[(-8.0, 8.0), (-8.0, 9.0), (-8.0, 10.0)]])
    image = render_intention_image(b, None, [], preds, [], CFG)

    values = [image[pixel(*x)][R] for x in preds[0]]
    assert values == pytest.approx([1.0, 0.9, 0.81])


def test_past_poses():
    b = point_belief(ego_state(), [])
    past = [Pose(-9.0 + 2 * k, 5.0, 0.0) for k in range(10)]
    image = render_intention_image(b, None, past, None, [], CFG)

    values = [float(image[pixel(p.x, p.y)][B]) for p in past]
    # Only the 8 most recent, the newest brightest
    assert values[:2] == [0.0, 0.0]
    assert values[2] == pytest.approx(0.3)
    assert values[-1] == 1.0
    assert all(a < b for a, b in zip(values[2:-1], values[3:]))


def test_translation_invariance():
    def scene(dx, dy):
        ego = ego_state(x=dx, y=-1.5 + dy, goal=(5.0 + dx, -1.5 + dy))
        b = point_belief(ego, [((10.0 + dx, 5.0 + dy), (10.0 + dx, -5.0 + dy), 1.0)])
        path = PlannedPath((Pose(dx, -1.5 + dy, 0.0), Pose(4.0 + dx, 0.5 + dy, 0.5)), (25.0,), 4.5)
        past = [Pose(-6.0 + dx + k, -1.5 + dy, 0.0) for k in range(4)]
        preds = np.array([[(10.0 + dx, 4.75 + dy), (10.0 + dx, 4.5 + dy)]])
        obstacles = [Rect(5.0 + dx, -5.0 + dy, 8.0 + dx, -3.0 + dy)]
        return render_intention_image(b, path, past, preds, obstacles, CFG)

    image = scene(0.0, 0.0)
    assert np.array_equal(image, scene(16.0, -8.0))
    assert np.array_equal(image, scene(-32.0, 4.0))


def test_center_without_belief():
    obstacles = [Rect(5.0, -5.0, 8.0, -3.0)]
    assert not render_intention_image(None, None, [], None, obstacles, CFG).any()

    image = render_intention_image(None, None, [], None, obstacles, CFG, center=(0.0, -1.5))
    assert image[pixel(6.5, -4.0)][R] == 1.0
    # No ego footprint without a belief
    assert image[..., B].max() == 0.0


def test_save_png(tmp_path):
    b = point_belief(ego_state(), [((10.0, 5.0), (10.0, -5.0), 1.0)])
    image = render_intention_image(b, None, [], None, [Rect(5.0, -5.0, 8.0, -3.0)], CFG)
    file = save_png(image, tmp_path, "images", "t0.png")
    assert file.is_file()
    assert file.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
