#!/usr/bin/env python
# encoding: utf-8

"""Multi agent behaviour prediction.

The default predictor follows the world's own assumption: every agent walks
straight to its goal. Goal and speed come from the belief's mode particle.
"""

from typing import Optional, Protocol, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .belief import Belief, advance_positions, mode_particles
from .world import Vec2


class PredictionConfig(BaseModel):
    """Forecast horizon"""

    model_config = ConfigDict(frozen=True)

    horizon: int = Field(20, ge=1)


class Predictor(Protocol):
    """Returns (n, H, 2) future positions at dt spacing, current one excluded"""

    def __call__(
        self, obs_exo: Sequence[Optional[Vec2]], b: Belief, horizon: int, dt: float
    ) -> np.ndarray: ...


def predict_trajectories(
    obs_exo: Sequence[Optional[Vec2]], b: Belief, horizon: int, dt: float
) -> np.ndarray:
    """Straight line roll out of the mode particle (visible agents start at
    their observed position)"""

    if horizon < 1:
        raise ValueError(f"Horizon must be >= 1: {horizon}")

    n = b.num_agents
    rtn = np.zeros((n, horizon, 2))
    if n == 0:
        return rtn

    mode = mode_particles(b)
    agents = np.arange(n)
    pos = b.pos[mode, agents].copy()
    goal = b.goal[mode, agents]
    speed = b.speed[mode, agents]

    for i, obs in enumerate(obs_exo):
        if obs is not None:
            pos[i] = obs

    for k in range(horizon):
        pos = advance_positions(pos, goal, speed, dt)
        rtn[:, k] = pos

    return rtn


def no_prediction(
    obs_exo: Sequence[Optional[Vec2]], b: Belief, horizon: int, dt: float
) -> np.ndarray:
    """No forecast at all"""
    # pylint: disable=unused-argument
    return np.zeros((b.num_agents, 0, 2))
