#!/usr/bin/env python
# encoding: utf-8

"""Training procedure: planner imitating PPO updates after every training
scene, then a calibration pass over the held-out calibration scenes"""

import time
from typing import Any, Optional, Sequence

import numpy as np
import torch

from .. import logging
from ..calibration import CalibrationTable, crude_calibrate, fit_crude
from ..clock import Clock
from ..learner.network import NavPPO
from ..learner.ppo import NonFiniteLossException, PpoTrainer, TransitionBuffer, gae, values_for
from ..scenarios import Scene
from .controller import TRAIN, Controller
from .episode import run_scene
from .settings import NonemptySplitRequiredException, Settings

logger = logging.get_logger(__name__, logging.DEBUG)


def calibration_samples(
    net: NavPPO,
    buffer: TransitionBuffer,
    mc: Sequence[tuple[float, float]],
    settings: Settings,
) -> list[tuple[float, float, float]]:
    """(mu, sigma^2, target) per step; the target is the GAE advantage A_t"""

    if len(mc) != len(buffer):
        raise ValueError(f"MC statistics ({len(mc)}) and transitions ({len(buffer)}) don't line up")

    ppo = settings.ppo
    values = values_for(net, buffer, ppo).double().numpy()
    rewards = [x.reward for x in buffer.transitions]
    terminals = [x.terminal for x in buffer.transitions]
    targets = gae(rewards, values, terminals, ppo.gamma, ppo.lam)
    return [(mu, var, float(target)) for (mu, var), target in zip(mc, targets)]


def train_procedure(
    train_scenes: Sequence[Scene],
    calib_scenes: Sequence[Scene],
    settings: Settings,
    seed: int = 0,
    *,
    passes: Optional[int] = None,
    net: Optional[NavPPO] = None,
    clock: Optional[Clock] = None,
) -> tuple[NavPPO, CalibrationTable, dict[str, Any]]:
    """Returns the trained network, the fitted calibration table and meta
    data for the model file header"""

    if not train_scenes:
        raise NonemptySplitRequiredException("No training scenes")
    if not calib_scenes:
        raise NonemptySplitRequiredException("No calibration scenes")

    passes = passes or settings.harness.passes
    torch.manual_seed(seed)
    net = net or NavPPO(settings.arch)
    trainer = PpoTrainer(net, settings.ppo, seed)
    controller = Controller(settings, TRAIN, net, clock=clock)

    start = time.perf_counter()
    skipped = 0
    for i in range(passes):
        logger.info("Training pass %d/%d over %d scenes", i + 1, passes, len(train_scenes))
        for scene in train_scenes:
            buffer = TransitionBuffer()
            run_scene(scene, controller, seed + i, buffer=buffer)
            if not len(buffer):
                continue
            try:
                trainer.train_update(buffer)
            except NonFiniteLossException as exc:
                skipped += 1
                logger.warning("Scene %s: update skipped: %s", scene.scene_id, exc)

    logger.info("Calibration pass over %d scenes", len(calib_scenes))
    controller = Controller(settings, TRAIN, net, clock=clock, mc_stats=True)
    samples: list[tuple[float, float, float]] = []
    for scene in calib_scenes:
        buffer = TransitionBuffer()
        mc: list[tuple[float, float]] = []
        run_scene(scene, controller, seed, buffer=buffer, mc=mc)
        if len(buffer):
            samples += calibration_samples(net, buffer, mc, settings)

    table = fit_crude(samples, settings.calibration)
    usable = [var for _, var, _ in samples if np.sqrt(max(var, 0.0)) >= settings.calibration.min_sigma]
    table = table.with_conf_scale(
        (crude_calibrate(0.0, var, table)[1] for var in usable), settings.calibration.conf_floor
    )

    training_ms = (time.perf_counter() - start) * 1000.0
    meta = {
        "trainingMs": training_ms,
        "passes": passes,
        "trainScenes": len(train_scenes),
        "calibScenes": len(calib_scenes),
        "calibSamples": len(samples),
        "skippedUpdates": skipped,
        "seed": seed,
    }
    logger.info(
        "Training finished in %.1f s: %d updates, %d skipped, confScale=%.4g",
        training_ms / 1000.0,
        trainer.updates,
        skipped,
        table.conf_scale,
    )
    return net, table, meta
