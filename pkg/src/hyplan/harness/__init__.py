#!/usr/bin/env python
# encoding: utf-8

"""Control loop, training procedure, evaluation and metrics"""

from .settings import (
    HarnessException,
    NonemptySplitRequiredException,
    MissingModelException,
    HarnessConfig,
    Settings,
)
from .controller import METHODS, TRAIN, Controller, scene_rng
from .episode import EpisodeLog, run_scene
from .training import calibration_samples, train_procedure
from .evaluation import (
    COLUMNS,
    compute_metrics,
    evaluate,
    metrics_frame,
    read_metrics,
    run_scenes,
    write_metrics,
)
