#!/usr/bin/env python
# encoding: utf-8

# pylint: disable=missing-module-docstring, line-too-long

# Packaged defaults. Users override any of these with a plain 'key = value'
# file (--config), e.g.
#
#   planner.scenarios = 16
#   planner.budget_ms = 50
#   run.clock = "virtual"
#
# Sections that are missing here fall back to the defaults of their pydantic
# models (e.g. world.RewardConfig, planner.PlannerConfig).

from datetime import datetime

# Don't change the name "CONFIG".
CONFIG = {
    "version": 1,
    "run": {
        # --seed wins, then this one, then $HYPLAN_SEED, then 0
        "seed": None,
        # "wall" or "virtual"
        "clock": "wall",
        # Timestamp when the app was started
        "timestamp": lambda: datetime.now().strftime("%Y%m%d-%H%M%S"),
        "out_dir": "./hyplan-out",
    },
    "clock": {
        # Virtual clock unit costs in milliseconds
        "astar_expansion_ms": 0.002,
        "node_simulation_ms": 0.01,
        "network_forward_ms": 0.5,
    },
    "train": {
        "model_file": "{run.out_dir}/navppo.{run.timestamp}.bin",
        "calib_file": "{run.out_dir}/crude.{run.timestamp}.json",
    },
    "harness": {
        # Number of processes. 0 => evaluate serially
        "process_pool": 0,
        # One log file per scene, if set
        "scene_log_dir": None,
    },
    # Fed to logging.config.dictConfig(), placeholders are resolved.
    "logging": {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "simple": {
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            }
        },
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "level": "INFO",
                "formatter": "simple",
                "stream": "ext://sys.stderr",
            },
        },
        "root": {
            "level": "INFO",
            "handlers": ["console"],
        },
    },
}
