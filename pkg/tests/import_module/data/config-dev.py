#!/usr/bin/env python
# encoding: utf-8

CONFIG = {
    "planner": {
        "scenarios": 8,
    },
    "run": {
        "out_dir": "{project_root}/out",
    },
}
