#!/usr/bin/env python
# encoding: utf-8

CONFIG = {
    "planner": {
        "scenarios": 16,
    },
}
