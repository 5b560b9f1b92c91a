#!/usr/bin/env python
# encoding: utf-8

"""Decision"""


class Decision(dict):
    """The data of one control tick.

    Basically a dict, it is able to hold any data, and able to
    be updated in every pipeline step.
    """

    @property
    def meta(self) -> dict:
        """Decision id, timings etc."""
        return self.setdefault("_meta_", {})

    def trace(self, name: str, msg: str):
        """What happened, step by step"""
        data = self.setdefault("_trace_", [])
        data.append((name, msg))

    @property
    def decision_id(self) -> str:
        return self.meta["decision_id"]
