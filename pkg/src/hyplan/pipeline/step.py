#!/usr/bin/env python
# encoding: utf-8

"""DecisionStep"""

from .decision import Decision


class DecisionStep:
    """Base class of all steps of the decision pipeline"""

    def __init__(self, proc, name: str):
        self.processor = proc
        self.step_name = name

    @property
    def step_data(self):
        """Every step has personal data, e.g. the path of the previous tick"""
        return self.processor.data.setdefault(self.step_name, {})

    @step_data.setter
    def step_data(self, value):
        self.processor.data[self.step_name] = value

    def on_new_scene(self, scene):
        """A new episode starts. Reset any per episode state here."""

    def main(self, decision: Decision):
        """Invoked for every decision.

        If main() returns True, all remaining steps will be skipped.
        """
