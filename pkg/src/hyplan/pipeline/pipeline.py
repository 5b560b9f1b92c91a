#!/usr/bin/env python
# encoding: utf-8

"""Pipeline"""

from typing import Any, Type

from ..clock import Clock, WallClock
from .decision import Decision
from .step import DecisionStep


class PipelineException(Exception):
    """PipelineException"""


class Pipeline:
    """Named groups of steps and the execution of a group for a decision"""

    def __init__(self, step_class: Type = DecisionStep, clock: None | Clock = None):
        self.step_class = step_class
        self.clock = clock or WallClock()

        # <group> -> [list of steps]
        self.pipelines: dict[str, list[DecisionStep]] = {}

        # Step personal data, by step name
        self.data: dict[str, Any] = {}

        self.decision_count = 0
        self.scene_id: None | str = None

    def add_pipeline(self, name: str):
        """Add a new pipeline (group of steps)"""
        self.pipelines.setdefault(name, [])

    def add_step(self, name: str, step: DecisionStep):
        """Add the step to an already registered pipeline"""
        if not isinstance(step, self.step_class):
            raise PipelineException(f"Steps must be of type {self.step_class.__name__}: '{step}'")
        if name not in self.pipelines:
            raise PipelineException(f"Unknown pipeline: '{name}'")

        self.pipelines[name].append(step)

    def foreach_step(self):
        """Loop over all steps of all groups"""
        for pipe in self.pipelines.values():
            yield from pipe

    def on_new_scene(self, scene):
        """Start a new episode"""
        self.scene_id = getattr(scene, "scene_id", str(scene))
        self.decision_count = 0
        self.data.clear()

        for step in self.foreach_step():
            step.on_new_scene(scene)

    def exec_step(self, _pipeline: str, step: DecisionStep, decision: Decision):
        """Possibly be subclassed, this function invokes a step"""
        return step.main(decision)

    def _exec_pipeline(self, pipeline: str, decision: Decision):
        for step in self.pipelines[pipeline]:
            try:
                decision.trace(step.step_name, "enter")
                if self.exec_step(pipeline, step, decision) is True:
                    decision.trace(step.step_name, "stop")
                    break
            except Exception as ex:
                raise PipelineException(f"Error while executing step={step.step_name}") from ex

    def process(self, pipeline: str, decision: Decision) -> Decision:
        """Execute the pipeline for the decision"""
        if not isinstance(decision, Decision):
            raise PipelineException(f"Expected a Decision: {type(decision)}")
        if pipeline not in self.pipelines:
            raise PipelineException(f"Unknown pipeline: '{pipeline}'")

        t = decision.get("t", self.decision_count)
        self.decision_count += 1
        decision.meta["decision_id"] = f"{self.scene_id}:{t}"
        decision.meta["time_start"] = start = self.clock.now_ms()

        try:
            self._exec_pipeline(pipeline, decision)
        except PipelineException as ex:
            raise PipelineException(f"Error while executing pipeline '{pipeline}'") from ex

        decision.meta["time_finished"] = end = self.clock.now_ms()
        decision.meta["elapsed_ms"] = end - start
        return decision

