#!/usr/bin/env python
# -*- coding: utf-8 -*-

# pylint: disable=missing-function-docstring, missing-module-docstring

import pytest

from hyplan.clock import VirtualClock
from hyplan.pipeline import Decision, DecisionStep, Pipeline, PipelineException
from hyplan.scenarios import DEFAULT_GRID, TEMPLATES, build_scene


class CountingStep(DecisionStep):
    def __init__(self, proc, name, stop=False):
        super().__init__(proc, name)
        self.stop = stop
        self.events = []

    def on_new_scene(self, scene):
        self.events.append(f"scene {scene.scene_id}")

    def main(self, decision: Decision):
        self.step_data["count"] = self.step_data.get("count", 0) + 1
        decision[self.step_name] = self.step_data["count"]
        return self.stop


class FailingStep(DecisionStep):
    def main(self, decision: Decision):
        raise ValueError("boom")


def test_constructor():
    pipe = Pipeline(step_class=DecisionStep)
    step = DecisionStep(pipe, "test-1")
    decision = Decision()

    assert "_meta_" not in decision
    _ = decision.meta
    assert "_meta_" in decision

    with pytest.raises(PipelineException):
        pipe.add_step("", step)

    pipe.add_pipeline("")
    pipe.add_step("", step)

    step2 = DecisionStep(pipe, "test-2")
    pipe.add_step("", step2)
    assert list(pipe.foreach_step()) == [step, step2]

    with pytest.raises(PipelineException):
        pipe.add_step("", "not a step")

    pipe.on_new_scene(build_scene(TEMPLATES[0], 1.0, 20.0, 0))
    pipe.process("", decision)
    assert decision.decision_id == "T1-v1.00-d20:0"


def test_process():
    clock = VirtualClock()
    pipe = Pipeline(clock=clock)
    pipe.add_pipeline("control")
    first = CountingStep(pipe, "first")
    second = CountingStep(pipe, "second", stop=True)
    third = CountingStep(pipe, "third")
    for step in (first, second, third):
        pipe.add_step("control", step)

    scene = build_scene(TEMPLATES[1], DEFAULT_GRID.speeds[0], DEFAULT_GRID.dists[0], 0)
    pipe.on_new_scene(scene)
    for t in range(3):
        decision = pipe.process("control", Decision(t=t))
        assert decision["first"] == t + 1
        assert decision["second"] == t + 1
        # 'second' returned True
        assert "third" not in decision
        assert decision.decision_id == f"{scene.scene_id}:{t}"
        assert decision.meta["elapsed_ms"] == 0.0
        assert decision["_trace_"][-1] == ("second", "stop")

    assert pipe.decision_count == 3
    assert first.events == [f"scene {scene.scene_id}"]
    assert third.events == [f"scene {scene.scene_id}"]

    # A new scene resets the step data
    pipe.on_new_scene(scene)
    decision = pipe.process("control", Decision(t=0))
    assert decision["first"] == 1

    with pytest.raises(PipelineException):
        pipe.process("unknown", Decision())

    with pytest.raises(PipelineException):
        pipe.process("control", {"t": 0})


def test_failing_step():
    pipe = Pipeline()
    pipe.add_pipeline("control")
    pipe.add_step("control", FailingStep(pipe, "fail"))

    with pytest.raises(PipelineException) as exc:
        pipe.process("control", Decision(t=0))

    cause = exc.value.__cause__
    assert isinstance(cause, PipelineException)
    assert isinstance(cause.__cause__, ValueError)


def test_decision():
    decision = Decision(t=5)
    decision.trace("path", "enter")
    assert decision["_trace_"] == [("path", "enter")]
