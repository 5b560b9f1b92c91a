#!/usr/bin/env python
# encoding: utf-8

"""Belief tree search for the velocity action"""

from .tree import BeliefNode, EffortStats, ScenarioSet, StepGroup, sample_scenarios, simulate_step
from .bounds import (
    BoundsProvider,
    DeployBounds,
    LtrBounds,
    NetworkEvaluator,
    SearchContext,
    TrainBounds,
    heuristic_l_tr,
    optimistic_upper,
)
from .despot import (
    PlannerException,
    EmptyBeliefException,
    PlannerConfig,
    PlanResult,
    DespotPlanner,
    plan_velocity,
    policy_from_lower,
    safest_argmax,
)
