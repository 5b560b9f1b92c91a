#!/usr/bin/env python
# encoding: utf-8

"""All configuration sections a run needs, validated once"""

from typing import NamedTuple, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..belief import BeliefConfig
from ..calibration import CalibrationConfig
from ..clock import ClockConfig
from ..config import Config
from ..intention import IntentionConfig
from ..learner.network import NetworkArch
from ..learner.ppo import PpoConfig
from ..pathplan import PathPlanConfig
from ..planner.despot import PlannerConfig
from ..prediction import PredictionConfig
from ..scenarios import ScenarioConfig
from ..world import RewardConfig


class HarnessException(Exception):
    """HarnessException"""


class NonemptySplitRequiredException(HarnessException):
    """Training needs at least one training and one calibration scene"""


class MissingModelException(HarnessException):
    """The method needs a model file (or calibration table) which wasn't given"""


class HarnessConfig(BaseModel):
    """Episode loop, training and evaluation settings"""

    model_config = ConfigDict(frozen=True)

    # Number of processes. 0 => serial
    process_pool: int = Field(0, ge=0)
    scene_log_dir: Optional[str] = None
    passes: int = Field(1, ge=1)
    # A scenario fails if more than this share of its scenes end in a crash or near-miss
    fail_threshold: float = Field(0.10, ge=0, le=1)


class Settings(NamedTuple):
    """Picklable bundle of every section, shared with worker processes"""

    reward: RewardConfig = RewardConfig()
    scenario: ScenarioConfig = ScenarioConfig()
    belief: BeliefConfig = BeliefConfig()
    prediction: PredictionConfig = PredictionConfig()
    pathplan: PathPlanConfig = PathPlanConfig()
    intention: IntentionConfig = IntentionConfig()
    arch: NetworkArch = NetworkArch()
    ppo: PpoConfig = PpoConfig()
    calibration: CalibrationConfig = CalibrationConfig()
    planner: PlannerConfig = PlannerConfig()
    harness: HarnessConfig = HarnessConfig()
    clock: ClockConfig = ClockConfig()
    clock_name: str = "wall"

    @classmethod
    def from_config(cls, config: Config) -> "Settings":
        return cls(
            reward=config.section("world", RewardConfig),
            scenario=config.section("scenarios", ScenarioConfig),
            belief=config.section("belief", BeliefConfig),
            prediction=config.section("prediction", PredictionConfig),
            pathplan=config.section("pathplan", PathPlanConfig),
            intention=config.section("intention", IntentionConfig),
            arch=config.section("learner.arch", NetworkArch),
            ppo=config.section("learner.ppo", PpoConfig),
            calibration=config.section("calibration", CalibrationConfig),
            planner=config.section("planner", PlannerConfig),
            harness=config.section("harness", HarnessConfig),
            clock=config.section("clock", ClockConfig),
            clock_name=config.get("run.clock", "wall"),
        )
