#!/usr/bin/env python
# encoding: utf-8

"""The nine scenario pedestrian crossing benchmark and its split.

The ego drives along the right lane (y = -1.5) of a straight road
(y in [-3, 3]) from x = 0 towards x = 60. Sidewalks are at y = +/-4.5.
"Right" is the -y side of the road, seen from the ego.
"""

import math
import hashlib
from enum import Enum
from typing import Any, Iterable, NamedTuple, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from . import logging
from .file_utils import read_json, write_json
from .world import AgentKind, AgentState, Rect, Vec2, WorldState, make_agent

logger = logging.get_logger(__name__, logging.DEBUG)


class ScenarioException(Exception):
    """ScenarioException"""


class OutOfRangeException(ScenarioException):
    """Scene parameters outside of the benchmark grid"""


class Layout(str, Enum):
    """Road layouts"""

    STRAIGHT_ROAD = "straight_road"
    OCCLUDED_PARKED_CAR = "occluded_parked_car"
    INCOMING_CAR = "incoming_car"
    T_INTERSECTION = "t_intersection"
    CROSS_INTERSECTION = "cross_intersection"


class ScenarioTemplate(NamedTuple):
    """'side' is where the pedestrian starts: +1 left (+y), -1 right (-y)"""

    id: int
    layout: Layout
    side: int
    name: str


TEMPLATES: tuple[ScenarioTemplate, ...] = (
    ScenarioTemplate(1, Layout.STRAIGHT_ROAD, -1, "straight road, pedestrian from the right"),
    ScenarioTemplate(2, Layout.OCCLUDED_PARKED_CAR, -1, "parked car hides a pedestrian on the right"),
    ScenarioTemplate(3, Layout.OCCLUDED_PARKED_CAR, +1, "parked car hides a pedestrian on the left"),
    ScenarioTemplate(4, Layout.STRAIGHT_ROAD, +1, "straight road, pedestrian from the left"),
    ScenarioTemplate(5, Layout.INCOMING_CAR, -1, "incoming car, pedestrian from the right"),
    ScenarioTemplate(6, Layout.INCOMING_CAR, +1, "incoming car, pedestrian from the left"),
    ScenarioTemplate(7, Layout.T_INTERSECTION, +1, "T-intersection, pedestrian leaves the left arm"),
    ScenarioTemplate(8, Layout.T_INTERSECTION, -1, "T-intersection, pedestrian leaves the right arm"),
    ScenarioTemplate(9, Layout.CROSS_INTERSECTION, -1, "cross intersection, pedestrian crosses behind buildings"),
)


def template_by_id(template_id: int) -> ScenarioTemplate:
    """Template 1..9"""
    for template in TEMPLATES:
        if template.id == template_id:
            return template

    raise OutOfRangeException(f"Unknown scenario template: {template_id}")


class ScenarioConfig(BaseModel):
    """Benchmark geometry and parameter ranges"""

    model_config = ConfigDict(frozen=True)

    ego_start: tuple[float, float] = (0.0, -1.5)
    ego_goal: tuple[float, float] = (60.0, -1.5)
    ego_speed: float = Field(4.0, ge=0)
    sidewalk_y: float = 4.5
    speed_min: float = 0.5
    speed_max: float = 2.0
    dist_min: float = 5.0
    dist_max: float = 45.0
    car_speed: float = 5.0
    car_speed_jitter: float = 0.5
    # Goal hypotheses "forward"/"backward" are this far along the sidewalk
    walk_offset: float = 20.0
    spawn_half_length: float = 6.0
    spawn_half_width: float = 1.0


class Grid(NamedTuple):
    """Parameter grid of the benchmark (inclusive ranges)"""

    speeds: tuple[float, ...]
    dists: tuple[float, ...]


def _inclusive_range(start: float, stop: float, step: float) -> tuple[float, ...]:
    if step <= 0:
        raise ValueError(f"Step must be > 0: {step}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 6) for i in range(max(count, 0)))


DEFAULT_GRID = Grid(_inclusive_range(0.5, 2.0, 0.25), _inclusive_range(5, 45, 5))


def parse_grid(spec: None | str) -> Grid:
    """'speeds=0.5:2.0:0.25;dists=5:45:5'. Missing parts keep their defaults.
    A single value ('speeds=1.0') is allowed as well."""

    if not spec:
        return DEFAULT_GRID

    values: dict[str, tuple[float, ...]] = {}
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"Invalid grid spec (expected name=a:b:step): '{part}'")

        name, text = (x.strip() for x in part.split("=", 1))
        if name not in ("speeds", "dists"):
            raise ValueError(f"Unknown grid dimension: '{name}'")

        nums = [float(x) for x in text.split(":")]
        if len(nums) == 1:
            values[name] = (nums[0],)
        elif len(nums) == 3:
            values[name] = _inclusive_range(*nums)
        else:
            raise ValueError(f"Invalid grid range: '{text}'")

    return Grid(values.get("speeds", DEFAULT_GRID.speeds), values.get("dists", DEFAULT_GRID.dists))


class Scene(NamedTuple):
    """One benchmark scene.

    goals[i] are the goal hypotheses of exo agent i (the true one first) and
    spawn[i] the region where an occluded agent i may be. Both feed the belief.
    """

    scene_id: str
    template_id: int
    ped_speed: float
    cross_dist: float
    seed: int
    state: WorldState
    goals: tuple[tuple[Vec2, ...], ...]
    spawn: tuple[Rect, ...]


def make_scene_id(template_id: int, ped_speed: float, cross_dist: float) -> str:
    return f"T{template_id}-v{ped_speed:.2f}-d{cross_dist:g}"


def _pedestrian_goals(pos: Vec2, goal: Vec2, cfg: ScenarioConfig) -> tuple[Vec2, ...]:
    """Cross (true goal), walk forward, walk backward"""
    return (
        goal,
        (pos[0] + cfg.walk_offset, pos[1]),
        (pos[0] - cfg.walk_offset, pos[1]),
    )


def _spawn_region(pos: Vec2, cfg: ScenarioConfig) -> Rect:
    return Rect(
        pos[0] - cfg.spawn_half_length,
        pos[1] - cfg.spawn_half_width,
        pos[0] + cfg.spawn_half_length,
        pos[1] + cfg.spawn_half_width,
    )


def build_scene(
    template: ScenarioTemplate,
    ped_speed: float,
    cross_dist: float,
    seed: int,
    cfg: None | ScenarioConfig = None,
) -> Scene:
    """Deterministic scene from (template, speed, distance, seed)"""

    cfg = cfg or ScenarioConfig()
    if not cfg.speed_min - 1e-9 <= ped_speed <= cfg.speed_max + 1e-9:
        raise OutOfRangeException(
            f"Pedestrian speed out of range [{cfg.speed_min}, {cfg.speed_max}]: {ped_speed}"
        )
    if not cfg.dist_min - 1e-9 <= cross_dist <= cfg.dist_max + 1e-9:
        raise OutOfRangeException(
            f"Crossing distance out of range [{cfg.dist_min}, {cfg.dist_max}]: {cross_dist}"
        )

    rng = np.random.default_rng(
        [seed & 0xFFFFFFFF, template.id, int(round(ped_speed * 100)), int(round(cross_dist * 100))]
    )

    cd, side, sw = cross_dist, template.side, cfg.sidewalk_y
    obstacles: list[Rect] = []
    exo: list[AgentState] = []
    goals: list[tuple[Vec2, ...]] = []
    spawn: list[Rect] = []

    ped_start: Vec2 = (cd, side * sw)
    ped_goal: Vec2 = (cd, -side * sw)
    ped_spawn = _spawn_region(ped_start, cfg)

    if template.layout == Layout.OCCLUDED_PARKED_CAR:
        # 4.5 x 1.8 car parked at the road edge, just before the crossing
        ymin, ymax = sorted((side * 3.1, side * 4.9))
        obstacles.append(Rect(cd - 5.0, ymin, cd - 0.5, ymax))

    elif template.layout == Layout.INCOMING_CAR:
        speed = cfg.car_speed + rng.uniform(-cfg.car_speed_jitter, cfg.car_speed_jitter)
        car = make_agent((cd + 25.0, 1.5), (-30.0, 1.5), float(speed), AgentKind.CAR)
        exo.append(car)
        goals.append((car.goal, (car.pos[0] - 100.0, car.pos[1])))
        spawn.append(Rect(cd + 15.0, 0.5, cd + 35.0, 2.5))

    elif template.layout == Layout.T_INTERSECTION:
        # Side arm x in [cd-3, cd+3]; buildings on either side of it
        ymin, ymax = sorted((side * 5.5, side * 14.0))
        obstacles.append(Rect(min(-10.0, cd - 33.0), ymin, cd - 3.0, ymax))
        obstacles.append(Rect(cd + 3.0, ymin, cd + 40.0, ymax))
        ped_start = (cd, side * 10.0)
        ped_spawn = Rect(cd - 3.0, ymin, cd + 3.0, ymax)

    elif template.layout == Layout.CROSS_INTERSECTION:
        for ymin, ymax in ((-14.0, -5.5), (5.5, 14.0)):
            obstacles.append(Rect(cd - 25.0, ymin, cd - 1.0, ymax))
            obstacles.append(Rect(cd + 6.0, ymin, cd + 30.0, ymax))
        ped_start = (cd, side * 8.0)
        ped_goal = (cd, -side * 8.0)
        ped_spawn = Rect(cd - 1.0, -14.0, cd + 6.0, -5.5)

    ped = make_agent(ped_start, ped_goal, ped_speed, AgentKind.PEDESTRIAN)
    exo.insert(0, ped)
    goals.insert(0, _pedestrian_goals(ped_start, ped_goal, cfg))
    spawn.insert(0, ped_spawn)

    ego = make_agent(cfg.ego_start, cfg.ego_goal, cfg.ego_speed, AgentKind.CAR, heading=0.0)
    state = WorldState(ego, tuple(exo), tuple(obstacles), 0)

    return Scene(
        make_scene_id(template.id, ped_speed, cross_dist),
        template.id,
        float(ped_speed),
        float(cross_dist),
        int(seed),
        state,
        tuple(goals),
        tuple(spawn),
    )


def generate_benchmark(
    grid: None | Grid = None, seed: int = 0, cfg: None | ScenarioConfig = None
) -> list[Scene]:
    """Cartesian product templates x speeds x distances"""

    grid = grid or DEFAULT_GRID
    scenes = [
        build_scene(template, speed, dist, seed, cfg)
        for template in TEMPLATES
        for speed in grid.speeds
        for dist in grid.dists
    ]

    logger.info("Generated %d scenes (seed=%d)", len(scenes), seed)
    return scenes


def _split_key(seed: int, scene_id: str) -> str:
    return hashlib.sha256(f"{seed}:{scene_id}".encode("utf-8")).hexdigest()


def split_benchmark(
    scenes: Sequence[Scene], seed: int, ratios: tuple[float, float] = (0.25, 0.25)
) -> tuple[list[Scene], list[Scene], list[Scene]]:
    """Hash based, per template: 25% train, 25% calibration, remainder test"""

    train: list[Scene] = []
    calib: list[Scene] = []
    test: list[Scene] = []

    strata: dict[int, list[Scene]] = {}
    for scene in scenes:
        strata.setdefault(scene.template_id, []).append(scene)

    for template_id in sorted(strata):
        stratum = sorted(strata[template_id], key=lambda x: _split_key(seed, x.scene_id))
        n_train = int(len(stratum) * ratios[0] + 0.5)
        n_calib = int(len(stratum) * ratios[1] + 0.5)
        train += stratum[:n_train]
        calib += stratum[n_train : n_train + n_calib]
        test += stratum[n_train + n_calib :]

    logger.info(
        "Split %d scenes into train=%d, calib=%d, test=%d",
        len(scenes),
        len(train),
        len(calib),
        len(test),
    )
    return train, calib, test


def _agent_to_dict(agent: AgentState) -> dict[str, Any]:
    return {
        "kind": agent.kind.value,
        "pos": list(agent.pos),
        "goal": list(agent.goal),
        "heading": agent.heading,
        "speed": agent.speed,
    }


def scene_to_dict(scene: Scene) -> dict[str, Any]:
    """JSON friendly representation"""
    exo = []
    for agent, goals, spawn in zip(scene.state.exo, scene.goals, scene.spawn):
        data = _agent_to_dict(agent)
        data["goals"] = [list(x) for x in goals]
        data["spawn"] = list(spawn)
        exo.append(data)

    return {
        "sceneId": scene.scene_id,
        "templateId": scene.template_id,
        "pedSpeed": scene.ped_speed,
        "crossDist": scene.cross_dist,
        "seed": scene.seed,
        "ego": _agent_to_dict(scene.state.ego),
        "exo": exo,
        "obstacles": [list(x) for x in scene.state.obstacles],
    }


def _agent_from_dict(data: dict[str, Any]) -> AgentState:
    return make_agent(
        data["pos"],
        data["goal"],
        data["speed"],
        AgentKind(data.get("kind", AgentKind.PEDESTRIAN.value)),
        heading=data["heading"],
    )


def scene_from_dict(data: dict[str, Any]) -> Scene:
    """Inverse of scene_to_dict()"""
    try:
        ego = _agent_from_dict(data["ego"])
        exo = tuple(_agent_from_dict(x) for x in data["exo"])
        goals = tuple(tuple((float(g[0]), float(g[1])) for g in x["goals"]) for x in data["exo"])
        spawn = tuple(Rect(*map(float, x["spawn"])) for x in data["exo"])
        obstacles = tuple(Rect(*map(float, x)) for x in data["obstacles"])
        return Scene(
            data["sceneId"],
            int(data["templateId"]),
            float(data["pedSpeed"]),
            float(data["crossDist"]),
            int(data.get("seed", 0)),
            WorldState(ego, exo, obstacles, 0),
            goals,
            spawn,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioException(f"Invalid scene data: {data.get('sceneId', '<unknown>')}") from exc


def save_scenes(scenes: Iterable[Scene], *paths):
    """Write the scenes as JSON array"""
    return write_json([scene_to_dict(x) for x in scenes], *paths)


def load_scenes(*paths) -> list[Scene]:
    """Read the JSON array written by save_scenes()"""
    data = read_json(*paths)
    if not isinstance(data, list):
        raise ScenarioException(f"Expected a JSON array of scenes: {paths}")

    return [scene_from_dict(x) for x in data]
