#!/usr/bin/env python
# encoding: utf-8

"""Episode loop: observe, update the belief, decide, execute"""

from typing import Any, Optional

import numpy as np

from .. import logging
from ..belief import init_belief, predict_particles, summary, update_belief
from ..file_utils import read_jsonl, write_jsonl
from ..intention import render_intention_image
from ..learner.network import make_features
from ..learner.ppo import Transition, TransitionBuffer
from ..scenarios import Scene
from ..world import Outcome, observe, reward, step_event, transition
from .controller import Controller, scene_rng

logger = logging.get_logger(__name__, logging.DEBUG)

TERMINAL_EVENTS = (Outcome.CRASH, Outcome.GOAL)


class EpisodeLog:
    """Append-only log: one record per executed step plus a summary"""

    def __init__(self, scene_id: str, template_id: int, method: str, seed: int):
        self.scene_id = scene_id
        self.template_id = template_id
        self.method = method
        self.seed = seed
        self.steps: list[dict[str, Any]] = []
        self.outcome = Outcome.TIMEOUT
        self.near_miss = False
        self.ttg: Optional[float] = None
        self.resets = 0

    def add_step(self, record: dict[str, Any]) -> None:
        self.steps.append(record)
        event = record.get("event")
        if event == Outcome.NEAR_MISS.value:
            self.near_miss = True
        elif event in (Outcome.CRASH.value, Outcome.GOAL.value):
            self.outcome = Outcome(event)

    @property
    def crash(self) -> bool:
        return self.outcome == Outcome.CRASH

    @property
    def failed(self) -> bool:
        """Crash or near-miss"""
        return self.crash or self.near_miss

    def effort(self) -> dict[str, float]:
        """Mean effort metrics and decision time over the steps"""
        keys = ("PT", "PTN", "PTD", "BNN", "OBF", "NNET")
        if not self.steps:
            return {key: 0.0 for key in keys + ("executionMs",)}

        rtn = {key: float(np.mean([x["stats"][key] for x in self.steps])) for key in keys}
        rtn["executionMs"] = float(np.mean([x["wallMs"] for x in self.steps]))
        return rtn

    def summary(self) -> dict[str, Any]:
        return {
            "type": "summary",
            "sceneId": self.scene_id,
            "templateId": self.template_id,
            "method": self.method,
            "seed": self.seed,
            "outcome": self.outcome.value,
            "nearMiss": self.near_miss,
            "ttg": self.ttg,
            "steps": len(self.steps),
            "resets": self.resets,
            "effort": self.effort(),
        }

    def records(self) -> list[dict[str, Any]]:
        return [dict(x, type="step") for x in self.steps] + [self.summary()]

    @classmethod
    def from_records(cls, records: list[dict[str, Any]]) -> "EpisodeLog":
        head = records[-1]
        if head.get("type") != "summary":
            raise ValueError("Episode log must end with a summary record")

        rtn = cls(head["sceneId"], head["templateId"], head["method"], head["seed"])
        for record in records[:-1]:
            rtn.add_step({k: v for k, v in record.items() if k != "type"})
        rtn.outcome = Outcome(head["outcome"])
        rtn.near_miss = head["nearMiss"]
        rtn.ttg = head["ttg"]
        rtn.resets = head.get("resets", 0)
        return rtn

    def save(self, *paths):
        return write_jsonl(self.records(), *paths)

    @classmethod
    def load(cls, *paths) -> "EpisodeLog":
        return cls.from_records(read_jsonl(*paths))


def run_scene(
    scene: Scene,
    controller: Controller,
    seed: int,
    *,
    buffer: Optional[TransitionBuffer] = None,
    mc: Optional[list[tuple[float, float]]] = None,
) -> EpisodeLog:
    """Run the episode until crash, goal or t_max steps.

    With 'buffer' the training transitions are collected, with 'mc' the
    root MC dropout statistics aligned to them.
    """

    cfg = controller.settings
    rng = scene_rng(seed, scene, 1)
    state = scene.state
    obs = observe(state)
    b = init_belief(obs, scene, rng, cfg.belief)
    controller.on_new_scene(scene, seed)

    log = EpisodeLog(scene.scene_id, scene.template_id, controller.method, seed)
    decision = None
    terminal = False

    for t in range(cfg.reward.t_max):
        if decision is not None:
            b = update_belief(predict_particles(b, decision["action"], cfg.reward), obs, rng, cfg.belief)

        decision = controller.control_step(b, obs, t)
        action = decision["action"]
        nxt = transition(state, action, cfg.reward)
        r = reward(state, action, nxt, controller.prev_acc, cfg.reward)
        event = step_event(nxt, cfg.reward)
        terminal = event in TERMINAL_EVENTS

        if buffer is not None and "image" in decision and "policy" in decision:
            h, c = decision["lstm"].numpy()
            buffer.add(
                Transition(
                    decision["image"], decision["features"], h, c,
                    decision["policy"], int(action.acc), r, terminal,
                )
            )
            if mc is not None and "mc" in decision:
                mc.append(decision["mc"])

        log.add_step(
            {
                "t": t,
                "belief": summary(b),
                "steer": action.steer,
                "acc": action.acc.name,
                "reward": r,
                "event": event.value if event is not None else None,
                "fallback": bool(decision.get("fallback", False)),
                "stats": decision["stats"].to_dict(),
                "wallMs": decision.meta["elapsed_ms"],
            }
        )
        if event == Outcome.GOAL:
            log.ttg = nxt.t * cfg.reward.dt

        controller.advance(decision, r)
        state = nxt
        obs = observe(state)
        if terminal:
            break

    log.resets = b.resets
    if buffer is not None and len(buffer) and not terminal and controller.net is not None:
        b = update_belief(predict_particles(b, decision["action"], cfg.reward), obs, rng, cfg.belief)
        image = render_intention_image(
            b, decision.get("path"), controller.past_poses, decision.get("preds"), b.obstacles, cfg.intention
        )
        features = make_features(controller.last_reward, controller.prev_acc, b.ego.speed, cfg.reward.v_max_ego)
        buffer.set_final(image, features, *controller.lstm.numpy())

    logger.info(
        "Scene %s (%s): %s%s after %d steps",
        scene.scene_id,
        controller.method,
        log.outcome.value,
        " (near-miss)" if log.near_miss else "",
        len(log.steps),
    )
    return log
