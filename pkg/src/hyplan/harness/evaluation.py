#!/usr/bin/env python
# encoding: utf-8

"""Evaluation over test scenes and the two-level averaged metrics.

Metrics are first averaged over the scenes of a scenario (template), then
over the scenarios.
"""

import multiprocessing
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd

from .. import logging
from ..calibration import CalibrationTable
from ..file_utils import create_filename, mkdir_parent
from ..learner.model_file import decode_params, encode_params
from ..learner.network import NavPPO
from ..scenarios import Scene
from .controller import Controller
from .episode import EpisodeLog, run_scene
from .settings import Settings

logger = logging.get_logger(__name__, logging.DEBUG)

COLUMNS = (
    "method",
    "SI90",
    "crashPct",
    "nearMissPct",
    "timeoutPct",
    "TTG",
    "executionMs",
    "trainingDays",
    "PT",
    "PTN",
    "PTD",
    "BNN",
    "OBF",
    "NNET",
)

EFFORT = ("executionMs", "PT", "PTN", "PTD", "BNN", "OBF", "NNET")

MS_PER_DAY = 24 * 3600 * 1000.0


def episode_frame(logs: Sequence[EpisodeLog]) -> pd.DataFrame:
    """One row per episode"""
    rows = []
    for log in logs:
        row = {
            "sceneId": log.scene_id,
            "templateId": log.template_id,
            "crash": float(log.crash),
            "nearMiss": float(log.near_miss and not log.crash),
            "timeout": float(log.outcome.value == "timeout"),
            "failed": float(log.failed),
            "ttg": log.ttg if log.ttg is not None else np.nan,
        }
        row.update(log.effort())
        rows.append(row)

    return pd.DataFrame(rows)


def compute_metrics(
    logs: Sequence[EpisodeLog],
    method: str,
    training_ms: float = 0.0,
    fail_threshold: float = 0.10,
) -> dict[str, Any]:
    """One row of the metrics report"""

    if not logs:
        raise ValueError("No episode logs to compute metrics from")

    df = episode_frame(logs)
    per_scenario = df.drop(columns=["sceneId"]).groupby("templateId", sort=True).mean()

    rtn: dict[str, Any] = {
        "method": method,
        "SI90": int((per_scenario["failed"] <= fail_threshold + 1e-12).sum()),
        "crashPct": 100.0 * float(per_scenario["crash"].mean()),
        "nearMissPct": 100.0 * float(per_scenario["nearMiss"].mean()),
        "timeoutPct": 100.0 * float(per_scenario["timeout"].mean()),
        # Scenarios without any goal episode don't contribute
        "TTG": float(per_scenario["ttg"].mean()) if per_scenario["ttg"].notna().any() else np.nan,
        "trainingDays": training_ms / MS_PER_DAY,
    }
    for key in EFFORT:
        rtn[key] = float(per_scenario[key].mean())

    return {key: rtn[key] for key in COLUMNS}


def metrics_frame(rows: Sequence[dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=list(COLUMNS))


def write_metrics(rows: Sequence[dict[str, Any]], *paths):
    """CSV, one row per method"""
    file = create_filename(*paths)
    mkdir_parent(file)
    file.write_text(metrics_frame(rows).to_csv(index=False), encoding="utf-8")
    logger.info("Wrote metrics: %s", file)
    return file


def read_metrics(*paths) -> pd.DataFrame:
    with create_filename(*paths).open("r", encoding="utf-8") as fd:
        return pd.read_csv(fd)


# State of a pool worker process
_worker: dict[str, Any] = {}


def _init_worker(settings: Settings, method: str, model: Optional[bytes], table: Optional[dict], seed: int):
    net = decode_params(model)[0] if model is not None else None
    calib = CalibrationTable.model_validate(table) if table is not None else None
    _worker["controller"] = Controller(settings, method, net, calib)
    _worker["seed"] = seed


def _run_worker(scene: Scene) -> list[dict[str, Any]]:
    return run_scene(scene, _worker["controller"], _worker["seed"]).records()


def _run_serial(scenes, settings, method, net, table, seed, log_dir) -> list[EpisodeLog]:
    controller = Controller(settings, method, net, table)
    rtn = []
    for scene in scenes:
        if log_dir is not None:
            with logging.SceneLogRedirector(scene.scene_id, create_filename(log_dir, f"{scene.scene_id}.log")):
                rtn.append(run_scene(scene, controller, seed))
        else:
            rtn.append(run_scene(scene, controller, seed))
    return rtn


def run_scenes(
    scenes: Sequence[Scene],
    settings: Settings,
    method: str,
    seed: int,
    net: Optional[NavPPO] = None,
    table: Optional[CalibrationTable] = None,
) -> list[EpisodeLog]:
    """All scenes with one method; serially or in a process pool. The logs
    are returned in sceneId order."""

    # Fail early, e.g. a missing model, before any worker starts
    Controller(settings, method, net, table)

    processes = settings.harness.process_pool
    if processes > 0 and len(scenes) > 1:
        model = encode_params(net) if net is not None else None
        calib = table.model_dump() if table is not None else None
        ctx = multiprocessing.get_context("spawn")
        with ctx.Pool(processes, initializer=_init_worker, initargs=(settings, method, model, calib, seed)) as pool:
            logs = [EpisodeLog.from_records(x) for x in pool.map(_run_worker, scenes)]
    else:
        logs = _run_serial(scenes, settings, method, net, table, seed, settings.harness.scene_log_dir)

    return sorted(logs, key=lambda x: x.scene_id)


def evaluate(
    test_scenes: Sequence[Scene],
    method: str,
    settings: Settings,
    seed: int = 0,
    net: Optional[NavPPO] = None,
    table: Optional[CalibrationTable] = None,
    *,
    training_ms: float = 0.0,
    log_dir=None,
) -> tuple[dict[str, Any], list[EpisodeLog]]:
    """Metrics row and the episode logs. With 'log_dir' one JSON-lines file
    per scene is written to <log_dir>/<method>/<sceneId>.jsonl"""

    logger.info("Evaluate '%s' on %d scenes", method, len(test_scenes))
    logs = run_scenes(test_scenes, settings, method, seed, net, table)

    if log_dir is not None:
        for log in logs:
            log.save(log_dir, method, f"{log.scene_id}.jsonl")

    row = compute_metrics(logs, method, training_ms, settings.harness.fail_threshold)
    logger.info("Metrics '%s': %s", method, row)
    return row, logs
