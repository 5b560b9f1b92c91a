#!/usr/bin/env python
# -*- coding: utf-8 -*-

# pylint: disable=missing-function-docstring, missing-module-docstring

import json

import pytest

from hyplan.cli import main
from hyplan.harness import COLUMNS, read_metrics
from hyplan.scenarios import load_scenes
import hyplan.import_module


SMALL_RUN = """\
world.t_max = 3
belief.particles = 20
planner.scenarios = 4
planner.max_depth = 3
planner.max_trials = 3
pathplan.resolution = 0.5
pathplan.weights = [2.0]
"""


def setup_module(_module):
    hyplan.import_module.modules.clear()


def test_usage_errors(tmp_path):
    assert main(["gen", "--out", str(tmp_path / "s.json"), "--no-such-flag"]) == 2
    assert main(["gen"]) == 2
    assert main(["fly"]) == 2
    assert main(["eval", "--scenes", "s.json", "--out", "m.csv", "--method", "magic"]) == 2


def test_gen(tmp_path):
    file = tmp_path / "scenes.json"
    assert main(["gen", "--out", str(file), "--seed", "7"]) == 0
    scenes = load_scenes(file)
    assert len(scenes) == 567

    small = tmp_path / "small.json"
    assert main(["gen", "--out", str(small), "--grid", "speeds=1.0;dists=5:15:5"]) == 0
    assert len(load_scenes(small)) == 27

    assert main(["gen", "--out", str(small), "--grid", "speeds=1:2"]) == 1


def test_runtime_errors(tmp_path):
    scenes = tmp_path / "scenes.json"
    assert main(["gen", "--out", str(scenes), "--grid", "speeds=1.0;dists=5:15:5"]) == 0

    # hyplan needs a model and a calibration table
    assert main(["eval", "--scenes", str(scenes), "--out", str(tmp_path / "m.csv")]) == 1
    assert not (tmp_path / "m.csv").exists()

    args = ["--scenes", str(scenes), "--method", "hyplan", "--model", str(tmp_path / "missing.bin")]
    assert main(["plan", "--scene-id", "T1-v1.00-d5", *args]) == 1
    assert main(["eval", "--out", str(tmp_path / "m.csv"), *args]) == 1

    assert main(["eval", "--scenes", str(tmp_path / "missing.json"), "--out", "m.csv", "--method", "despot-ltr"]) == 1


def test_plan(tmp_path, capsys):
    scenes = tmp_path / "scenes.json"
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL_RUN)
    assert main(["gen", "--out", str(scenes), "--grid", "speeds=1.0;dists=5:15:5"]) == 0
    capsys.readouterr()

    trace = tmp_path / "trace.json"
    png = tmp_path / "image.png"
    args = ["plan", "--scenes", str(scenes), "--scene-id", "T2-v1.00-d15", "--method", "despot-ltr"]
    args += ["--config", str(cfg), "--clock", "virtual", "--trace", str(trace), "--png", str(png)]
    assert main(args) == 0

    result = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert result["sceneId"] == "T2-v1.00-d15"
    assert result["acc"] in {"ACCELERATE", "DECELERATE", "MAINTAIN"}
    assert len(result["policy"]) == 3
    assert set(json.loads(trace.read_text())) == {"action", "policy", "trials", "nodes"}
    assert png.read_bytes()[:4] == b"\x89PNG"

    assert main(["plan", "--scenes", str(scenes), "--scene-id", "T9-v9.99-d1", "--method", "despot-ltr"]) == 1


@pytest.mark.slow
def test_eval_and_report(tmp_path):
    scenes = tmp_path / "scenes.json"
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL_RUN)
    assert main(["gen", "--out", str(scenes), "--grid", "speeds=1.0;dists=5:15:5"]) == 0

    logs = tmp_path / "logs"
    common = ["--scenes", str(scenes), "--config", str(cfg), "--clock", "virtual", "--all", "--logs", str(logs)]
    out = tmp_path / "metrics.csv"
    assert main(["eval", "--method", "despot-ltr", "--out", str(out), *common]) == 0
    df = read_metrics(out)
    assert list(df.columns) == list(COLUMNS)
    assert df["method"].tolist() == ["despot-ltr"]
    assert len(list((logs / "despot-ltr").glob("*.jsonl"))) == 27

    # Byte identical with the virtual clock
    again = tmp_path / "again.csv"
    assert main(["eval", "--method", "despot-ltr", "--out", str(again), *common]) == 0
    assert again.read_bytes() == out.read_bytes()

    report = tmp_path / "report.csv"
    assert main(["report", "--logs", str(logs), "--out", str(report)]) == 0
    assert read_metrics(report)["SI90"].tolist() == df["SI90"].tolist()
