#!/usr/bin/env python
# encoding: utf-8

"""Command line: gen, train, eval, plan, report

Exit codes: 0 success, 2 usage error, 1 runtime error
"""

import argparse
import json
import sys
from typing import Optional, Sequence

from . import logging
from .belief import init_belief
from .calibration import load_table, save_table
from .config import Config
from .file_utils import create_filename, write_json
from .harness import (
    METHODS,
    Controller,
    EpisodeLog,
    Settings,
    compute_metrics,
    evaluate,
    scene_rng,
    write_metrics,
)
from .harness.training import train_procedure
from .intention import render_intention_image, save_png
from .learner.model_file import load_params, save_params
from .scenarios import generate_benchmark, load_scenes, parse_grid, save_scenes, split_benchmark
from .world import observe

logger = logging.get_logger(__name__, logging.DEBUG)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", action="append", default=None, help="'key = value' config file (repeatable)")
    common.add_argument("--seed", type=int, default=None, help="Default: run.seed, $HYPLAN_SEED, 0")
    common.add_argument("--clock", choices=("wall", "virtual"), default=None, help="Default: run.clock")

    parser = argparse.ArgumentParser(prog="hyplan", description="Hybrid learning-assisted POMDP planner")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="Generate the benchmark scenes")
    p.add_argument("--out", required=True, help="Scenes JSON file")
    p.add_argument("--grid", default=None, help="e.g. 'speeds=0.5:2:0.25;dists=5:45:5'")

    p = sub.add_parser("train", parents=[common], help="Train NavPPO and fit the calibration table")
    p.add_argument("--scenes", required=True)
    p.add_argument("--model", default=None, help="Model file to write. Default: train.model_file")
    p.add_argument("--calib", default=None, help="Calibration file to write. Default: train.calib_file")
    p.add_argument("--passes", type=int, default=None, help="Passes over the training scenes")

    p = sub.add_parser("eval", parents=[common], help="Evaluate a method on the test scenes")
    p.add_argument("--scenes", required=True)
    p.add_argument("--method", choices=METHODS, default="hyplan")
    p.add_argument("--model", default=None)
    p.add_argument("--calib", default=None)
    p.add_argument("--out", required=True, help="Metrics CSV file")
    p.add_argument("--logs", default=None, help="Directory for the per scene JSON-lines logs")
    p.add_argument("--all", action="store_true", help="All scenes instead of the test split")

    p = sub.add_parser("plan", parents=[common], help="One decision on one scene")
    p.add_argument("--scenes", required=True)
    p.add_argument("--scene-id", required=True)
    p.add_argument("--method", choices=METHODS, default="hyplan")
    p.add_argument("--model", default=None)
    p.add_argument("--calib", default=None)
    p.add_argument("--trace", default=None, help="Belief tree trace JSON file")
    p.add_argument("--png", default=None, help="Intention image PNG file")

    p = sub.add_parser("report", parents=[common], help="Metrics from existing episode logs")
    p.add_argument("--logs", required=True, help="Directory with one sub-directory per method")
    p.add_argument("--out", required=True, help="Metrics CSV file")
    p.add_argument("--model", default=None, help="Model file, for trainingDays")

    return parser


def _load_model(args, settings: Settings):
    net = meta = table = None
    if args.model:
        net, meta = load_params(args.model, expected_arch=settings.arch)
    if args.calib:
        table = load_table(args.calib)
    return net, meta or {}, table


def cmd_gen(args, config: Config, settings: Settings, seed: int) -> None:
    scenes = generate_benchmark(parse_grid(args.grid), seed, settings.scenario)
    save_scenes(scenes, args.out)
    logger.info("Wrote %d scenes: %s", len(scenes), args.out)


def cmd_train(args, config: Config, settings: Settings, seed: int) -> None:
    train, calib, _ = split_benchmark(load_scenes(args.scenes), seed)
    net, table, meta = train_procedure(train, calib, settings, seed, passes=args.passes)
    save_params(net, args.model or config.get("train.model_file"), meta=meta)
    save_table(table, args.calib or config.get("train.calib_file"))


def cmd_eval(args, config: Config, settings: Settings, seed: int) -> None:
    scenes = load_scenes(args.scenes)
    if not args.all:
        scenes = split_benchmark(scenes, seed)[2]

    net, meta, table = _load_model(args, settings)
    row, _ = evaluate(
        scenes, args.method, settings, seed, net, table, training_ms=meta.get("trainingMs", 0.0), log_dir=args.logs
    )
    write_metrics([row], args.out)


def cmd_plan(args, config: Config, settings: Settings, seed: int) -> None:
    scenes = {x.scene_id: x for x in load_scenes(args.scenes)}
    if args.scene_id not in scenes:
        raise KeyError(f"Scene not found: '{args.scene_id}'")

    scene = scenes[args.scene_id]
    net, _, table = _load_model(args, settings)
    controller = Controller(settings, args.method, net, table, trace=args.trace is not None)

    obs = observe(scene.state)
    b = init_belief(obs, scene, scene_rng(seed, scene, 1), settings.belief)
    controller.on_new_scene(scene, seed)
    decision = controller.control_step(b, obs, 0)

    action = decision["action"]
    result = {
        "sceneId": scene.scene_id,
        "method": args.method,
        "steer": action.steer,
        "acc": action.acc.name,
        "policy": [float(x) for x in decision.get("policy", [])],
        "stats": decision["stats"].to_dict(),
    }
    print(json.dumps(result, sort_keys=True))

    if args.trace:
        write_json(decision.get("trace", {}), args.trace)
    if args.png:
        image = decision.get("image")
        if image is None:
            image = render_intention_image(
                b, decision.get("path"), (), decision.get("preds"), b.obstacles, settings.intention
            )
        save_png(image, args.png)


def cmd_report(args, config: Config, settings: Settings, seed: int) -> None:
    root = create_filename(args.logs)
    training_ms = 0.0
    if args.model:
        _, meta = load_params(args.model, expected_arch=settings.arch)
        training_ms = meta.get("trainingMs", 0.0)

    rows = []
    for method_dir in sorted(x for x in root.iterdir() if x.is_dir()):
        logs = [EpisodeLog.load(x) for x in sorted(method_dir.glob("*.jsonl"))]
        if logs:
            rows.append(compute_metrics(logs, method_dir.name, training_ms, settings.harness.fail_threshold))

    if not rows:
        raise FileNotFoundError(f"No episode logs found in: {root}")

    write_metrics(rows, args.out)


COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "eval": cmd_eval,
    "plan": cmd_plan,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        config = Config(args.config)
        if args.clock:
            config.set("run.clock", args.clock)
        logging.configure(config)

        seed = args.seed if args.seed is not None else config.seed()
        settings = Settings.from_config(config)
        COMMANDS[args.command](args, config, settings, seed)
    except Exception as exc:  # pylint: disable=broad-exception-caught
        logger.error("'%s' failed: ...", args.command)
        while exc is not None:
            logger.error(".. %s: %s", type(exc).__name__, exc)
            exc = exc.__cause__
        return 1

    return 0


if __name__ == "__main__":
    sys.exit(main())
