#!/usr/bin/env python
# encoding: utf-8

"""Logging utilities (leveraging the standard python logging module) """

import sys
import os
import logging
import logging.config
from pathlib import Path
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .config import Config


def configure(config: "Config", path: str = "logging"):
    """Configure logging with log configs taken from Config"""

    log_cfg = config.to_dict(path, substitute=True)
    logging.config.dictConfig(log_cfg)

    logger.info(
        "Starting with: %s %s", os.path.basename(sys.argv[0]), " ".join(sys.argv[1:])
    )

    for i, cfg in enumerate(config.user_config, start=1):
        file = config.config[i].get("__file__", "<unknown>")
        logger.info("Config: %s - %s", cfg, file)


def get_logger(name: str, level: int | str = logging.INFO):
    """Select the logger by its name"""

    mylogger = logging.getLogger(name)
    mylogger.setLevel(level)

    return mylogger


# Note: Must go last, after get_logger() has been defined !!
logger = get_logger(__name__, logging.DEBUG)


CRITICAL = logging.CRITICAL
FATAL = logging.FATAL
ERROR = logging.ERROR
WARNING = logging.WARNING
WARN = logging.WARN
INFO = logging.INFO
DEBUG = logging.DEBUG
NOTSET = logging.NOTSET


class LogException(Exception):
    """LogException"""


class SceneLogRedirector:
    """Route all log messages into one file per scene, while the scene runs.

    Usage:
        with SceneLogRedirector(scene_id, log_dir / f"{scene_id}.log"):
            run_scene(...)

    The console keeps receiving messages, except for the exception dump on
    failure, which only goes to the scene file.
    """

    def __init__(self, scene_id: str, log_file: Path, level: int = logging.DEBUG):
        self.scene_id = scene_id
        self.log_file = Path(log_file)
        self.level = level

        self._root_logger = logging.getLogger("")
        self._file_handler: None | logging.FileHandler = None

    def handler_by_name(self, name: str) -> logging.Handler:
        """Find log handler by name"""
        for handler in self._root_logger.handlers:
            if handler.name == name:
                return handler

        raise LogException(f"Log handler not found: name='{name}'")

    def _formatter(self) -> None | logging.Formatter:
        for handler in self._root_logger.handlers:
            if handler.formatter is not None:
                return handler.formatter

        return None

    def __enter__(self):
        self.log_file.parent.mkdir(parents=True, exist_ok=True)
        self._file_handler = _fh = logging.FileHandler(
            self.log_file, mode="a", encoding="utf8"
        )
        _fh.setLevel(self.level)
        _fh.set_name(f"scene:{self.scene_id}")
        _fh.setFormatter(self._formatter())

        self._root_logger.addHandler(_fh)

        logger.info("Start scene: %s", self.scene_id)
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        if exc_type is None:
            self.on_success()
        else:
            self.on_failure(exc_value)

        return False

    def on_success(self):
        """Log the success into the scene file and detach it"""
        logger.info("Successfully finished scene: %s", self.scene_id)
        self._detach()

    def on_failure(self, exc):
        """The exception dump only goes into the scene file"""

        try:
            console = self.handler_by_name("console")
        except LogException:
            console = None

        if console is not None:
            self._root_logger.removeHandler(console)

        try:
            logger.exception("Scene %s failed with exception: %s", self.scene_id, exc)
        finally:
            if console is not None:
                self._root_logger.addHandler(console)

        self._detach()

    def _detach(self):
        if self._file_handler is not None:
            self._root_logger.removeHandler(self._file_handler)
            self._file_handler.close()
            self._file_handler = None
