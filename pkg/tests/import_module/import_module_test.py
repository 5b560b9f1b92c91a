#!/usr/bin/env python
# -*- coding: utf-8 -*-

# pylint: disable=missing-function-docstring, missing-module-docstring

from pathlib import Path

import pytest

from hyplan.config import Config, ConfigException
from hyplan.import_module import modules, import_module_from_file
import hyplan.import_module

data_dir = Path(__file__).parent / "data"


def setup_module(_module):
    # This is a global variable and some test might have set it already
    hyplan.import_module.modules.clear()


def test_constructor():
    modules.clear()

    mod = import_module_from_file(data_dir / "config-dev.py")
    assert mod.CONFIG["planner"]["scenarios"] == 8
    assert modules["config_dev"] == (data_dir / "config-dev.py").resolve()

    # Importing the same file again is fine, and returns a fresh module
    mod.CONFIG["planner"]["scenarios"] = 99
    mod = import_module_from_file(data_dir / "config-dev.py")
    assert mod.CONFIG["planner"]["scenarios"] == 8

    # A module with same name but different directory has been loaded already
    with pytest.raises(AttributeError):
        import_module_from_file(data_dir / "users/config-dev.py")

    with pytest.raises(FileNotFoundError):
        import_module_from_file(data_dir / "does-not-exist.py")

    with pytest.raises(ImportError):
        import_module_from_file(data_dir / "broken.py")


def test_as_default_config():
    modules.clear()

    cfg = Config(default_config=data_dir / "config-dev.py")
    assert cfg.get("planner.scenarios") == 8
    assert cfg.get("__file__").name == "config-dev.py"

    cfg.set("project_root", "/src")
    assert cfg.get("run.out_dir") == "/src/out"

    with pytest.raises(ConfigException):
        Config(default_config=data_dir / "users" / "config-dev.py")

    with pytest.raises(ConfigException):
        Config(default_config=data_dir / "broken.py")
