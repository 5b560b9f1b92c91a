#!/usr/bin/env python
# encoding: utf-8

"""Import python modules with a file name"""

import importlib.util
from pathlib import Path
from types import ModuleType

# Track the module and file name of module already imported
modules: dict[str, Path] = {}


def import_module_from_file(file: Path, *, namespace: str = "hyplan_cfg") -> ModuleType:
    """Import a python module from a file location.

    Config files (hyplan/data/config.py, or a user provided one) share the
    same stem. Two different files with the same stem are an error, the
    same file imported again is returned fresh, so that mutations made
    by a previous Config don't leak into the next one.
    """

    file = Path(file)
    if not file.is_file():
        raise FileNotFoundError(f"File not found: '{file}'")

    name = file.stem.replace("-", "_")
    resolved = file.resolve()

    if modules.get(name, resolved) != resolved:
        raise AttributeError(
            f"A module with the same name has already been imported: "
            f"'{name}', file-1={modules.get(name)}, file-2={resolved}"
        )

    spec = importlib.util.spec_from_file_location(f"{namespace}.{name}", resolved)
    if spec is None or spec.loader is None:
        raise ImportError(f"Not a python module: {file}")

    mod = importlib.util.module_from_spec(spec)
    try:
        spec.loader.exec_module(mod)
    except Exception as exc:
        raise ImportError(f"Failed to load module from: {file}") from exc

    modules[name] = resolved
    return mod
