#!/usr/bin/env python
# encoding: utf-8

"""File utilities"""

import os
import json
from pathlib import Path
from typing import Any, Iterable

from cloudpathlib import AnyPath

from . import logging

logger = logging.get_logger(__name__, logging.DEBUG)


def create_filename(*paths):
    """Join the elements into a path, expand ~user and envvars,
    and standardize on "/" as separator. Cloud URIs (s3://, gs://, ..)
    are supported as well."""

    file = os.path.join(*(str(x) for x in paths))
    file = os.path.expandvars(file)
    file = AnyPath(file)
    if isinstance(file, Path):
        file = file.expanduser()

    return file


def mkdir_parent(file) -> None:
    """Create the parent directory of a local file. Cloud paths have none."""
    if isinstance(file, Path):
        file.parent.mkdir(parents=True, exist_ok=True)


def read_json(*paths) -> Any:
    """Load a json file"""
    file = create_filename(*paths)
    logger.debug("Read json file: %s", file)
    return json.loads(file.read_text(encoding="utf-8"))


def write_json(data: Any, *paths, indent: None | int = 2):
    """Write deterministic (sorted keys) json"""
    file = create_filename(*paths)
    mkdir_parent(file)
    file.write_text(json.dumps(data, indent=indent, sort_keys=True), encoding="utf-8")
    logger.debug("Wrote json file: %s", file)
    return file


def write_jsonl(records: Iterable[dict], *paths):
    """One json object per line, keys sorted"""
    file = create_filename(*paths)
    mkdir_parent(file)
    text = "".join(json.dumps(x, sort_keys=True) + "\n" for x in records)
    file.write_text(text, encoding="utf-8")
    return file


def read_jsonl(*paths) -> list[dict]:
    """Load a json-lines file"""
    file = create_filename(*paths)
    lines = file.read_text(encoding="utf-8").splitlines()
    return [json.loads(x) for x in lines if x.strip()]


def read_bytes(*paths) -> bytes:
    """Read a binary file (local or cloud)"""
    return create_filename(*paths).read_bytes()


def write_bytes(data: bytes, *paths):
    """Write a binary file (local or cloud)"""
    file = create_filename(*paths)
    mkdir_parent(file)
    file.write_bytes(data)
    return file
