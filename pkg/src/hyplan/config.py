#!/usr/bin/env python
# encoding: utf-8

"""Read the packaged defaults and the user provided key = value overrides"""

import os
import re
import json
from pathlib import Path
from typing import Any, Mapping, Match, MutableMapping, TypeVar, cast

from pydantic import BaseModel

from .import_module import import_module_from_file


T = TypeVar("T")
M = TypeVar("M", bound=BaseModel)

DEFAULT_CONFIG_FILE = Path(__file__).parent / "data" / "config.py"

SEED_ENV_VAR = "HYPLAN_SEED"

__MISSING__ = object()


class ConfigException(Exception):
    """ConfigException"""


def force_list(item_or_list: T | list[T]) -> list[T]:
    """If item is a single item of type T, then create a list[T] from it"""
    return item_or_list if isinstance(item_or_list, list) else [item_or_list]


def deep_get(data: Mapping[str, Any], keys: list[str]) -> Any:
    """Walk the keys. Raise KeyError if any of them is missing"""
    try:
        for key in keys:
            data = data[key]
        return data
    except (KeyError, TypeError) as exc:
        raise KeyError(f"Key not found: {keys}") from exc


def deep_set(data: MutableMapping[str, Any], keys: list[str], value: Any) -> None:
    """Set the value, creating missing intermediate dicts"""
    *parents, leaf = keys
    for key in parents:
        child = data.setdefault(key, {})
        if not isinstance(child, MutableMapping):
            raise ConfigException(
                f"Invalid config path. Parent must be a mapping: '{keys}'"
            )
        data = child

    data[leaf] = value


def deep_iter(data: Mapping, parent: None | list = None):
    """Recursively iterate through all leaf key/value pairs"""

    parent = parent or []
    for key, value in data.items():
        if isinstance(value, Mapping) and value:
            parent.append(key)
            yield from deep_iter(value, parent)
            parent.pop()
        else:
            yield key, value, parent


def parse_value(text: str) -> Any:
    """'16' -> 16, '[0.5, 1.0]' -> list, 'true' -> True, anything else stays str"""
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def read_kv_file(file: Path, separator: str = ".") -> dict[str, Any]:
    """Parse a plain 'key = value' text file into a nested dict"""

    rtn: dict[str, Any] = {}
    with open(file, "rt", encoding="utf-8") as fd:
        for lineno, line in enumerate(fd, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue

            if "=" not in line:
                raise ConfigException(
                    f"Expected 'key = value' in {file}, line {lineno}: '{line}'"
                )

            key, value = line.split("=", 1)
            path = [x for x in key.strip().split(separator) if x]
            if not path:
                raise ConfigException(f"Empty key in {file}, line {lineno}")

            deep_set(rtn, path, parse_value(value))

    return rtn


class Config:
    """Application configuration

    The config consists of at least 2 layers, but can be more:
    layer 0 - any changes or additions made programmatically (e.g. cmdline flags)
    layer 1 - (N-1) - 0+ user provided 'key = value' files
    layer N - the packaged defaults imported from hyplan/data/config.py

    Lookups walk the layers top-down; to_dict() merges them bottom-up.
    """

    def __init__(
        self,
        user_config: None | str | Path | list[str | Path] = None,
        *,
        default_config: None | Path = DEFAULT_CONFIG_FILE,
        separator: str = ".",
    ):
        self.separator = separator
        self.user_config = self._init_user_config(user_config)
        self.config: list[dict[str, Any]] = [{}]

        if default_config is not None:
            self.load_defaults(Path(default_config))

        for file in self.user_config:
            self.load_user_config(file)

    def _init_user_config(
        self, user_config: None | str | Path | list[str | Path]
    ) -> list[Path]:
        """Create a list of user config files, from whatever the user provided"""

        if user_config is None:
            return []

        if isinstance(user_config, str):
            if user_config.startswith("env:"):
                name = user_config[4:]
                try:
                    user_config = os.environ[name]
                except KeyError:  # pylint: disable=raise-missing-from
                    raise ConfigException(f"Environment variable not found: '{name}'")

            user_config = [x.strip() for x in user_config.split(",") if x.strip()]

        return [Path(x) for x in force_list(user_config)]

    def load_defaults(self, file: Path) -> dict[str, Any]:
        """Load the python module with the CONFIG dict"""

        if not file.is_file():
            raise ConfigException(f"Config file not found: '{file}'")

        try:
            module = import_module_from_file(file)
        except Exception as exc:
            raise ConfigException(f"Failed to import config file: {file}") from exc

        if not isinstance(getattr(module, "CONFIG", None), dict):
            raise ConfigException(
                f"Not a valid config file. Is missing the CONFIG dict: '{file}'"
            )

        config = module.CONFIG
        config["__file__"] = file.resolve()
        self.config.append(config)
        return config

    def load_user_config(self, file: Path) -> dict[str, Any]:
        """Add a 'key = value' file on top of the already loaded ones"""

        if not file.is_file():
            raise ConfigException(f"Config file not found: '{file}'")

        config = read_kv_file(file, self.separator)
        config["__file__"] = file.resolve()
        self.config.insert(1, config)
        return config

    def path_split(self, path: None | str | list[str]) -> list[str]:
        """Split the path by the configured separator, and remove empty elements"""

        if path is None:
            return []

        if isinstance(path, str):
            path = path.split(self.separator)

        return [x for x in path if x]

    def get_value(self, path: str | list[str]) -> Any:
        """The raw value of the top-most layer that has 'path'. Mappings
        are merged across layers. Consider using get() instead."""

        keys = self.path_split(path)
        for level in self.config:
            try:
                rtn = deep_get(level, keys)
            except KeyError:
                continue

            if isinstance(rtn, Mapping):
                return self.to_dict(keys)

            return rtn

        raise KeyError(f"Key not found: '{keys}'")

    def __contains__(self, path: str | list[str]) -> bool:
        try:
            self.get_value(path)
            return True
        except KeyError:
            return False

    def to_dict(self, root: None | str | list[str] = None, substitute: bool = False):
        """Create a dict of all the visible data. With 'root' provided,
        only the config below this path are copied into a dict.
        """
        keys = self.path_split(root)

        rtn: dict[str, Any] = {}
        for level in reversed(self.config):
            try:
                level = deep_get(level, keys)
            except KeyError:
                continue

            if not isinstance(level, Mapping):
                raise ConfigException(f"Expected a Mapping at '{keys}' but got: {level}")

            for key, value, parents in deep_iter(level):
                if substitute:
                    value = self.substitute_placeholders(value)
                deep_set(rtn, parents + [key], value)

        return rtn

    def substitute_placeholders_in_str(self, value: str) -> str:
        """Replace {..} placeholders with other config entries"""

        def replacer(re_match: Match[str]) -> str:
            match = re_match.group()
            name = match[1:-1].strip()

            try:
                found = self.get_value(name)
            except KeyError:
                # Some are resolved lazily. It's ok to not resolve all.
                return match

            if callable(found):
                found = found()

            return str(found)

        count = 1
        while count > 0:
            last_value = value
            # "{..}", but ignore \{ and \}
            value, count = re.subn(r"(?<!\\)[{].*?(?<!\\)[}]", replacer, value)
            if count > 0 and last_value == value:
                break

        return value

    def substitute_placeholders(self, value: T) -> T:
        """Return a new value with all placeholders replaced"""
        if isinstance(value, Mapping):
            return cast(
                T, {key: self.substitute_placeholders(x) for key, x in value.items()}
            )
        if isinstance(value, list):
            return cast(T, [self.substitute_placeholders(x) for x in value])
        if isinstance(value, str):
            return cast(T, self.substitute_placeholders_in_str(value))
        if callable(value):
            return self.substitute_placeholders(value())

        return value

    def get(self, path: str | list[str], default: Any = __MISSING__):
        """Get the config value referred to by 'path', placeholders replaced.

        If a path cannot be resolved, a ConfigException is raised unless a
        'default' has been provided.
        """
        keys = self.path_split(path)

        try:
            rtn = self.get_value(keys)
        except KeyError as exc:
            if default is not __MISSING__:
                return default

            raise ConfigException(f"Config element not found: '{keys}'") from exc

        return self.substitute_placeholders(rtn)

    def set(self, path: str | list[str], value: Any) -> None:
        """Set a config value at 'path' in the top-most layer"""

        keys = self.path_split(path)
        if not keys:
            raise ConfigException("Argument 'path' must not be empty")

        deep_set(self.config[0], keys, value)

    def section(self, path: str, model: type[M]) -> M:
        """Validate the subtree at 'path' into a (frozen) pydantic model"""
        data = self.to_dict(path, substitute=True) if path in self else {}
        return model.model_validate(data)

    def seed(self) -> int:
        """run.seed, else $HYPLAN_SEED, else 0"""
        seed = self.get("run.seed", None)
        if seed is None:
            seed = os.environ.get(SEED_ENV_VAR, 0)

        try:
            return int(seed)
        except ValueError as exc:
            raise ConfigException(f"Seed must be an integer: '{seed}'") from exc

    def __str__(self) -> str:
        return json.dumps(self.config, indent=4, sort_keys=False, default=str)

    def __repr__(self) -> str:
        return (
            self.__class__.__name__
            + "("
            + self.__str__()
            + f", files={[str(x) for x in self.user_config]})"
        )
