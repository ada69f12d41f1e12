import io
import json
import os

import attr
import tomlkit
from tomlkit.exceptions import ParseError
from vistir.contextmanagers import atomic_open_for_write

from ..environment import MYPY_RUNNING
from ..exceptions import ConfigError, ConfigNotFound
from ..utils import to_jsonable
from .utils import tomlkit_dict_to_python

if MYPY_RUNNING:
    from typing import Any, Dict, Optional


DEFAULT_NEWLINES = "\n"
TOML_SUFFIXES = (".toml",)


def preferred_newlines(f):
    if isinstance(f.newlines, str):
        return f.newlines
    return DEFAULT_NEWLINES


def _loads(text, location):
    # type: (str, str) -> Dict[str, Any]
    if location.endswith(TOML_SUFFIXES):
        try:
            return tomlkit_dict_to_python(tomlkit.parse(text))
        except ParseError as exc:
            raise ConfigError("Cannot parse {0}: {1}".format(location, exc))
    try:
        data = json.loads(text)
    except ValueError as exc:
        raise ConfigError("Cannot parse {0}: {1}".format(location, exc))
    if not isinstance(data, dict):
        raise ConfigError("{0} must hold a mapping at the top level".format(location))
    return data


@attr.s
class ConfigFile(object):
    """An experiment config (JSON or TOML) or a result file on disk."""

    location = attr.ib()  # type: str
    line_ending = attr.ib(default=DEFAULT_NEWLINES)  # type: str
    data = attr.ib(default=attr.Factory(dict))  # type: Dict[str, Any]

    @classmethod
    def read(cls, location):
        # type: (str) -> ConfigFile
        """
        :raises ConfigNotFound: if ``location`` does not exist
        :raises ConfigError: if the file cannot be parsed
        """
        if not os.path.exists(location):
            raise ConfigNotFound(location)
        with io.open(location, encoding="utf-8") as f:
            data = _loads(f.read(), location)
            line_ending = preferred_newlines(f)
        return cls(location=location, line_ending=line_ending, data=data)

    def dumps(self):
        # type: () -> str
        payload = to_jsonable(self.data)
        if self.location.endswith(TOML_SUFFIXES):
            return tomlkit.dumps(payload)
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def write(self):
        # type: () -> None
        parent = os.path.dirname(os.path.abspath(self.location))
        if not os.path.isdir(parent):
            os.makedirs(parent)
        with atomic_open_for_write(self.location, newline=self.line_ending) as f:
            f.write(self.dumps())


def write_json(location, data):
    # type: (str, Any) -> str
    ConfigFile(location=location, data=data).write()
    return location
