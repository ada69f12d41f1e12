import math
from collections.abc import Mapping

import numpy as np
from attr import validators
from tomlkit.container import Container
from tomlkit.items import AoT, Array, Bool, InlineTable, Item, String, Table

from ..environment import MYPY_RUNNING

if MYPY_RUNNING:
    from typing import Any, Dict, List, Union

    TOML_DICT_TYPES = Union[Container, Table, InlineTable]


TOML_DICT_OBJECTS = (Container, Table, InlineTable)


def _check_positive(instance, attribute, value):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and value > 0):
        raise ValueError(
            "{0} must be a positive number, got {1!r}".format(attribute.name, value)
        )


def _check_finite(instance, attribute, value):
    if not math.isfinite(value):
        raise ValueError("{0} must be finite, got {1!r}".format(attribute.name, value))


is_positive = validators.and_(_check_positive, _check_finite)


def is_array_of_ndim(ndim):
    def _validator(instance, attribute, value):
        if not isinstance(value, np.ndarray) or value.ndim != ndim:
            raise TypeError(
                "{0} must be a {1}-d numpy array, got {2!r}".format(
                    attribute.name, ndim, type(value)
                )
            )

    return _validator


def frozen_array(values, ndim=1):
    # type: (Any, int) -> np.ndarray
    """Float64 copy of ``values`` flagged read-only, for immutable models."""
    arr = np.array(values, dtype=float)
    if ndim == 1:
        arr = arr.reshape(-1)
    else:
        arr = np.atleast_2d(arr)
    arr.setflags(write=False)
    return arr


def tomlkit_value_to_python(toml_value):
    # type: (Union[Array, AoT, TOML_DICT_TYPES, Item]) -> Union[List, Dict]
    value_type = type(toml_value).__name__
    if isinstance(toml_value, TOML_DICT_OBJECTS + (dict,)) or value_type in (
        "Container",
        "Table",
        "InlineTable",
    ):
        return tomlkit_dict_to_python(toml_value)
    elif isinstance(toml_value, AoT) or value_type == "AoT":
        return [tomlkit_value_to_python(val) for val in toml_value._body]
    elif isinstance(toml_value, Array) or value_type == "Array":
        return [tomlkit_value_to_python(val) for val in list(toml_value)]
    elif isinstance(toml_value, String) or value_type == "String":
        return "{0!s}".format(toml_value)
    elif isinstance(toml_value, Bool) or value_type == "Bool":
        return toml_value.value
    elif isinstance(toml_value, Item):
        return toml_value.value
    return toml_value


def tomlkit_dict_to_python(toml_dict):
    # type: (Union[TOML_DICT_TYPES, Dict]) -> Dict
    if toml_dict is None:
        raise TypeError("Invalid type NoneType when converting toml dict to python")
    if not isinstance(toml_dict, Mapping) and hasattr(toml_dict, "value"):
        toml_dict = toml_dict.value
    return {str(k): tomlkit_value_to_python(v) for k, v in toml_dict.items()}
