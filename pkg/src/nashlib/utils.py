import logging
import sys
from collections.abc import Mapping, Sequence

import numpy as np

from .environment import MYPY_RUNNING, NASHLIB_LOG_LEVEL
from .exceptions import DimensionMismatch

if MYPY_RUNNING:
    from typing import Any, Optional, Union

    ArrayLike = Union[Sequence, np.ndarray]


LOG_FORMAT = "%(asctime)s %(levelname)s: %(message)s"


def setup_logger(level=None):
    # type: (Optional[Union[int, str]]) -> logging.Logger
    logger = logging.getLogger("nashlib")
    if level is None:
        level = NASHLIB_LOG_LEVEL
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.WARNING
    ours = [h for h in logger.handlers if getattr(h, "_nashlib", False)]
    if ours:
        # follow a replaced sys.stderr between calls
        ours[0].stream = sys.stderr
    else:
        handler = logging.StreamHandler(stream=sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._nashlib = True
        logger.addHandler(handler)
    for handler in logger.handlers:
        handler.setLevel(level)
    logger.setLevel(level)
    return logger


def as_vector(values, dim=None, what="vector"):
    # type: (ArrayLike, Optional[int], str) -> np.ndarray
    """Coerce ``values`` to a flat float64 array, optionally checking its
    length.

    :raises DimensionMismatch: if ``dim`` is given and does not match
    """
    arr = np.asarray(values, dtype=float).reshape(-1)
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(what, dim, arr.shape[0])
    return arr


def as_matrix(values, shape=None, what="matrix"):
    # type: (ArrayLike, Optional[tuple], str) -> np.ndarray
    arr = np.atleast_2d(np.asarray(values, dtype=float))
    if shape is not None and arr.shape != tuple(shape):
        raise DimensionMismatch(what, shape, arr.shape)
    return arr


def sym(matrix):
    # type: (np.ndarray) -> np.ndarray
    return 0.5 * (matrix + matrix.T)


def lambda_min(matrix):
    # type: (np.ndarray) -> float
    """Smallest eigenvalue of the symmetric part of ``matrix``."""
    return float(np.linalg.eigvalsh(sym(matrix))[0])


def lambda_max(matrix):
    # type: (np.ndarray) -> float
    """Largest eigenvalue of the symmetric part of ``matrix``."""
    return float(np.linalg.eigvalsh(sym(matrix))[-1])


def spectral_norm(matrix):
    # type: (np.ndarray) -> float
    return float(np.linalg.norm(matrix, 2))


def is_spd(matrix, tol=1e-12):
    # type: (np.ndarray, float) -> bool
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=tol * max(1.0, np.abs(matrix).max())):
        return False
    return lambda_min(matrix) > tol


def to_jsonable(value):
    # type: (Any) -> Any
    """Recursively convert numpy containers and scalars to plain python."""
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float):
        if np.isinf(value):
            return "inf" if value > 0 else "-inf"
        if np.isnan(value):
            return "nan"
        return value
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


def format_float(value):
    # type: (float) -> str
    """Shortest round-trip representation (up to 17 significant digits)."""
    return repr(float(value))

