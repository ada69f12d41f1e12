import os


def is_type_checking():
    try:
        from typing import TYPE_CHECKING
    except ImportError:
        return False
    return TYPE_CHECKING


NASHLIB_LOG_LEVEL = os.getenv("NASHLIB_LOG_LEVEL", "WARNING").upper()
NASHLIB_OUTPUT_DIR = os.getenv(
    "NASHLIB_OUTPUT_DIR", os.path.join(os.curdir, "nashlib-out")
)
MYPY_RUNNING = os.environ.get("MYPY_RUNNING", is_type_checking())
