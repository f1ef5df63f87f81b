"""
Experiment logging

- One "hnetcl" root logger; modules log through children named after themselves
  (hnetcl.core.trainer, hnetcl.experiments.experiment_runner, ...)
- Every record goes to <LOG_DIR>/experiments_<YYYYMMDD>.log (5MB x 3, UTC stamps)
- The terminal gets LOG_LEVEL and above (HNETCL_LOG_LEVEL, INFO by default)
- Worker processes of a grid run tag their lines with the pid
"""

import logging
import os
import time
from datetime import datetime
from logging.handlers import RotatingFileHandler

import pytz

from config.settings import LOG_DIR, LOG_LEVEL

ROOT_NAME = "hnetcl"


class _UtcFormatter(logging.Formatter):
    converter = time.gmtime


def _configure_root() -> logging.Logger:
    root = logging.getLogger(ROOT_NAME)
    if root.handlers:
        return root
    root.setLevel(logging.DEBUG)
    root.propagate = False

    os.makedirs(LOG_DIR, exist_ok=True)
    stamp = datetime.now(pytz.utc).strftime("%Y%m%d")
    file_handler = RotatingFileHandler(
        os.path.join(LOG_DIR, f"experiments_{stamp}.log"),
        maxBytes=5 * 1024 * 1024,
        backupCount=3,
        encoding="utf-8",
        delay=True,
    )
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(_UtcFormatter(
        "%(asctime)sZ %(levelname)-7s pid=%(process)d %(name)s | %(message)s",
        datefmt="%Y-%m-%dT%H:%M:%S",
    ))

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.getLevelName(LOG_LEVEL.upper()))
    console_handler.setFormatter(_UtcFormatter("%(asctime)s %(levelname)-7s %(message)s", datefmt="%H:%M:%S"))

    root.addHandler(file_handler)
    root.addHandler(console_handler)
    return root


def get_logger(module: str | None = None) -> logging.Logger:
    """The run logger, or its child for `module` (pass __name__)."""
    root = _configure_root()
    if not module or module == "__main__":
        return root
    return root.getChild(module)
