"""Console and log file handlers

The console follows -v. The file always gets everything down to DEBUG, including one line per cutting plane
iteration, so it rotates on size.
"""

from __future__ import annotations

import logging.handlers
import pathlib
import platform

import numpy
import scipy

from cmdplib.ctversion import version

logger = logging.getLogger("cmdptrials")

LOG_FILE = "cmdptrials.log"
MAX_BYTES = 10 * 1024 * 1024
BACKUP_COUNT = 5
PACKAGES = ("trialapi", "cmdplib")

CONSOLE_FORMAT = "%(levelname)s | %(name)s | %(message)s"
FILE_FORMAT = "%(asctime)s | %(threadName)s | %(name)s | %(levelname)s | %(message)s"


def console_level(verbose: int) -> int:
    return {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)


def get_file_handler(log_dir: pathlib.Path) -> logging.handlers.RotatingFileHandler:
    log_dir.mkdir(parents=True, exist_ok=True)
    file_handler = logging.handlers.RotatingFileHandler(
        log_dir / LOG_FILE, maxBytes=MAX_BYTES, backupCount=BACKUP_COUNT, encoding="utf-8"
    )
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(logging.Formatter(FILE_FORMAT, datefmt="%Y-%m-%dT%H:%M:%S"))
    return file_handler


def setup_logging(verbose: int, log_dir: pathlib.Path) -> None:
    for name in PACKAGES:
        logging.getLogger(name).setLevel(logging.DEBUG)

    stream_handler = logging.StreamHandler()
    stream_handler.setLevel(console_level(verbose))
    stream_handler.setFormatter(logging.Formatter(CONSOLE_FORMAT))

    logging.basicConfig(handlers=[stream_handler, get_file_handler(log_dir)], level=logging.WARNING)

    logger.info(
        "cmdp-trials %s on %s, Python %s, numpy %s, scipy %s",
        version,
        platform.system(),
        platform.python_version(),
        numpy.__version__,
        scipy.__version__,
    )
