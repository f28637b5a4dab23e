from __future__ import annotations

import argparse
import logging
import pathlib

from appdirs import AppDirs

logger = logging.getLogger(__name__)


class TrialPaths(AppDirs):
    def __init__(self, config_path: pathlib.Path | str | None = None) -> None:
        super().__init__("cmdptrials", None, None, False, False)
        self.path: pathlib.Path | None = None
        if config_path:
            self.path = pathlib.Path(config_path).absolute()

    @property
    def user_config_dir(self) -> pathlib.Path:
        if self.path:
            return self.path
        return pathlib.Path(super().user_config_dir)

    @property
    def user_cache_dir(self) -> pathlib.Path:
        if self.path:
            return self.path / "cache"
        return pathlib.Path(super().user_cache_dir)

    @property
    def user_log_dir(self) -> pathlib.Path:
        if self.path:
            return self.path / "log"
        return pathlib.Path(super().user_log_dir)

    def __str__(self) -> str:
        return f"logs: {self.user_log_dir}, config: {self.user_config_dir}, cache: {self.user_cache_dir}"


def probability(value: str) -> float:
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid probability: {value!r}")
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{value} is not in [0, 1]")
    return v


def positive_float(value: str) -> float:
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number: {value!r}")
    if not v > 0.0:
        raise argparse.ArgumentTypeError(f"{value} must be positive")
    return v


def positive_int(value: str) -> int:
    try:
        v = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer: {value!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"{value} must be at least 1")
    return v
