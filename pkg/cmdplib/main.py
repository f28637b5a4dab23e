"""Entry point of the cmdptrials command"""

from __future__ import annotations

import argparse
import logging
import signal
import sys
from typing import cast

import settngs

from cmdplib import cli, trialsettings
from cmdplib.log import setup_logging
from cmdplib.resulttypes import Action
from cmdplib.trialsettings import trial_ns

if sys.version_info < (3, 10):
    import importlib_metadata
else:
    import importlib.metadata as importlib_metadata
logger = logging.getLogger("cmdptrials")


logger.setLevel(logging.DEBUG)


class App:
    def __init__(self) -> None:
        self.config: settngs.Config[trial_ns]
        self.initial_arg_parser = trialsettings.initial_commandline_parser()
        self.config_load_success = False

    def run(self) -> None:
        conf = self.initialize()
        self.initialize_dirs(conf.settings_dir)
        self.register_settings()
        self.config = self.parse_settings(conf.settings_dir)

        self.main()

    def initialize(self) -> argparse.Namespace:
        conf, _ = self.initial_arg_parser.parse_known_intermixed_args()

        assert conf is not None
        setup_logging(conf.verbose, conf.settings_dir.user_log_dir)
        return conf

    def register_settings(self) -> None:
        self.manager = settngs.Manager(
            description="Exact constrained MDP designs for two-arm response-adaptive trials.\n\n"
            + "Please keep the '-v' option separated '-j -v' not '-jv'",
            epilog="See README.md for the design configuration schema and the list of experiments.",
        )
        trialsettings.register_commandline_settings(self.manager)
        trialsettings.register_file_settings(self.manager)

    def parse_settings(self, config_paths: trialsettings.TrialPaths, *args: str) -> settngs.Config[trial_ns]:
        cfg, self.config_load_success = trialsettings.parse_config(
            self.manager, config_paths.user_config_dir / "settings.json", list(args) or None
        )
        config = cast(settngs.Config[trial_ns], self.manager.get_namespace(cfg, file=True, cmdline=True))
        config[0].Runtime_Options__settings_dir = config_paths

        config = trialsettings.validate_commandline_settings(config, self.manager)
        config = trialsettings.validate_file_settings(config)
        return config

    def initialize_dirs(self, paths: trialsettings.TrialPaths) -> None:
        paths.user_config_dir.mkdir(parents=True, exist_ok=True)
        paths.user_cache_dir.mkdir(parents=True, exist_ok=True)
        paths.user_log_dir.mkdir(parents=True, exist_ok=True)
        logger.debug("user_config_dir: %s", paths.user_config_dir)
        logger.debug("user_cache_dir: %s", paths.user_cache_dir)
        logger.debug("user_log_dir: %s", paths.user_log_dir)

    def main(self) -> None:
        assert self.config is not None

        signal.signal(signal.SIGINT, signal.SIG_DFL)

        logger.debug("Installed Packages")
        for pkg in sorted(importlib_metadata.distributions(), key=lambda x: x.name):
            logger.debug("%s\t%s", pkg.metadata["Name"], pkg.metadata["Version"])

        if self.config[0].Commands__command == Action.save_config:
            settings_path = self.config[0].Runtime_Options__settings_dir.user_config_dir / "settings.json"
            if trialsettings.save_file(self.config, settings_path):
                print("Settings saved")  # noqa: T201
                return
            raise SystemExit(2)

        if not self.config_load_success:
            logger.warning(
                "Failed to load settings, using defaults; check the log located in '%s' for more details",
                self.config[0].Runtime_Options__settings_dir.user_log_dir,
            )

        raise SystemExit(cli.CLI(self.config[0]).run())


def main() -> None:
    App().run()
