"""Command line settings for cmdptrials"""

from __future__ import annotations

import argparse
import logging
import pathlib

import settngs

from cmdplib import ctversion
from cmdplib.resulttypes import Action
from cmdplib.trialsettings.settngs_namespace import SettngsNS as ns
from cmdplib.trialsettings.types import TrialPaths

logger = logging.getLogger(__name__)


def initial_commandline_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    # Ensure this stays up to date with register_runtime
    parser.add_argument(
        "--settings-dir",
        help="Directory for settings, cache and logs.\ndefault: %(default)s\n\n",
        type=TrialPaths,
        default=TrialPaths(),
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Be noisy when doing what it does. Use a second time to enable debug logs.\nShort option cannot be combined with other options.",
    )
    return parser


def register_runtime(parser: settngs.Manager) -> None:
    parser.add_setting(
        "--settings-dir",
        help="Directory for settings, cache and logs.\ndefault: %(default)s\n\n",
        type=TrialPaths,
        default=TrialPaths(),
        file=False,
    )
    parser.add_setting(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Be noisy when doing what it does. Use a second time to enable debug logs.\nShort option cannot be combined with other options.",
        file=False,
    )
    parser.add_setting(
        "--config",
        type=pathlib.Path,
        default=None,
        help="YAML design configuration (see README.md for the schema).\n\n",
        file=False,
    )
    parser.add_setting(
        "-o",
        "--out",
        type=pathlib.Path,
        default=pathlib.Path("results"),
        help="Directory reports, policies and CSV files are written to.\ndefault: %(default)s",
        file=False,
    )
    parser.add_setting(
        "--policy",
        type=pathlib.Path,
        default=None,
        help="Policy artifact to evaluate.",
        file=False,
    )
    parser.add_setting(
        "--seedless",
        action="store_true",
        help="Accepted for compatibility; every computation is deterministic and uses no random numbers.",
        file=False,
    )
    parser.add_setting(
        "-j",
        "--json",
        action="store_true",
        help="Output json on stdout.\n\n",
        file=False,
    )


def register_commands(parser: settngs.Manager) -> None:
    parser.add_setting("--version", action="store_true", help="Display version.", file=False)
    parser.add_setting(
        "command",
        type=Action,
        metavar=f"{{{','.join(Action)}}}",
        help="""solve: solve the design in --config
evaluate: operating characteristics of --policy over the sweep grid
sweep: solve, then evaluate the solved policy
reproduce: run a registered experiment, TARGET is its id ('list' shows them)
selftest: run the exact-computation oracle checks
save_config: save the current settings and quit\n\n""",
        file=False,
    )
    parser.add_setting("target", nargs="?", default="", help="Experiment id for reproduce.", file=False)


def register_commandline_settings(parser: settngs.Manager) -> None:
    parser.add_group("Commands", register_commands)
    parser.add_persistent_group("Runtime Options", register_runtime)


def validate_commandline_settings(config: settngs.Config[ns], parser: settngs.Manager) -> settngs.Config[ns]:
    if config[0].Commands__version:
        parser.exit(status=0, message=f"cmdptrials {ctversion.version}\n")

    command = config[0].Commands__command
    if command in (Action.solve, Action.sweep) and config[0].Runtime_Options__config is None:
        parser.exit(message=f"{command} requires a design configuration (--config)\n", status=2)

    if command == Action.evaluate and config[0].Runtime_Options__policy is None:
        parser.exit(message="evaluate requires a policy artifact (--policy)\n", status=2)

    if command == Action.reproduce and not config[0].Commands__target:
        parser.exit(message="reproduce requires an experiment id, use 'reproduce list' to see them\n", status=2)

    for name in ("config", "policy"):
        path = getattr(config[0], f"Runtime_Options__{name}")
        if path is not None and not path.is_file():
            parser.exit(message=f"--{name} {path} does not exist\n", status=2)
    return config
