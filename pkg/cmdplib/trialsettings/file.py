from __future__ import annotations

import argparse
import logging
import os

import settngs

from cmdplib.trialsettings.settngs_namespace import SettngsNS as ns
from cmdplib.trialsettings.types import positive_float, positive_int, probability

logger = logging.getLogger(__name__)


def solver(parser: settngs.Manager) -> None:
    parser.add_setting(
        "--eps-tol",
        default=1e-9,
        type=positive_float,
        help="Absolute gap between the dual value and the cutting plane lower bound at which it stops."
        + "\ndefault: %(default)s",
    )
    parser.add_setting(
        "--phi",
        default=0.01,
        type=positive_float,
        help="Multiplier growth factor used while repairing an infeasible policy.\ndefault: %(default)s",
    )
    parser.add_setting(
        "--lambda-box",
        default=1e6,
        type=positive_float,
        help="Upper bound on every Lagrange multiplier in the master problem.\ndefault: %(default)s",
    )
    parser.add_setting(
        "--max-iterations",
        default=10_000,
        type=positive_int,
        help="Cutting plane iteration cap.\ndefault: %(default)s",
    )
    parser.add_setting(
        "--max-repair-iterations",
        default=100_000,
        type=positive_int,
        help="Feasibility repair iteration cap.\ndefault: %(default)s",
    )


def evaluation(parser: settngs.Manager) -> None:
    parser.add_setting(
        "--threads",
        default=min(8, os.cpu_count() or 1),
        type=positive_int,
        help="Threads used for operating characteristic grids.\ndefault: %(default)s",
    )
    parser.add_setting(
        "--alpha",
        default=0.1,
        type=probability,
        help="Level of Fisher's exact test used for rejection rates.\ndefault: %(default)s",
    )
    parser.add_setting(
        "--terminal-cache",
        default=True,
        action=argparse.BooleanOptionalAction,
        help="Keep Fisher p-values and effect estimates on disk between runs.\ndefault: %(default)s",
    )


def register_file_settings(parser: settngs.Manager) -> None:
    parser.add_group("Solver", solver, False)
    parser.add_group("Evaluation", evaluation, False)


def validate_file_settings(config: settngs.Config[ns]) -> settngs.Config[ns]:
    if config[0].Solver__eps_tol >= 1e-3:
        logger.warning("eps-tol %g is loose, reported gaps may be large", config[0].Solver__eps_tol)
    cpus = os.cpu_count() or 1
    if config[0].Evaluation__threads > cpus:
        logger.info("limiting threads from %d to %d", config[0].Evaluation__threads, cpus)
        config[0].Evaluation__threads = cpus
    return config
