"""Exact frequentist operating characteristics of an allocation policy at fixed (theta_C, theta_D)"""

from __future__ import annotations

import dataclasses
import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from trialapi import mdp, statespace, utils
from trialapi.measures import PointMass
from trialapi.mdp import PolicyTable
from trialapi.terminal import TerminalTable

logger = logging.getLogger(__name__)

CSV_HEADER = ("theta_C", "theta_D", "patient_benefit", "rejection_rate", "bias", "mse")


@dataclasses.dataclass(frozen=True)
class OcRow:
    theta_C: float
    theta_D: float
    patient_benefit: float
    rejection_rate: float
    bias: float
    mse: float

    def as_row(self) -> list[str]:
        return utils.format_row(dataclasses.astuple(self))


def evaluate(
    policy: PolicyTable, theta_C: float, theta_D: float, alpha: float = 0.1, table: TerminalTable | None = None
) -> OcRow:
    utils.check_probability(alpha, "alpha")
    law = PointMass(theta_C, theta_D)
    n = policy.n
    if n < 1:
        raise ValueError("operating characteristics need at least one patient")
    if table is None:
        table = TerminalTable.build(n)
    elif table.n != n:
        raise ValueError(f"terminal table is for n={table.n}, policy for n={n}")

    dist = mdp.forward_distribution(law, policy)
    assert isinstance(dist, np.ndarray)
    share_C = float(np.dot(dist, statespace.stage_states(n).n_C)) / n
    if theta_C > theta_D:
        benefit = share_C
    elif theta_D > theta_C:
        benefit = 1.0 - share_C
    else:
        benefit = 0.5

    effect = theta_D - theta_C
    error = table.estimates - effect
    return OcRow(
        theta_C=float(theta_C),
        theta_D=float(theta_D),
        patient_benefit=min(max(benefit, 0.0), 1.0),
        rejection_rate=min(float(np.dot(dist, table.rejections(alpha))), 1.0),
        bias=float(np.dot(dist, error)),
        mse=float(np.dot(dist, error * error)),
    )


def sweep(
    policy: PolicyTable,
    theta_C: float,
    theta_D: Sequence[float],
    alpha: float = 0.1,
    *,
    threads: int = 1,
    table: TerminalTable | None = None,
) -> list[OcRow]:
    """One row per theta_D, in grid order whatever the thread count"""
    if not len(theta_D):
        return []
    if table is None:
        table = TerminalTable.build(policy.n)
    logger.debug("evaluating %d grid points on %d threads", len(theta_D), threads)
    if threads <= 1:
        return [evaluate(policy, theta_C, d, alpha, table) for d in theta_D]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda d: evaluate(policy, theta_C, d, alpha, table), theta_D))
