"""Terminal-state statistics: Fisher's exact test, the treatment-effect estimate and posterior MSE"""

from __future__ import annotations

import dataclasses
import functools
import logging
import threading

import numpy as np
import numpy.typing as npt
from scipy.special import gammaln

from trialapi import statespace
from trialapi.errors import DegenerateMeasureError
from trialapi.measures import Rectangle, TruncatedIndependentBeta
from trialapi.statespace import Arm, StageStates, TrialState

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

TIE_TOLERANCE = 1e-9


@functools.lru_cache(maxsize=8)
def log_factorials(n: int) -> FloatArray:
    table = gammaln(np.arange(n + 1, dtype=np.float64) + 1.0)
    table.setflags(write=False)
    return table


def _margin_pvalues(n: int, n_C: int, s: int) -> tuple[npt.NDArray[np.int64], FloatArray]:
    """p-values of every table with margins (n_C, n - n_C, s), indexed by s_C"""
    lf = log_factorials(n)
    n_D = n - n_C
    s_C = np.arange(max(0, s - n_D), min(s, n_C) + 1)
    s_D = s - s_C
    log_p = (
        lf[n_C]
        - lf[s_C]
        - lf[n_C - s_C]
        + lf[n_D]
        - lf[s_D]
        - lf[n_D - s_D]
        - (lf[n] - lf[s] - lf[n - s])
    )
    probs = np.exp(log_p)
    ordered = np.sort(probs, kind="stable")
    cumulative = np.cumsum(ordered)
    upto = np.searchsorted(ordered, probs * (1.0 + TIE_TOLERANCE), side="right")
    return s_C, np.minimum(cumulative[upto - 1], 1.0)


def fisher_pvalues(n: int) -> FloatArray:
    """Two-sided conditional Fisher p-values for every terminal state, in storage order"""
    out = np.empty(statespace.stage_size(n))
    for n_C in range(n + 1):
        for s in range(n + 1):
            s_C, pv = _margin_pvalues(n, n_C, s)
            out[statespace.local_index(n, n_C, s_C, s - s_C)] = pv
    return out


def fisher_pvalue(x_n: TrialState) -> float:
    s_C, pv = _margin_pvalues(x_n.stage, x_n.n_C, x_n.s)
    return float(pv[x_n.s_C - s_C[0]])


def reject(x_n: TrialState, alpha: float) -> bool:
    return fisher_pvalue(x_n) <= alpha


def stage_effect_estimates(st: StageStates) -> FloatArray:
    n_C = st.n_C.astype(np.float64)
    n_D = st.n_D.astype(np.float64)
    both = (st.n_C > 0) & (st.n_D > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        est_C = np.where(both, st.s_C / n_C, (st.s_C + 1.0) / (n_C + 2.0))
        est_D = np.where(both, st.s_D / n_D, (st.s_D + 1.0) / (n_D + 2.0))
    return est_D - est_C


def effect_estimate(x_n: TrialState) -> float:
    return float(stage_effect_estimates(StageStates.from_state(x_n))[0])


def stage_posterior_mse(
    st: StageStates, rectangle: Rectangle, prior: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
) -> FloatArray:
    """Posterior MSE of the effect estimate over the rectangle; nan where the truncated posterior has no mass"""
    law = TruncatedIndependentBeta(*prior, rectangle=rectangle)
    m1_C, m2_C = law.posterior_moments(st, Arm.C)
    m1_D, m2_D = law.posterior_moments(st, Arm.D)
    variance = np.maximum(m2_C - m1_C**2, 0.0) + np.maximum(m2_D - m1_D**2, 0.0)
    return (stage_effect_estimates(st) - (m1_D - m1_C)) ** 2 + variance


def posterior_mse_terminal(
    x_n: TrialState, rectangle: Rectangle, prior: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
) -> float:
    value = float(stage_posterior_mse(StageStates.from_state(x_n), rectangle, prior)[0])
    if np.isnan(value):
        raise DegenerateMeasureError(f"posterior at {x_n} has no mass on {rectangle}")
    return value


@dataclasses.dataclass
class TerminalTable:
    """Per terminal state statistics for one horizon, shared by every policy and measure"""

    n: int
    pvalues: FloatArray
    estimates: FloatArray
    _mse: dict[tuple[Rectangle, tuple[float, ...]], FloatArray] = dataclasses.field(
        default_factory=dict, repr=False, compare=False
    )
    _lock: threading.Lock = dataclasses.field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self) -> None:
        size = statespace.stage_size(self.n)
        if self.pvalues.shape != (size,) or self.estimates.shape != (size,):
            raise ValueError(f"terminal table for n={self.n} needs {size} entries")
        self.pvalues.setflags(write=False)
        self.estimates.setflags(write=False)

    @classmethod
    def build(cls, n: int) -> TerminalTable:
        logger.debug("building terminal table for n=%d", n)
        return cls(n, fisher_pvalues(n), stage_effect_estimates(statespace.stage_states(n)))

    def rejections(self, alpha: float) -> FloatArray:
        return (self.pvalues <= alpha).astype(np.float64)

    def posterior_mse(
        self, rectangle: Rectangle, prior: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    ) -> FloatArray:
        key = (rectangle, tuple(prior))
        with self._lock:
            if key not in self._mse:
                values = stage_posterior_mse(statespace.stage_states(self.n), rectangle, prior)
                degenerate = np.isnan(values)
                if degenerate.any():
                    logger.debug("%d terminal states have no posterior mass on %s", degenerate.sum(), rectangle)
                    values = np.where(degenerate, 0.0, values)
                values.setflags(write=False)
                self._mse[key] = values
            return self._mse[key]
