"""Probability laws on (theta_C, theta_D) and the quantities the recursions need from them

Each measure supplies the log marginal likelihood q(x) of a state and the predictive success probability
q(x + ds_a) / q(x) of each arm, evaluated on whole stages at once.
"""

from __future__ import annotations

import dataclasses
import logging

import numpy as np
import numpy.typing as npt
from scipy.special import betaln, xlog1py, xlogy

from trialapi import utils
from trialapi.betafunc import (  # noqa: F401
    LOG_MIN_MASS,
    log_interval_mass,
    log_truncated_moment,
    regularized_incomplete_beta,
    truncated_beta_moment,
)
from trialapi.errors import DegenerateMeasureError
from trialapi.statespace import Arm, StageStates, TrialState

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


@dataclasses.dataclass(frozen=True)
class Rectangle:
    lo_C: float = 0.0
    hi_C: float = 1.0
    lo_D: float = 0.0
    hi_D: float = 1.0

    def __post_init__(self) -> None:
        for lo, hi in ((self.lo_C, self.hi_C), (self.lo_D, self.hi_D)):
            utils.check_probability(lo, "rectangle bound")
            utils.check_probability(hi, "rectangle bound")
            if not lo < hi:
                raise ValueError(f"degenerate rectangle {self}")

    def bounds(self, arm: Arm) -> tuple[float, float]:
        if arm == Arm.C:
            return self.lo_C, self.hi_C
        return self.lo_D, self.hi_D

    def __str__(self) -> str:
        return f"[{self.lo_C:g},{self.hi_C:g})x[{self.lo_D:g},{self.hi_D:g})"


class Measure:
    """A law on theta; subclasses implement the stage-vectorised methods"""

    name = ""

    def stage_log_marginal(self, st: StageStates) -> FloatArray:
        raise NotImplementedError

    def stage_success_prob(self, st: StageStates, arm: Arm) -> FloatArray:
        raise NotImplementedError

    def pseudo_counts(self) -> tuple[float, float, float, float]:
        return (0.0, 0.0, 0.0, 0.0)


@dataclasses.dataclass(frozen=True)
class IndependentBeta(Measure):
    s_C0: float = 1.0
    f_C0: float = 1.0
    s_D0: float = 1.0
    f_D0: float = 1.0

    name = "independent-beta"

    def __post_init__(self) -> None:
        utils.check_pseudo_counts(dataclasses.astuple(self), 4, "IndependentBeta")

    def pseudo_counts(self) -> tuple[float, float, float, float]:
        return (self.s_C0, self.f_C0, self.s_D0, self.f_D0)

    def stage_log_marginal(self, st: StageStates) -> FloatArray:
        return (
            betaln(self.s_C0 + st.s_C, self.f_C0 + st.f_C)
            - betaln(self.s_C0, self.f_C0)
            + betaln(self.s_D0 + st.s_D, self.f_D0 + st.f_D)
            - betaln(self.s_D0, self.f_D0)
        )

    def stage_success_prob(self, st: StageStates, arm: Arm) -> FloatArray:
        if arm == Arm.C:
            return (self.s_C0 + st.s_C) / (self.s_C0 + self.f_C0 + st.n_C)
        return (self.s_D0 + st.s_D) / (self.s_D0 + self.f_D0 + st.n_D)


@dataclasses.dataclass(frozen=True)
class PooledNull(Measure):
    """Beta(s0, f0) on a success probability shared by both arms"""

    s0: float = 1.0
    f0: float = 1.0

    name = "pooled-null"

    def __post_init__(self) -> None:
        utils.check_pseudo_counts((self.s0, self.f0), 2, "PooledNull")

    def pseudo_counts(self) -> tuple[float, float, float, float]:
        return (self.s0, self.f0, self.s0, self.f0)

    def stage_log_marginal(self, st: StageStates) -> FloatArray:
        s = st.s
        return betaln(self.s0 + s, self.f0 + st.t - s) - betaln(self.s0, self.f0)

    def stage_success_prob(self, st: StageStates, arm: Arm) -> FloatArray:
        return (self.s0 + st.s) / (self.s0 + self.f0 + st.t)


@dataclasses.dataclass(frozen=True)
class TruncatedIndependentBeta(Measure):
    s_C0: float = 1.0
    f_C0: float = 1.0
    s_D0: float = 1.0
    f_D0: float = 1.0
    rectangle: Rectangle = dataclasses.field(default_factory=Rectangle)

    name = "truncated-beta"

    def __post_init__(self) -> None:
        utils.check_pseudo_counts(self.pseudo_counts(), 4, "TruncatedIndependentBeta")
        for arm in Arm:
            a, b = self._prior(arm)
            lo, hi = self.rectangle.bounds(arm)
            if float(log_interval_mass(a, b, lo, hi)) < LOG_MIN_MASS:
                raise DegenerateMeasureError(f"prior Beta({a}, {b}) has no mass on {self.rectangle}")

    def pseudo_counts(self) -> tuple[float, float, float, float]:
        return (self.s_C0, self.f_C0, self.s_D0, self.f_D0)

    def _prior(self, arm: Arm) -> tuple[float, float]:
        if arm == Arm.C:
            return self.s_C0, self.f_C0
        return self.s_D0, self.f_D0

    def _posterior(self, st: StageStates, arm: Arm) -> tuple[FloatArray, FloatArray]:
        a, b = self._prior(arm)
        if arm == Arm.C:
            return a + st.s_C, b + st.f_C
        return a + st.s_D, b + st.f_D

    def stage_log_marginal(self, st: StageStates) -> FloatArray:
        total = np.zeros(len(st))
        for arm in Arm:
            a, b = self._prior(arm)
            pa, pb = self._posterior(st, arm)
            lo, hi = self.rectangle.bounds(arm)
            total += betaln(pa, pb) - betaln(a, b)
            total += log_interval_mass(pa, pb, lo, hi) - log_interval_mass(a, b, lo, hi)
        return total

    def stage_success_prob(self, st: StageStates, arm: Arm) -> FloatArray:
        pa, pb = self._posterior(st, arm)
        lo, hi = self.rectangle.bounds(arm)
        mean = np.exp(log_truncated_moment(pa, pb, lo, hi, 1))
        # states the law cannot reach carry no probability; any admissible value will do
        return np.clip(np.where(np.isnan(mean), 0.5 * (lo + hi), mean), lo, hi)

    def posterior_moments(self, st: StageStates, arm: Arm) -> tuple[FloatArray, FloatArray]:
        """First and second truncated posterior moments; nan where the posterior mass vanishes"""
        pa, pb = self._posterior(st, arm)
        lo, hi = self.rectangle.bounds(arm)
        log_norm = log_interval_mass(pa, pb, lo, hi)
        m1 = np.exp(log_truncated_moment(pa, pb, lo, hi, 1, log_norm))
        m2 = np.exp(log_truncated_moment(pa, pb, lo, hi, 2, log_norm))
        return m1, m2


@dataclasses.dataclass(frozen=True)
class PointMass(Measure):
    theta_C: float = 0.5
    theta_D: float = 0.5

    name = "point-mass"

    def __post_init__(self) -> None:
        utils.check_probability(self.theta_C, "theta_C")
        utils.check_probability(self.theta_D, "theta_D")

    @property
    def is_boundary(self) -> bool:
        return any(v in (0.0, 1.0) for v in (self.theta_C, self.theta_D))

    def stage_log_marginal(self, st: StageStates) -> FloatArray:
        return (
            xlogy(st.s_C, self.theta_C)
            + xlog1py(st.f_C, -self.theta_C)
            + xlogy(st.s_D, self.theta_D)
            + xlog1py(st.f_D, -self.theta_D)
        )

    def stage_success_prob(self, st: StageStates, arm: Arm) -> FloatArray:
        return np.full(len(st), self.theta_C if arm == Arm.C else self.theta_D)


def log_marginal_likelihood(m: Measure, x: TrialState) -> float:
    return float(m.stage_log_marginal(StageStates.from_state(x))[0])


def predictive_success_prob(m: Measure, x: TrialState, arm: Arm) -> float:
    return float(m.stage_success_prob(StageStates.from_state(x), arm)[0])
