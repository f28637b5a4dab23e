"""Named allocation procedures

Comparators:
    ER      equal randomisation, 1/2 at every state
    DP      unconstrained Bayes-optimal allocation, p = 1
    CRDP    DP at p = 0.9 with a terminal penalty of -n when either arm gets under 15% of the patients

Constrained designs (solved with trialapi.cmdp):
    CMDP-T  type I error and power constraints
    CMDP-E1 posterior MSE of the effect estimate capped relative to ER
    CMDP-E2 posterior MSE capped relative to CRDP on a 5x5 grid of rectangles, plus the CMDP-T constraints
    CMDP-R  expected successes under a second, less informative prior kept near its maximum
"""

from __future__ import annotations

import dataclasses
import logging
import time
from collections.abc import Sequence

import numpy as np

from trialapi import cmdp, mdp, statespace, utils
from trialapi.cmdp import CmdpProblem, ConstraintSpec, SolveReport, SolverOptions
from trialapi.errors import CmdpError
from trialapi.measures import IndependentBeta, Measure, PooledNull, Rectangle, TruncatedIndependentBeta
from trialapi.mdp import PolicyTable, RewardSpec
from trialapi.statespace import Arm, StageStates
from trialapi.terminal import TerminalTable

logger = logging.getLogger(__name__)

GRID_BREAKPOINTS = (0.0, 0.25, 0.5, 0.75, 0.9, 1.0)
CRDP_P = 0.9
CRDP_FRACTION = 0.15
CMDP_P = 0.95


class DesignTag(utils.StrEnum):
    ER = "ER"
    DP = "DP"
    CRDP = "CRDP"
    CMDP_T = "CMDP-T"
    CMDP_E1 = "CMDP-E1"
    CMDP_E2 = "CMDP-E2"
    CMDP_R = "CMDP-R"

    @property
    def constrained(self) -> bool:
        return self.value.startswith("CMDP")


DEFAULT_P = {
    DesignTag.ER: 0.5,
    DesignTag.DP: 1.0,
    DesignTag.CRDP: CRDP_P,
}


@dataclasses.dataclass(frozen=True)
class DesignSpec:
    tag: DesignTag
    n: int
    p: float | None = None
    prior: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    alpha: float = 0.1
    alpha_star: float = 0.05
    beta: float = 0.4
    null_prior: tuple[float, float] = (1.0, 1.0)
    power_prior: tuple[float, float, float, float] | None = None
    xi: float = 1.0
    rectangle_prior: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    li_prior: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "tag", DesignTag(self.tag))
        if self.n < 1:
            raise ValueError(f"horizon must be at least 1, got {self.n}")
        if self.p is not None and not 0.5 <= self.p <= 1.0:
            raise ValueError(f"randomisation bound must lie in [1/2, 1], got {self.p}")
        object.__setattr__(self, "prior", utils.check_pseudo_counts(self.prior, 4, "prior"))
        object.__setattr__(self, "null_prior", utils.check_pseudo_counts(self.null_prior, 2, "null_prior"))
        object.__setattr__(self, "li_prior", utils.check_pseudo_counts(self.li_prior, 4, "li_prior"))
        object.__setattr__(
            self, "rectangle_prior", utils.check_pseudo_counts(self.rectangle_prior, 4, "rectangle_prior")
        )
        if self.power_prior is not None:
            object.__setattr__(self, "power_prior", utils.check_pseudo_counts(self.power_prior, 4, "power_prior"))
        for name in ("alpha", "alpha_star", "beta"):
            utils.check_probability(getattr(self, name), name)
        if self.tag == DesignTag.CMDP_R and not 0.0 <= self.xi <= 1.0:
            raise ValueError(f"CMDP-R needs xi in [0, 1], got {self.xi}")
        if self.tag in (DesignTag.CMDP_E1, DesignTag.CMDP_E2) and not self.xi > 0.0:
            raise ValueError(f"CMDP-E needs a positive xi, got {self.xi}")
        if self.tag in (DesignTag.CMDP_T, DesignTag.CMDP_E2) and self.alpha_star > self.alpha:
            logger.warning("alpha* = %g exceeds the test level alpha = %g", self.alpha_star, self.alpha)

    @property
    def randomisation(self) -> float:
        if self.p is not None:
            return self.p
        return DEFAULT_P.get(self.tag, CMDP_P)

    @property
    def measure(self) -> IndependentBeta:
        return IndependentBeta(*self.prior)

    @property
    def name(self) -> str:
        name = f"{self.tag}-n{self.n}-p{self.randomisation:g}"
        if self.tag in (DesignTag.CMDP_E1, DesignTag.CMDP_E2, DesignTag.CMDP_R):
            name += f"-xi{self.xi:g}"
        return name


def posterior_mean_rewards(measure: Measure) -> RewardSpec:
    """r(x, delta) = delta * E[theta_C | x] + (1 - delta) * E[theta_D | x]"""

    def running(st: StageStates) -> tuple[mdp.StageValue, mdp.StageValue]:
        return measure.stage_success_prob(st, Arm.C), measure.stage_success_prob(st, Arm.D)

    return RewardSpec(running=running)


def imbalance_penalty(n: int, fraction: float = CRDP_FRACTION) -> RewardSpec:
    """h(x_n) = -n when min(n_C, n_D) < fraction * n"""
    st = statespace.stage_states(n)
    short = np.minimum(st.n_C, st.n_D) < fraction * n
    return RewardSpec(terminal=np.where(short, -float(n), 0.0))


def er_policy(n: int) -> PolicyTable:
    return PolicyTable.constant(n)


def dp_policy(n: int, prior: Sequence[float] = (1.0, 1.0, 1.0, 1.0), p: float = 1.0) -> tuple[PolicyTable, float]:
    measure = IndependentBeta(*prior)
    value, policy = mdp.backward_induction(measure, posterior_mean_rewards(measure), p, n)
    return policy, value


def crdp_policy(
    n: int, prior: Sequence[float] = (1.0, 1.0, 1.0, 1.0), p: float = CRDP_P
) -> tuple[PolicyTable, float]:
    """Penalised DP policy and its expected successes, the penalty itself not counted"""
    measure = IndependentBeta(*prior)
    rewards = posterior_mean_rewards(measure)
    penalised = mdp.combine_rewards([1.0, 1.0], [rewards, imbalance_penalty(n)])
    _, policy = mdp.backward_induction(measure, penalised, p, n)
    return policy, mdp.expected_total(measure, policy, rewards)


def _testing_constraints(spec: DesignSpec, table: TerminalTable) -> list[ConstraintSpec]:
    """P_0(T <= alpha) <= alpha* and P_1(T <= alpha) >= 1 - beta; vacuous ones are left out"""
    rejections = table.rejections(spec.alpha)
    constraints = []
    if spec.alpha_star < 1.0:
        constraints.append(
            ConstraintSpec(PooledNull(*spec.null_prior), RewardSpec(terminal=rejections), spec.alpha_star, "type-I")
        )
    if spec.beta < 1.0:
        power = IndependentBeta(*(spec.power_prior or spec.prior))
        constraints.append(ConstraintSpec(power, RewardSpec(terminal=-rejections), -(1.0 - spec.beta), "power"))
    return constraints


def build_cmdp_t(spec: DesignSpec, table: TerminalTable | None = None) -> CmdpProblem:
    table = table or TerminalTable.build(spec.n)
    measure = spec.measure
    return CmdpProblem(
        spec.n, spec.randomisation, measure, posterior_mean_rewards(measure), _testing_constraints(spec, table)
    )


def rectangle_grid(breakpoints: Sequence[float] = GRID_BREAKPOINTS) -> list[Rectangle]:
    edges = list(zip(breakpoints[:-1], breakpoints[1:]))
    return [Rectangle(lo_C, hi_C, lo_D, hi_D) for lo_C, hi_C in edges for lo_D, hi_D in edges]


def build_cmdp_e(
    spec: DesignSpec,
    baseline: PolicyTable,
    table: TerminalTable | None = None,
    rectangles: Sequence[Rectangle] | None = None,
) -> CmdpProblem:
    """Cap the posterior MSE on every rectangle at xi times what the baseline policy achieves there"""
    table = table or TerminalTable.build(spec.n)
    if baseline.n != spec.n:
        raise ValueError(f"baseline policy has horizon {baseline.n}, design has {spec.n}")
    if rectangles is None:
        rectangles = [Rectangle()] if spec.tag == DesignTag.CMDP_E1 else rectangle_grid()
    measure = spec.measure

    constraints = [] if spec.tag == DesignTag.CMDP_E1 else _testing_constraints(spec, table)
    for rect in rectangles:
        law = TruncatedIndependentBeta(*spec.rectangle_prior, rectangle=rect)
        mse = RewardSpec(terminal=table.posterior_mse(rect, spec.rectangle_prior))
        reference = mdp.expected_total(law, baseline, mse)
        logger.debug("baseline posterior MSE on %s: %.10g", rect, reference)
        constraints.append(ConstraintSpec(law, mse, spec.xi * reference, f"mse{rect}"))
    return CmdpProblem(spec.n, spec.randomisation, measure, posterior_mean_rewards(measure), constraints)


def build_cmdp_r(spec: DesignSpec) -> CmdpProblem:
    """Keep the expected successes under the LI prior within a fraction xi of their maximum there"""
    if not 0.0 <= spec.xi <= 1.0:
        raise ValueError(f"CMDP-R needs xi in [0, 1], got {spec.xi}")
    measure = spec.measure
    li = IndependentBeta(*spec.li_prior)
    li_rewards = posterior_mean_rewards(li)
    v_li, _ = mdp.backward_induction(li, li_rewards, spec.randomisation, spec.n)
    logger.debug("maximum expected successes under the LI prior: %.10g", v_li)
    constraint = ConstraintSpec(li, mdp.combine_rewards([-1.0], [li_rewards]), -spec.xi * v_li, "robustness")
    return CmdpProblem(spec.n, spec.randomisation, measure, posterior_mean_rewards(measure), [constraint])


def build_problem(spec: DesignSpec, table: TerminalTable | None = None) -> CmdpProblem:
    if spec.tag == DesignTag.CMDP_T:
        return build_cmdp_t(spec, table)
    if spec.tag == DesignTag.CMDP_E1:
        return build_cmdp_e(spec, er_policy(spec.n), table)
    if spec.tag == DesignTag.CMDP_E2:
        baseline, _ = crdp_policy(spec.n, spec.prior)
        return build_cmdp_e(spec, baseline, table)
    if spec.tag == DesignTag.CMDP_R:
        return build_cmdp_r(spec)
    raise ValueError(f"{spec.tag} is not a constrained design")


def certify(problem: CmdpProblem, policy: PolicyTable) -> list[float]:
    """Constraint expectations recomputed by forward recursion under each constraint's own measure"""
    return [mdp.expected_total(c.measure, policy, c.rewards) for c in problem.constraints]


def _comparator_report(spec: DesignSpec, policy: PolicyTable, value: float, start: float) -> SolveReport:
    return SolveReport(
        design=str(spec.tag),
        n=spec.n,
        p=spec.randomisation,
        dual_value=value,
        lower_bound=value,
        achieved=value,
        gap=0.0,
        iterations=0,
        deterministic=cmdp.is_deterministic(spec.measure, policy),
        seconds=time.perf_counter() - start,
        policy=policy,
    )


def solve_design(
    spec: DesignSpec, options: SolverOptions | None = None, table: TerminalTable | None = None
) -> SolveReport:
    """Policy and report for any design; comparators get a report with no multipliers and zero gap"""
    start = time.perf_counter()
    logger.info("solving %s", spec.name)
    if spec.tag == DesignTag.ER:
        policy = er_policy(spec.n)
        value = mdp.expected_total(spec.measure, policy, posterior_mean_rewards(spec.measure))
        return _comparator_report(spec, policy, value, start)
    if spec.tag == DesignTag.DP:
        policy, value = dp_policy(spec.n, spec.prior, spec.randomisation)
        return _comparator_report(spec, policy, value, start)
    if spec.tag == DesignTag.CRDP:
        policy, value = crdp_policy(spec.n, spec.prior, spec.randomisation)
        return _comparator_report(spec, policy, value, start)

    problem = build_problem(spec, table)
    try:
        report = cmdp.CmdpSolver(problem, options).cutting_plane()
    except CmdpError as e:
        if isinstance(e.report, SolveReport):
            e.report.design = str(spec.tag)
        raise
    report.design = str(spec.tag)
    report.seconds = time.perf_counter() - start
    return report
