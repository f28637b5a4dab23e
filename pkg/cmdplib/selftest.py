"""Exact-computation oracle checks

Each check compares a fast recursion against an independent slow computation on horizons small enough to
enumerate. The brute-force history enumerator is also used by the test-suite.
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
import math
import time
from collections.abc import Callable, Iterator

import numpy as np
from scipy import integrate

from trialapi import cmdp, designs, mdp, statespace
from trialapi.cmdp import CmdpProblem, ConstraintSpec, SolverOptions
from trialapi.measures import IndependentBeta, Measure, PooledNull, Rectangle, log_marginal_likelihood
from trialapi.mdp import PolicyTable, RewardSpec
from trialapi.statespace import Arm, Outcome, TrialState
from trialapi.terminal import TerminalTable, effect_estimate, posterior_mse_terminal

logger = logging.getLogger(__name__)

TOLERANCE = 1e-10
LP_TOLERANCE = 1e-6
QUADRATURE_TOLERANCE = 1e-6
DP_TOLERANCE = 1e-12


@dataclasses.dataclass
class CheckResult:
    name: str
    passed: bool
    error: float
    tolerance: float
    seconds: float = 0.0
    detail: str = ""

    def __str__(self) -> str:
        verdict = "ok" if self.passed else "FAILED"
        text = f"{self.name}: {verdict} (error {self.error:.3g}, tolerance {self.tolerance:g}, {self.seconds:.2f}s)"
        if self.detail:
            text += f" {self.detail}"
        return text


def enumerate_histories(
    policy: PolicyTable, measure: Measure
) -> Iterator[tuple[tuple[tuple[Arm, Outcome], ...], TrialState, float]]:
    """Every allocation and outcome sequence with its probability

    The probability of a history is the product of the allocation probabilities along it times the
    marginal likelihood of its outcome sequence.
    """
    idx = policy.indexer
    steps = [(arm, outcome) for arm in Arm for outcome in Outcome]
    for history in itertools.product(steps, repeat=policy.n):
        x = TrialState()
        weight = 1.0
        for arm, outcome in history:
            delta = policy[x]
            weight *= delta if arm == Arm.C else 1.0 - delta
            x = idx.successor(x, arm, outcome)
        yield history, x, weight * math.exp(log_marginal_likelihood(measure, x))


def brute_force_distribution(policy: PolicyTable, measure: Measure) -> np.ndarray:
    """Law of the terminal state by summing over every history"""
    idx = policy.indexer
    dist = np.zeros(idx.terminal_size)
    offset = idx.stage_offset(policy.n)
    for _, x, prob in enumerate_histories(policy, measure):
        dist[idx.index(x) - offset] += prob
    return dist


def _mixed_policy(n: int, p: float = 0.8) -> PolicyTable:
    """A policy using all three allocation levels"""
    codes = np.array([(i % 3) - 1 for i in range(statespace.indexer(n).nonterminal_size)], dtype=np.int8)
    return PolicyTable(n, p, codes, codes=True)


def check_history_enumeration(max_n: int = 4) -> float:
    error = 0.0
    for n in range(1, max_n + 1):
        for measure in (IndependentBeta(2.0, 1.0, 1.0, 3.0), PooledNull(1.5, 2.5)):
            policy = _mixed_policy(n)
            exact = mdp.forward_distribution(measure, policy)
            assert isinstance(exact, np.ndarray)
            error = max(error, float(np.max(np.abs(exact - brute_force_distribution(policy, measure)))))
    return error


def check_change_of_measure(max_n: int = 4) -> float:
    """E_c[r] under the constraint measure equals E[r q_c / q] under the objective measure"""
    error = 0.0
    objective = IndependentBeta(1.0, 1.0, 1.0, 1.0)
    for n in range(1, max_n + 1):
        table = TerminalTable.build(n)
        running = designs.posterior_mean_rewards(IndependentBeta(2.0, 3.0, 4.0, 1.0))
        rewards = mdp.combine_rewards([1.0, 1.0], [running, RewardSpec(terminal=table.rejections(0.3))])
        constraints = [
            ConstraintSpec(PooledNull(2.0, 2.0), rewards, 1.0),
            ConstraintSpec(IndependentBeta(3.0, 1.0, 1.0, 2.0), rewards, 1.0),
        ]
        problem = CmdpProblem(n, 0.8, objective, designs.posterior_mean_rewards(objective), constraints)
        policy = _mixed_policy(n)
        for c, spec in enumerate(constraints):
            direct = mdp.expected_total(spec.measure, policy, spec.rewards)
            moved = mdp.expected_total(objective, policy, cmdp.reweight_constraint(problem, c))
            error = max(error, abs(direct - moved))
    return error


def lp_instances() -> list[CmdpProblem]:
    """Three small constrained problems, each feasible because equal randomisation meets its bounds"""
    problems = []

    n = 6
    table = TerminalTable.build(n)
    measure = IndependentBeta()
    er = designs.er_policy(n)
    reject = RewardSpec(terminal=table.rejections(0.1))
    null = PooledNull()
    type_one = mdp.expected_total(null, er, reject)
    power = mdp.expected_total(measure, er, reject)
    problems.append(
        CmdpProblem(
            n,
            0.95,
            measure,
            designs.posterior_mean_rewards(measure),
            [
                ConstraintSpec(null, reject, type_one, "type-I"),
                ConstraintSpec(measure, RewardSpec(terminal=-table.rejections(0.1)), -power, "power"),
            ],
        )
    )

    spec = designs.DesignSpec(designs.DesignTag.CMDP_R, 5, p=0.9, prior=(3.0, 7.0, 6.0, 4.0), xi=0.99)
    problems.append(designs.build_cmdp_r(spec))

    spec = designs.DesignSpec(designs.DesignTag.CMDP_E1, 4, p=0.95, xi=1.05)
    problems.append(designs.build_cmdp_e(spec, designs.er_policy(4)))
    return problems


def check_exact_lp() -> float:
    error = 0.0
    for problem in lp_instances():
        report = cmdp.cutting_plane(problem, SolverOptions(eps_tol=1e-10))
        _, value = cmdp.exact_lp_policy(problem)
        logger.debug("n=%d: dual value %.12g, occupancy LP %.12g", problem.n, report.dual_value, value)
        error = max(error, abs(report.dual_value - value))
    return error


def _quadrature_mse(x: TrialState, rectangle: Rectangle, prior: tuple[float, float, float, float]) -> float:
    a_C, b_C, a_D, b_D = prior
    estimate = effect_estimate(x)

    def density(theta_D: float, theta_C: float) -> float:
        return (
            theta_C ** (a_C + x.s_C - 1.0)
            * (1.0 - theta_C) ** (b_C + x.n_C - x.s_C - 1.0)
            * theta_D ** (a_D + x.s_D - 1.0)
            * (1.0 - theta_D) ** (b_D + x.n_D - x.s_D - 1.0)
        )

    def integrate_2d(f: Callable[[float, float], float]) -> float:
        value, _ = integrate.dblquad(
            f, rectangle.lo_C, rectangle.hi_C, rectangle.lo_D, rectangle.hi_D, epsabs=1e-13, epsrel=1e-11
        )
        return float(value)

    mass = integrate_2d(density)
    loss = integrate_2d(lambda d, c: (estimate - (d - c)) ** 2 * density(d, c))
    return loss / mass


def quadrature_cases(
    count: int = 10, seed: int = 20
) -> list[tuple[TrialState, Rectangle, tuple[float, float, float, float]]]:
    """Seeded terminal states, rectangles and priors for the posterior MSE check"""
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(count):
        n_C, n_D = (int(v) for v in rng.integers(0, 5, 2))
        x = TrialState(int(rng.integers(0, n_C + 1)), int(rng.integers(0, n_D + 1)), n_C, n_D)
        lo_C, lo_D = (float(v) for v in rng.choice([0.0, 0.2, 0.4], 2))
        w_C, w_D = (float(v) for v in rng.choice([0.4, 0.6], 2))
        rectangle = Rectangle(lo_C, min(1.0, lo_C + w_C), lo_D, min(1.0, lo_D + w_D))
        a_C, b_C, a_D, b_D = (float(v) for v in rng.integers(1, 5, 4))
        cases.append((x, rectangle, (a_C, b_C, a_D, b_D)))
    return cases


def check_posterior_mse() -> float:
    error = 0.0
    for x, rectangle, prior in quadrature_cases():
        exact = posterior_mse_terminal(x, rectangle, prior)
        error = max(error, abs(exact - _quadrature_mse(x, rectangle, prior)))
    return error


def check_dp_value() -> float:
    _, value = designs.dp_policy(2)
    return abs(value - 13.0 / 12.0)


CHECKS: dict[str, tuple[Callable[[], float], float]] = {
    "history enumeration": (check_history_enumeration, TOLERANCE),
    "change of measure": (check_change_of_measure, TOLERANCE),
    "occupancy LP": (check_exact_lp, LP_TOLERANCE),
    "posterior MSE quadrature": (check_posterior_mse, QUADRATURE_TOLERANCE),
    "DP value n=2": (check_dp_value, DP_TOLERANCE),
}


def run_selftest() -> list[CheckResult]:
    results = []
    for name, (check, tolerance) in CHECKS.items():
        start = time.perf_counter()
        try:
            error = check()
            results.append(CheckResult(name, error <= tolerance, error, tolerance, time.perf_counter() - start))
        except Exception as e:
            logger.exception("selftest check %s raised", name)
            results.append(CheckResult(name, False, math.inf, tolerance, time.perf_counter() - start, repr(e)))
    return results
