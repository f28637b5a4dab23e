"""Constrained MDP solver

The constrained problem is solved through its Lagrange dual. Constraint expectations under their own
measures are moved onto the objective measure by weighting rewards with q_c(x) / q(x); L(lambda) is then
a single backward induction and its subgradient a single forward pass. The dual is minimised with Kelley's
cutting plane method, after which the multipliers of violated constraints are inflated until the greedy
policy is feasible. A small-horizon occupancy-measure LP gives the exact optimum for cross-checking.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from typing import Any

import numpy as np
import numpy.typing as npt

from trialapi import lp, mdp, statespace
from trialapi.errors import InfeasibleError, IterationLimitError
from trialapi.mdp import PolicyTable, RewardSpec
from trialapi.measures import Measure, PointMass
from trialapi.statespace import StageStates

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

SLACK_TOLERANCE = 1e-9
REPAIR_SEED = 1e-6
EXACT_LP_MAX_HORIZON = 8


@dataclasses.dataclass(frozen=True)
class ConstraintSpec:
    """E_c[sum_t r_c(X_t, delta_t)] <= bound, the expectation taken under `measure`"""

    measure: Measure
    rewards: RewardSpec
    bound: float
    name: str = ""


@dataclasses.dataclass
class CmdpProblem:
    n: int
    p: float
    measure: Measure
    rewards: RewardSpec
    constraints: list[ConstraintSpec] = dataclasses.field(default_factory=list)

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"horizon must be non-negative, got {self.n}")
        if not 0.5 <= self.p <= 1.0:
            raise ValueError(f"randomisation bound must lie in [1/2, 1], got {self.p}")
        # q must be positive wherever a constraint measure puts mass
        if self.constraints and isinstance(self.measure, PointMass) and self.measure.is_boundary:
            raise ValueError("objective measure must give positive probability to every trial state")
        for i, c in enumerate(self.constraints):
            if not math.isfinite(c.bound):
                raise ValueError(f"constraint {c.name or i} has a non-finite bound")

    @property
    def bounds(self) -> FloatArray:
        return np.array([c.bound for c in self.constraints], dtype=np.float64)

    @property
    def constraint_names(self) -> list[str]:
        return [c.name or f"c{i}" for i, c in enumerate(self.constraints)]


@dataclasses.dataclass
class SolverOptions:
    eps_tol: float = 1e-9
    phi: float = 0.01
    lambda_box: float = 1e6
    max_iterations: int = 10_000
    max_repair_iterations: int = 100_000

    def __post_init__(self) -> None:
        if not self.eps_tol > 0:
            raise ValueError("eps_tol must be positive")
        if not self.phi > 0:
            raise ValueError("phi must be positive")
        if not self.lambda_box > 0:
            raise ValueError("lambda_box must be positive")
        if self.max_iterations < 1 or self.max_repair_iterations < 0:
            raise ValueError("iteration caps must be positive")


@dataclasses.dataclass
class SolveReport:
    design: str = ""
    n: int = 0
    p: float = 1.0
    status: str = "optimal"
    dual: list[float] = dataclasses.field(default_factory=list)
    dual_value: float = math.nan
    lower_bound: float = math.nan
    achieved: float = math.nan
    gap: float = 0.0
    constraint_names: list[str] = dataclasses.field(default_factory=list)
    bounds: list[float] = dataclasses.field(default_factory=list)
    expectations: list[float] = dataclasses.field(default_factory=list)
    slacks: list[float] = dataclasses.field(default_factory=list)
    iterations: int = 0
    repair_iterations: int = 0
    kkt_residual: float = 0.0
    deterministic: bool = True
    box_active: bool = False
    seconds: float = 0.0
    history: list[tuple[float, float]] = dataclasses.field(default_factory=list)
    policy: PolicyTable | None = dataclasses.field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(dataclasses.replace(self, policy=None))
        del out["policy"]
        return out


@dataclasses.dataclass
class Evaluation:
    """Greedy policy at some lambda and everything one forward pass tells about it"""

    lam: FloatArray
    value: float
    policy: PolicyTable
    objective: float
    expectations: FloatArray
    bounds: FloatArray

    @property
    def slacks(self) -> FloatArray:
        """V_c - E[sum r~_c], which is also the subgradient of L at lam"""
        return self.bounds - self.expectations


def _ratio(objective: Measure, measure: Measure, st: StageStates) -> FloatArray:
    log_q = objective.stage_log_marginal(st)
    log_qc = measure.stage_log_marginal(st)
    with np.errstate(invalid="ignore", over="ignore"):
        ratio = np.exp(log_qc - log_q)
    return np.where(np.isfinite(log_q) & np.isfinite(ratio), ratio, 0.0)


def reweight_constraint(problem: CmdpProblem, c: int) -> RewardSpec:
    """r_c weighted by q_c / q, an equivalent reward under the objective measure"""
    spec = problem.constraints[c]
    if spec.measure == problem.measure:
        return spec.rewards
    objective, measure, rewards = problem.measure, spec.measure, spec.rewards

    running = None
    if rewards.has_running:

        def running(st: StageStates) -> tuple[mdp.StageValue, mdp.StageValue]:
            rho_C, rho_D = rewards.stage(st)
            w = _ratio(objective, measure, st)
            return rho_C * w, rho_D * w

    terminal = None
    if rewards.terminal is not None:
        terminal = rewards.terminal * _ratio(objective, measure, statespace.stage_states(problem.n))
    return RewardSpec(running=running, terminal=terminal)


class CmdpSolver:
    def __init__(self, problem: CmdpProblem, options: SolverOptions | None = None) -> None:
        self.problem = problem
        self.options = options or SolverOptions()
        self.reweighted = [reweight_constraint(problem, c) for c in range(len(problem.constraints))]
        self.bounds = problem.bounds

    def _check_lambda(self, lam: npt.ArrayLike) -> FloatArray:
        lam = np.asarray(lam, dtype=np.float64).reshape(-1)
        if lam.shape != self.bounds.shape:
            raise ValueError(f"expected {self.bounds.size} multipliers, got {lam.size}")
        if np.any(lam < 0):
            raise ValueError("multipliers must be non-negative")
        return lam

    def greedy(self, lam: npt.ArrayLike) -> tuple[float, PolicyTable]:
        """Backward induction on r - sum_c lambda_c r~_c; returns the recursion value without the offset"""
        lam = self._check_lambda(lam)
        priced = mdp.combine_rewards([1.0, *(-lam)], [self.problem.rewards, *self.reweighted])
        return mdp.backward_induction(self.problem.measure, priced, self.problem.p, self.problem.n)

    def lagrangian(self, lam: npt.ArrayLike) -> tuple[float, PolicyTable]:
        lam = self._check_lambda(lam)
        value, policy = self.greedy(lam)
        return value + float(np.dot(lam, self.bounds)), policy

    def expectations(self, policy: PolicyTable) -> tuple[float, FloatArray]:
        """E[sum r] and E[sum r~_c] for every constraint from one forward pass under the objective measure"""
        totals, _ = mdp.forward_pass(self.problem.measure, policy, [self.problem.rewards, *self.reweighted])
        return float(totals[0]), totals[1:]

    def subgradient(self, lam: npt.ArrayLike, policy: PolicyTable) -> FloatArray:
        self._check_lambda(lam)
        _, expected = self.expectations(policy)
        return self.bounds - expected

    def evaluate(self, lam: npt.ArrayLike) -> Evaluation:
        lam = self._check_lambda(lam)
        value, policy = self.lagrangian(lam)
        objective, expected = self.expectations(policy)
        return Evaluation(lam, value, policy, objective, expected, self.bounds)

    def kkt_and_determinism(self, lam: npt.ArrayLike, policy: PolicyTable) -> tuple[float, bool]:
        lam = self._check_lambda(lam)
        _, expected = self.expectations(policy)
        residual = abs(float(np.dot(lam, self.bounds - expected)))
        return residual, is_deterministic(self.problem.measure, policy)

    def repair_feasibility(self, lam: npt.ArrayLike, phi: float | None = None) -> tuple[Evaluation, int]:
        """Inflate the multipliers of violated constraints by (1 + phi) until the greedy policy is feasible"""
        phi = self.options.phi if phi is None else phi
        if not phi > 0:
            raise ValueError("phi must be positive")
        lam = self._check_lambda(lam).copy()
        for it in range(self.options.max_repair_iterations + 1):
            ev = self.evaluate(lam)
            violated = ev.slacks < -SLACK_TOLERANCE
            if not violated.any():
                if it:
                    logger.debug("repair finished after %d iterations at lambda %s", it, lam)
                return ev, it
            lam = np.where(violated, np.where(lam == 0.0, REPAIR_SEED, lam * (1.0 + phi)), lam)
        raise InfeasibleError(
            f"no feasible greedy policy after {self.options.max_repair_iterations} repair iterations"
        )

    def _master(self, cuts: list[FloatArray], rhs: list[float]) -> tuple[float, FloatArray]:
        k = self.bounds.size
        box = np.hstack([np.zeros((k, 1)), np.eye(k)])
        A_ub = np.vstack([np.array(cuts).reshape(-1, k + 1), box])
        b_ub = np.concatenate([np.array(rhs), np.full(k, self.options.lambda_box)])
        c = np.zeros(k + 1)
        c[0] = 1.0
        sol = lp.solve(lp.LinearProgram(c, A_ub, b_ub))
        if not sol.success:
            raise InfeasibleError(f"cutting plane master problem is {sol.status}")
        return float(sol.x[0]), sol.x[1:]

    def cutting_plane(self) -> SolveReport:
        problem = self.problem
        start = time.perf_counter()
        k = self.bounds.size
        report = SolveReport(
            n=problem.n, p=problem.p, constraint_names=problem.constraint_names, bounds=self.bounds.tolist()
        )

        cuts: list[FloatArray] = []
        rhs: list[float] = []
        lower, lam = self._master(cuts, rhs)
        f_star = math.inf
        best: Evaluation | None = None
        for it in range(1, self.options.max_iterations + 1):
            ev = self.evaluate(lam)
            if k and ev.value <= 0.0:
                report.status = "infeasible"
                report.dual_value = -math.inf
                report.iterations = it
                report.seconds = time.perf_counter() - start
                raise InfeasibleError(f"dual value {ev.value:.6g} at lambda {lam} is not positive", report=report)
            if ev.value < f_star:
                f_star, best = ev.value, ev
            eps = f_star - lower
            report.history.append((lower, f_star))
            logger.debug("cutting plane %d: lower %.12g f* %.12g eps %.3g", it, lower, f_star, eps)
            if eps <= self.options.eps_tol or k == 0:
                break
            g = ev.slacks
            cuts.append(np.concatenate([[-1.0], g]))
            rhs.append(-ev.value + float(np.dot(g, lam)))
            lower, lam = self._master(cuts, rhs)
        else:
            assert best is not None
            report.status = "iteration-limit"
            self._fill(report, best, f_star, lower, self.options.max_iterations, 0, start)
            raise IterationLimitError(
                f"cutting plane did not reach eps_tol {self.options.eps_tol} in {self.options.max_iterations} "
                "iterations",
                report=report,
            )

        box_active = bool(k and np.any(lam >= self.options.lambda_box * (1.0 - 1e-12)))
        if box_active:
            logger.warning("multiplier box %g is active at termination", self.options.lambda_box)
        repaired, repairs = self.repair_feasibility(lam)
        self._fill(report, repaired, f_star, lower, it, repairs, start)
        report.box_active = box_active
        logger.info(
            "solved n=%d p=%g: dual %.10g achieved %.10g gap %.3g in %d iterations (%d repairs, %.1fs)",
            problem.n,
            problem.p,
            report.dual_value,
            report.achieved,
            report.gap,
            report.iterations,
            report.repair_iterations,
            report.seconds,
        )
        return report

    def _fill(
        self,
        report: SolveReport,
        ev: Evaluation,
        f_star: float,
        lower: float,
        iterations: int,
        repairs: int,
        start: float,
    ) -> None:
        residual, deterministic = self.kkt_and_determinism(ev.lam, ev.policy)
        report.dual = ev.lam.tolist()
        report.dual_value = f_star
        report.lower_bound = lower
        report.achieved = ev.objective
        report.gap = (f_star - ev.objective) / f_star if f_star else 0.0
        report.expectations = ev.expectations.tolist()
        report.slacks = ev.slacks.tolist()
        report.iterations = iterations
        report.repair_iterations = repairs
        report.kkt_residual = residual
        report.deterministic = deterministic
        report.policy = ev.policy
        report.seconds = time.perf_counter() - start

    def exact_lp_policy(self) -> tuple[PolicyTable, float]:
        """Optimal randomised policy from the occupancy-measure LP; horizons up to EXACT_LP_MAX_HORIZON"""
        problem = self.problem
        n, p = problem.n, problem.p
        if n > EXACT_LP_MAX_HORIZON:
            raise ValueError(f"the occupancy LP is limited to n <= {EXACT_LP_MAX_HORIZON}, got {n}")
        idx = statespace.indexer(n)
        d_lt, size = idx.nonterminal_size, idx.size
        cols = 2 * d_lt + idx.terminal_size

        # columns: action p block, action 1 - p block, terminal block; rows: every state
        flow = np.zeros((size, cols))
        flow[np.arange(d_lt), np.arange(d_lt)] = 1.0
        flow[np.arange(d_lt), d_lt + np.arange(d_lt)] = 1.0
        flow[d_lt + np.arange(idx.terminal_size), 2 * d_lt + np.arange(idx.terminal_size)] = 1.0

        specs = [problem.rewards, *self.reweighted]
        gains = np.zeros((len(specs), cols))
        for t in range(n):
            st = idx.stage_states(t)
            succ = idx.successor_indices(t)
            here = idx.stage_offset(t) + np.arange(len(st))
            nxt = idx.stage_offset(t + 1)
            p_C = problem.measure.stage_success_prob(st, statespace.Arm.C)
            p_D = problem.measure.stage_success_prob(st, statespace.Arm.D)
            for block, delta in ((0, p), (d_lt, 1.0 - p)):
                col = block + here
                flow[nxt + succ.c_success, col] -= delta * p_C
                flow[nxt + succ.c_failure, col] -= delta * (1.0 - p_C)
                flow[nxt + succ.d_success, col] -= (1.0 - delta) * p_D
                flow[nxt + succ.d_failure, col] -= (1.0 - delta) * (1.0 - p_D)
                for i, spec in enumerate(specs):
                    rho_C, rho_D = spec.stage(st)
                    gains[i, col] = delta * np.broadcast_to(rho_C, len(st)) + (1.0 - delta) * np.broadcast_to(
                        rho_D, len(st)
                    )
        for i, spec in enumerate(specs):
            gains[i, 2 * d_lt :] = spec.terminal_values(idx.terminal_size)

        b_eq = np.zeros(size)
        b_eq[0] = 1.0
        k = self.bounds.size
        sol = lp.solve(
            lp.LinearProgram(
                -gains[0], gains[1:] if k else None, self.bounds if k else None, A_eq=flow, b_eq=b_eq
            )
        )
        if sol.status == lp.LpStatus.infeasible:
            raise InfeasibleError("occupancy LP is infeasible")
        if not sol.success:
            raise InfeasibleError(f"occupancy LP is {sol.status}")

        mu_p, mu_q = sol.x[:d_lt], sol.x[d_lt : 2 * d_lt]
        total = mu_p + mu_q
        with np.errstate(invalid="ignore", divide="ignore"):
            probs = np.where(total > 0.0, (p * mu_p + (1.0 - p) * mu_q) / total, 0.5)
        probs = np.clip(probs, 1.0 - p, p)
        return PolicyTable.from_probabilities(n, p, probs), -sol.value


def is_deterministic(kernel: Measure, policy: PolicyTable) -> bool:
    """True when every state reachable under `kernel` takes one of the actions p or 1 - p"""
    for t, dist in mdp.stage_distributions(kernel, policy):
        if t == policy.n:
            break
        reachable = dist > 0.0
        if policy.codes:
            bad = policy.has_ties(t)
        else:
            values = policy.stage(t)
            bad = ((values != policy.p) & (values != 1.0 - policy.p)) | (values == 0.5)
        if np.any(bad & reachable):
            return False
    return True


def lagrangian(problem: CmdpProblem, lam: npt.ArrayLike) -> tuple[float, PolicyTable]:
    return CmdpSolver(problem).lagrangian(lam)


def subgradient(problem: CmdpProblem, lam: npt.ArrayLike, policy: PolicyTable) -> FloatArray:
    return CmdpSolver(problem).subgradient(lam, policy)


def cutting_plane(problem: CmdpProblem, options: SolverOptions | None = None) -> SolveReport:
    return CmdpSolver(problem, options).cutting_plane()


def repair_feasibility(
    problem: CmdpProblem, lam: npt.ArrayLike, phi: float = 0.01
) -> tuple[PolicyTable, FloatArray]:
    ev, _ = CmdpSolver(problem).repair_feasibility(lam, phi)
    return ev.policy, ev.lam


def kkt_and_determinism(problem: CmdpProblem, lam: npt.ArrayLike, policy: PolicyTable) -> tuple[float, bool]:
    return CmdpSolver(problem).kkt_and_determinism(lam, policy)


def exact_lp_policy(problem: CmdpProblem) -> tuple[PolicyTable, float]:
    return CmdpSolver(problem).exact_lp_policy()
