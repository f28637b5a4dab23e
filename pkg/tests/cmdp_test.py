from __future__ import annotations

import json

import numpy as np
import pytest

from cmdplib.selftest import lp_instances
from trialapi import cmdp, designs, mdp
from trialapi.cmdp import CmdpProblem, CmdpSolver, ConstraintSpec, SolverOptions
from trialapi.errors import InfeasibleError, IterationLimitError
from trialapi.measures import IndependentBeta, PointMass, PooledNull
from trialapi.mdp import PolicyTable, RewardSpec
from trialapi.terminal import TerminalTable


def unconstrained(n: int = 4, p: float = 1.0) -> CmdpProblem:
    measure = IndependentBeta()
    return CmdpProblem(n, p, measure, designs.posterior_mean_rewards(measure))


def impossible(n: int = 4) -> CmdpProblem:
    measure = IndependentBeta()
    reject = RewardSpec(terminal=TerminalTable.build(n).rejections(0.1))
    constraints = [ConstraintSpec(measure, reject, -1.0)]
    return CmdpProblem(n, 0.95, measure, designs.posterior_mean_rewards(measure), constraints)


def test_unconstrained_cutting_plane():
    report = cmdp.cutting_plane(unconstrained())
    _, value = designs.dp_policy(4)
    assert report.dual == []
    assert report.dual_value == pytest.approx(value)
    assert report.achieved == pytest.approx(value)
    assert report.gap == pytest.approx(0.0, abs=1e-12)
    assert report.iterations == 1


def test_lagrangian_at_zero_is_unconstrained_value():
    problem = lp_instances()[0]
    value, _ = cmdp.lagrangian(problem, np.zeros(2))
    dp_value, _ = mdp.backward_induction(problem.measure, problem.rewards, problem.p, problem.n)
    assert value == pytest.approx(dp_value)


def test_subgradient_is_slack():
    problem = lp_instances()[0]
    solver = CmdpSolver(problem)
    _, policy = solver.lagrangian([0.5, 0.5])
    g = cmdp.subgradient(problem, [0.5, 0.5], policy)
    expected = [c.bound - mdp.expected_total(c.measure, policy, c.rewards) for c in problem.constraints]
    assert g == pytest.approx(expected, abs=1e-10)


def test_lagrangian_upper_bounds_feasible_values():
    problem = lp_instances()[1]
    report = cmdp.cutting_plane(problem)
    for lam in ([0.0], [0.5], [2.0], [10.0]):
        value, _ = cmdp.lagrangian(problem, lam)
        assert value >= report.achieved - 1e-9


def test_lagrangian_is_convex():
    problem = lp_instances()[0]
    a, b = np.array([0.0, 3.0]), np.array([4.0, 0.5])
    la, _ = cmdp.lagrangian(problem, a)
    lb, _ = cmdp.lagrangian(problem, b)
    for t in np.linspace(0.0, 1.0, 11):
        value, _ = cmdp.lagrangian(problem, t * a + (1 - t) * b)
        assert value <= t * la + (1 - t) * lb + 1e-9


@pytest.mark.parametrize("index", range(3))
def test_cutting_plane_bounds_are_monotone(index):
    report = cmdp.cutting_plane(lp_instances()[index], SolverOptions(eps_tol=1e-6))
    lower = [h[0] for h in report.history]
    f_star = [h[1] for h in report.history]
    assert len(report.history) == report.iterations
    assert all(b >= a - 1e-9 for a, b in zip(lower, lower[1:]))
    assert all(b <= a for a, b in zip(f_star, f_star[1:]))
    assert all(lo <= f + 1e-9 for lo, f in report.history)
    # stops at the first iteration whose absolute gap is within eps_tol
    assert f_star[-1] - lower[-1] <= 1e-6
    assert all(f - lo > 1e-6 for lo, f in report.history[:-1])
    assert report.dual_value == f_star[-1]


@pytest.mark.parametrize("index", range(3))
def test_cutting_plane_matches_occupancy_lp(index):
    problem = lp_instances()[index]
    report = cmdp.cutting_plane(problem, SolverOptions(eps_tol=1e-10))
    policy, value = cmdp.exact_lp_policy(problem)
    assert report.dual_value == pytest.approx(value, abs=1e-6)
    assert report.achieved <= report.dual_value + 1e-9
    assert report.gap >= -1e-9
    assert mdp.expected_total(problem.measure, policy, problem.rewards) == pytest.approx(value, abs=1e-8)


@pytest.mark.parametrize("index", range(3))
def test_repaired_policy_is_feasible(index):
    problem = lp_instances()[index]
    report = cmdp.cutting_plane(problem)
    assert report.policy is not None
    for expectation, bound in zip(designs.certify(problem, report.policy), problem.bounds):
        assert expectation <= bound + 1e-9
    assert all(s >= -1e-9 for s in report.slacks)
    assert report.kkt_residual >= 0.0


def test_repair_feasibility_from_zero():
    problem = lp_instances()[0]
    policy, lam = cmdp.repair_feasibility(problem, np.zeros(2), phi=0.05)
    for expectation, bound in zip(designs.certify(problem, policy), problem.bounds):
        assert expectation <= bound + 1e-9
    assert np.all(lam >= 0.0)


def test_infeasible_problem():
    with pytest.raises(InfeasibleError) as e:
        cmdp.cutting_plane(impossible(), SolverOptions(max_repair_iterations=200))
    assert e.value.code == 3


def test_occupancy_lp_infeasible():
    with pytest.raises(InfeasibleError):
        cmdp.exact_lp_policy(impossible())


def test_iteration_limit_keeps_best_report():
    with pytest.raises(IterationLimitError) as e:
        cmdp.cutting_plane(lp_instances()[0], SolverOptions(max_iterations=1))
    assert e.value.code == 4
    assert e.value.report.status == "iteration-limit"
    assert e.value.report.policy is not None


def test_exact_lp_horizon_limit():
    with pytest.raises(ValueError):
        cmdp.exact_lp_policy(unconstrained(n=cmdp.EXACT_LP_MAX_HORIZON + 1))


def test_multiplier_validation():
    problem = lp_instances()[0]
    with pytest.raises(ValueError):
        cmdp.lagrangian(problem, [1.0])
    with pytest.raises(ValueError):
        cmdp.lagrangian(problem, [1.0, -1.0])


def test_kkt_and_determinism():
    problem = unconstrained(p=1.0)
    residual, deterministic = cmdp.kkt_and_determinism(problem, [], PolicyTable.constant(4, 1.0))
    assert residual == 0.0
    assert deterministic
    _, deterministic = cmdp.kkt_and_determinism(problem, [], PolicyTable.constant(4))
    assert not deterministic


def test_reweight_same_measure_is_identity():
    measure = IndependentBeta()
    rewards = designs.posterior_mean_rewards(measure)
    problem = CmdpProblem(3, 0.9, measure, rewards, [ConstraintSpec(IndependentBeta(), rewards, 1.0)])
    assert cmdp.reweight_constraint(problem, 0) is rewards


@pytest.mark.parametrize(
    "build",
    [
        lambda: unconstrained(p=0.4),
        lambda: CmdpProblem(
            3, 0.9, IndependentBeta(), RewardSpec(), [ConstraintSpec(IndependentBeta(), RewardSpec(), np.inf)]
        ),
        lambda: CmdpProblem(
            3, 0.9, PointMass(0.0, 0.5), RewardSpec(), [ConstraintSpec(PooledNull(), RewardSpec(), 1.0)]
        ),
        lambda: SolverOptions(eps_tol=0.0),
        lambda: SolverOptions(phi=-0.1),
        lambda: SolverOptions(max_iterations=0),
    ],
)
def test_validation(build):
    with pytest.raises(ValueError):
        build()


def test_report_to_dict_is_json():
    report = cmdp.cutting_plane(lp_instances()[0])
    data = report.to_dict()
    assert "policy" not in data
    assert json.loads(json.dumps(data))["constraint_names"] == ["type-I", "power"]
