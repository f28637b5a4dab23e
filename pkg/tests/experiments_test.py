from __future__ import annotations

import csv

import pytest

from cmdplib import experiments, policyfile
from cmdplib.experiments import Experiment
from trialapi import designs, oc
from trialapi.designs import DesignSpec, DesignTag
from trialapi.errors import ConfigError
from trialapi.terminal import TerminalTable


def test_registry_ids():
    ids = set(experiments.EXPERIMENTS)
    for app in ("app1", "app2"):
        for n in (75, 200):
            for suffix in ("", "-p100", "-tc25", "-tc75"):
                assert f"{app}-n{n}{suffix}" in ids
    assert {"app3-ess10", "app3-ess100"} <= ids
    assert len(ids) == 18


def test_app1_designs():
    experiment = experiments.get_experiment("app1-n75")
    assert [d.tag for d in experiment.designs] == [DesignTag.ER, DesignTag.DP, DesignTag.CRDP, DesignTag.CMDP_T]
    cmdp_t = experiment.designs[-1]
    assert (cmdp_t.alpha_star, cmdp_t.beta, cmdp_t.randomisation) == (0.05, 0.4, 0.95)
    assert experiment.theta_C == 0.5
    assert len(experiment.theta_D) == 101


def test_app2_n200_levels():
    e1, e2 = experiments.get_experiment("app2-n200").designs[2:]
    assert (e1.tag, e1.xi) == (DesignTag.CMDP_E1, 1.1)
    assert (e2.tag, e2.xi, e2.alpha_star, e2.beta) == (DesignTag.CMDP_E2, 1.05, 0.07, 0.753)


def test_deterministic_variants():
    experiment = experiments.get_experiment("app1-n200-tc25")
    assert experiment.theta_C == 0.25
    assert [d.randomisation for d in experiment.designs if d.tag == DesignTag.CMDP_T] == [0.95, 1.0]


def test_app3():
    experiment = experiments.get_experiment("app3-ess100")
    assert experiment.theta_C == 0.3
    assert [d.xi for d in experiment.designs] == [0.0, 0.9, 0.99, 1.0]
    assert all(d.prior == experiments.ESS100_PRIOR and d.n == 200 for d in experiment.designs)


def test_unknown_experiment():
    with pytest.raises(ConfigError) as e:
        experiments.get_experiment("app9")
    assert e.value.code == 2


def test_run_experiment(tmp_path):
    experiment = Experiment(
        "tiny",
        "two comparators",
        (DesignSpec(DesignTag.ER, 4), DesignSpec(DesignTag.DP, 4), DesignSpec(DesignTag.CMDP_R, 4, xi=0.5)),
        theta_D=(0.2, 0.8),
    )
    outcomes = experiments.run_experiment(experiment, tmp_path)
    assert [o.report.design for o in outcomes] == ["ER", "DP", "CMDP-R"]
    for o in outcomes:
        assert all(f.exists() for f in o.files)
    artifact = policyfile.read_policy(tmp_path / "tiny" / "DP-n4-p1.policy")
    assert artifact.policy == designs.dp_policy(4)[0]

    with open(tmp_path / "tiny" / "summary.csv", newline="") as f:
        summary = list(csv.DictReader(f))
    assert [row["design"] for row in summary] == ["ER", "DP", "CMDP-R"]
    assert summary[0]["xi"] == ""
    assert summary[2]["xi"] == "0.5"
    assert float(summary[0]["achieved"]) == pytest.approx(2.0)

    with open(tmp_path / "tiny" / "ER-n4-p0.5.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert [float(r["theta_D"]) for r in rows] == [0.2, 0.8]


def test_run_experiment_csv_identical_across_runs(tmp_path):
    experiment = Experiment(
        "tiny",
        "repeatable",
        (DesignSpec(DesignTag.DP, 4), DesignSpec(DesignTag.CMDP_R, 4, xi=0.5)),
        theta_D=(0.2, 0.8),
    )
    experiments.run_experiment(experiment, tmp_path / "first")
    experiments.run_experiment(experiment, tmp_path / "second")

    first = sorted((tmp_path / "first" / "tiny").glob("*.csv"))
    assert [f.name for f in first] == ["CMDP-R-n4-p0.95-xi0.5.csv", "DP-n4-p1.csv", "summary.csv"]
    for f in first:
        assert f.read_bytes() == (tmp_path / "second" / "tiny" / f.name).read_bytes()


def _certified(report, spec) -> bool:
    problem = designs.build_problem(spec)
    assert report.policy is not None
    expectations = designs.certify(problem, report.policy)
    return all(e <= b + 1e-9 for e, b in zip(expectations, problem.bounds))


@pytest.fixture(scope="module")
def testing_n75():
    spec = experiments.get_experiment("app1-n75").designs[3]
    return spec, designs.solve_design(spec)


@pytest.mark.slow
def test_crdp_n75():
    _, value = designs.crdp_policy(75)
    assert value == pytest.approx(45.3, abs=0.05)


@pytest.mark.slow
def test_crdp_n200():
    _, value = designs.crdp_policy(200)
    assert value == pytest.approx(122.58, abs=0.05)


@pytest.mark.slow
def test_cmdp_t_n75(testing_n75):
    spec, report = testing_n75
    assert (spec.alpha_star, spec.beta) == (0.05, 0.4)
    assert report.achieved == pytest.approx(46.9, rel=0.01)
    assert report.gap <= 1e-3
    assert _certified(report, spec)


@pytest.mark.slow
def test_cmdp_t_n200():
    spec = experiments.get_experiment("app1-n200").designs[3]
    assert (spec.alpha_star, spec.beta) == (0.07, 0.23)
    report = designs.solve_design(spec)
    assert report.achieved == pytest.approx(128, rel=0.01)
    assert report.gap <= 1e-3
    assert _certified(report, spec)


@pytest.mark.slow
@pytest.mark.parametrize("tag,xi,expected", [(DesignTag.CMDP_E1, 1.05, 41.3), (DesignTag.CMDP_E2, 1.0, 45.4)])
def test_cmdp_e_n75(tag, xi, expected):
    report = designs.solve_design(DesignSpec(tag, 75, xi=xi, alpha_star=0.05, beta=0.4))
    assert report.achieved == pytest.approx(expected, rel=0.01)


@pytest.mark.slow
@pytest.mark.parametrize("index,expected", [(2, 113), (3, 123)])
def test_cmdp_e_n200(index, expected):
    spec = experiments.get_experiment("app2-n200").designs[index]
    report = designs.solve_design(spec)
    assert report.achieved == pytest.approx(expected, rel=0.01)


@pytest.mark.slow
@pytest.mark.parametrize(
    "experiment_id,expected", [("app3-ess10", (118, 117, 117, 116)), ("app3-ess100", (117, 117, 117, 115))]
)
def test_cmdp_r_n200(experiment_id, expected):
    specs = experiments.get_experiment(experiment_id).designs
    reports = [designs.solve_design(spec) for spec in specs]
    assert [r.achieved for r in reports] == pytest.approx(expected, rel=0.01)
    assert abs(reports[0].gap) <= 1e-9
    assert abs(reports[-1].gap) <= 1e-9


@pytest.mark.slow
def test_value_ordering_n75(testing_n75):
    _, testing = testing_n75
    _, dp_value = designs.dp_policy(75)
    e2 = designs.solve_design(DesignSpec(DesignTag.CMDP_E2, 75, xi=1.0, alpha_star=0.05, beta=0.4))
    assert dp_value >= testing.dual_value - 1e-6
    assert testing.dual_value >= e2.dual_value - 1e-6


@pytest.mark.slow
def test_cmdp_t_benefit_between_crdp_and_dp(testing_n75):
    _, testing = testing_n75
    grid = experiments.THETA_D_GRID
    table = TerminalTable.build(75)
    crdp, _ = designs.crdp_policy(75)
    dp, _ = designs.dp_policy(75)
    curves = [oc.sweep(policy, 0.5, grid, table=table) for policy in (crdp, testing.policy, dp)]
    for low, mid, high in zip(*curves):
        lo, hi = sorted((low.patient_benefit, high.patient_benefit))
        assert lo - 1e-9 <= mid.patient_benefit <= hi + 1e-9


@pytest.mark.slow
def test_cmdp_r_benefit_ordering_flips():
    table = TerminalTable.build(200)
    specs = experiments.get_experiment("app3-ess10").designs
    policies = [designs.solve_design(specs[i]).policy for i in (0, -1)]
    below = [oc.evaluate(policy, 0.3, 0.1, table=table).patient_benefit for policy in policies]
    above = [oc.evaluate(policy, 0.3, 0.6, table=table).patient_benefit for policy in policies]
    assert (below[0] - below[1]) * (above[0] - above[1]) < 0
