"""Registered reproduction runs

Each id fixes the designs, priors and constraint levels of one application study. Running an experiment
solves every design, evaluates it over theta_D in {0.00, 0.01, ..., 1.00} and writes per design a report,
a policy artifact and an operating-characteristic CSV, plus a summary.csv across designs.
"""

from __future__ import annotations

import dataclasses
import logging
import pathlib
from collections.abc import Callable

from cmdplib import policyfile, reports
from cmdplib.policyfile import PolicyArtifact
from trialapi import oc, utils
from trialapi.cmdp import SolveReport, SolverOptions
from trialapi.designs import DesignSpec, DesignTag, solve_design
from trialapi.errors import ConfigError
from trialapi.terminal import TerminalTable

logger = logging.getLogger(__name__)

THETA_D_GRID = tuple(utils.grid(0.0, 1.0, 0.01))

ESS10_PRIOR = (3.0, 7.0, 6.0, 4.0)
ESS100_PRIOR = (30.0, 70.0, 60.0, 40.0)

_XI_DESIGNS = (DesignTag.CMDP_E1, DesignTag.CMDP_E2, DesignTag.CMDP_R)


@dataclasses.dataclass(frozen=True)
class Experiment:
    id: str
    description: str
    designs: tuple[DesignSpec, ...]
    theta_C: float = 0.5
    alpha: float = 0.1
    theta_D: tuple[float, ...] = THETA_D_GRID


def _testing(n: int) -> dict[str, float]:
    if n == 75:
        return {"alpha_star": 0.05, "beta": 0.4}
    return {"alpha_star": 0.07, "beta": 0.23}


def _estimation(n: int) -> tuple[dict[str, float], float, float]:
    """Testing levels and the (CMDP-E1, CMDP-E2) inflation factors"""
    if n == 75:
        return {"alpha_star": 0.05, "beta": 0.4}, 1.05, 1.0
    return {"alpha_star": 0.07, "beta": 0.753}, 1.1, 1.05


def _app1(n: int) -> list[DesignSpec]:
    return [
        DesignSpec(DesignTag.ER, n),
        DesignSpec(DesignTag.DP, n),
        DesignSpec(DesignTag.CRDP, n),
        DesignSpec(DesignTag.CMDP_T, n, **_testing(n)),
    ]


def _app2(n: int) -> list[DesignSpec]:
    levels, xi_1, xi_2 = _estimation(n)
    return [
        DesignSpec(DesignTag.ER, n),
        DesignSpec(DesignTag.CRDP, n),
        DesignSpec(DesignTag.CMDP_E1, n, xi=xi_1, **levels),
        DesignSpec(DesignTag.CMDP_E2, n, xi=xi_2, **levels),
    ]


def _app3(prior: tuple[float, float, float, float], xis: tuple[float, ...]) -> list[DesignSpec]:
    return [DesignSpec(DesignTag.CMDP_R, 200, prior=prior, xi=xi) for xi in xis]


def _with_deterministic(designs: list[DesignSpec]) -> list[DesignSpec]:
    """Add the p = 1 version of every constrained design"""
    return designs + [dataclasses.replace(d, p=1.0) for d in designs if d.tag.constrained]


def _build_registry() -> dict[str, Experiment]:
    registry: dict[str, Experiment] = {}
    studies: dict[str, tuple[str, Callable[[int], list[DesignSpec]]]] = {
        "app1": ("type I error and power constraints", _app1),
        "app2": ("estimation quality constraints", _app2),
    }
    for app, (description, designs) in studies.items():
        for n in (75, 200):
            base = f"{app}-n{n}"
            registry[base] = Experiment(base, f"{description}, n={n}", tuple(designs(n)))
            registry[f"{base}-p100"] = Experiment(
                f"{base}-p100", f"{description}, n={n}, with p=1.00", tuple(_with_deterministic(designs(n)))
            )
            for theta_C in (0.25, 0.75):
                key = f"{base}-tc{round(theta_C * 100)}"
                registry[key] = Experiment(
                    key,
                    f"{description}, n={n}, theta_C={theta_C}",
                    tuple(_with_deterministic(designs(n))),
                    theta_C=theta_C,
                )
    registry["app3-ess10"] = Experiment(
        "app3-ess10",
        "robustness to prior misspecification, prior effective sample size 10",
        tuple(_app3(ESS10_PRIOR, (0.0, 0.99, 0.999, 1.0))),
        theta_C=0.3,
    )
    registry["app3-ess100"] = Experiment(
        "app3-ess100",
        "robustness to prior misspecification, prior effective sample size 100",
        tuple(_app3(ESS100_PRIOR, (0.0, 0.9, 0.99, 1.0))),
        theta_C=0.3,
    )
    return registry


EXPERIMENTS = _build_registry()


def get_experiment(experiment_id: str) -> Experiment:
    try:
        return EXPERIMENTS[experiment_id]
    except KeyError:
        raise ConfigError(f"unknown experiment {experiment_id!r}, expected one of {', '.join(EXPERIMENTS)}")


@dataclasses.dataclass
class DesignOutcome:
    spec: DesignSpec
    report: SolveReport
    files: list[pathlib.Path]


def run_design(
    spec: DesignSpec,
    out: pathlib.Path,
    *,
    theta_C: float,
    theta_D: tuple[float, ...],
    alpha: float,
    options: SolverOptions | None = None,
    table: TerminalTable | None = None,
    threads: int = 1,
    stem: str = "",
) -> DesignOutcome:
    """Solve one design and write its report, policy artifact and operating-characteristic curve"""
    table = table or TerminalTable.build(spec.n)
    report = solve_design(spec, options, table)
    assert report.policy is not None
    stem = stem or spec.name
    files = [
        reports.write_report(out / f"{stem}.json", report, name=stem, xi=spec.xi),
        policyfile.write_policy(out / f"{stem}.policy", PolicyArtifact(report.policy, str(spec.tag), spec.prior)),
    ]
    rows = oc.sweep(report.policy, theta_C, theta_D, alpha, threads=threads, table=table)
    files.append(reports.write_oc_csv(out / f"{stem}.csv", rows))
    logger.info("%s: achieved %.6g, gap %.3g", stem, report.achieved, report.gap)
    return DesignOutcome(spec, report, files)


def run_experiment(
    experiment: Experiment,
    out: pathlib.Path,
    options: SolverOptions | None = None,
    tables: Callable[[int], TerminalTable] = TerminalTable.build,
    threads: int = 1,
) -> list[DesignOutcome]:
    target = out / experiment.id
    logger.info("running %s (%s) into %s", experiment.id, experiment.description, target)
    outcomes = []
    for spec in experiment.designs:
        outcomes.append(
            run_design(
                spec,
                target,
                theta_C=experiment.theta_C,
                theta_D=experiment.theta_D,
                alpha=experiment.alpha,
                options=options,
                table=tables(spec.n),
                threads=threads,
            )
        )
    summary = [
        reports.summary_row(o.report, o.spec.xi if o.spec.tag in _XI_DESIGNS else None) for o in outcomes
    ]
    reports.write_csv(target / "summary.csv", reports.SUMMARY_HEADER, summary)
    return outcomes
