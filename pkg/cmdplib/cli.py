"""cmdptrials command line functions"""

from __future__ import annotations

import dataclasses
import json
import logging
import pathlib
import sys
from typing import Any, TextIO

from cmdplib import experiments, policyfile, reports, selftest
from cmdplib.ctversion import version
from cmdplib.policyfile import PolicyArtifact
from cmdplib.resulttypes import Action, Result, Status
from cmdplib.tablecache import TerminalTableCache
from cmdplib.trialsettings import RunConfig, SweepSpec, load_run_config, solver_options, trial_ns
from trialapi import oc
from trialapi.cmdp import SolveReport, SolverOptions
from trialapi.designs import solve_design
from trialapi.errors import CmdpError, ConfigError
from trialapi.terminal import TerminalTable

logger = logging.getLogger(__name__)


class CLI:
    def __init__(self, config: trial_ns) -> None:
        self.config = config
        self.output_file = sys.stdout
        if config.Runtime_Options__json:
            self.output_file = sys.stderr
        self.cache: TerminalTableCache | None = None
        if config.Evaluation__terminal_cache:
            self.cache = TerminalTableCache(config.Runtime_Options__settings_dir.user_cache_dir / "terminal", version)

    def output(self, *args: Any, file: TextIO | None = None, **kwargs: Any) -> None:
        if file is None:
            file = self.output_file
        if args and isinstance(args[0], str):
            logger.info(args[0].strip("\n"), *args[1:])
        if self.config.Runtime_Options__verbose > 0:
            return
        print(*args, **kwargs, file=file)

    def table(self, n: int) -> TerminalTable:
        if self.cache is not None:
            return self.cache.get(n)
        return TerminalTable.build(n)

    @property
    def threads(self) -> int:
        return self.config.Evaluation__threads

    def run(self) -> int:
        command = self.config.Commands__command
        if self.config.Runtime_Options__seedless:
            logger.debug("--seedless given; every computation is deterministic")
        handlers = {
            Action.solve: self.solve,
            Action.evaluate: self.evaluate,
            Action.sweep: self.sweep,
            Action.reproduce: self.reproduce,
            Action.selftest: self.selftest,
        }
        try:
            result = handlers[command]()
        except CmdpError as e:
            logger.error("%s", e)
            result = Result(command, Status.from_code(e.code), self.config.Commands__target, message=e.desc)
        except (ValueError, IndexError) as e:
            logger.error("Configuration Error: %s", e)
            result = Result(command, Status.config_error, self.config.Commands__target, message=str(e))

        if self.config.Runtime_Options__json:
            print(json.dumps(dataclasses.asdict(result), cls=reports.OutputEncoder, indent=2))
        elif result.status != Status.success:
            self.output(str(result), file=sys.stderr)
        sys.stdout.flush()
        sys.stderr.flush()
        return result.status.exit_code

    def load_config(self) -> tuple[RunConfig, SolverOptions, pathlib.Path]:
        """Everything a solve needs, validated before any computation or output"""
        path = self.config.Runtime_Options__config
        if path is None:
            raise ConfigError("a design configuration is required (--config)")
        run_config = load_run_config(path)
        try:
            options = solver_options(self.config, run_config.solver)
        except ValueError as e:
            raise ConfigError(f"{path}: solver: {e}") from e
        return run_config, options, run_config.out or self.config.Runtime_Options__out

    def _solve(self, run_config: RunConfig, options: SolverOptions, out: pathlib.Path) -> tuple[SolveReport, list[str]]:
        spec = run_config.design
        stem = run_config.stem
        try:
            report = solve_design(spec, options, self.table(spec.n) if spec.tag.constrained else None)
        except CmdpError as e:
            if isinstance(e.report, SolveReport):
                reports.write_report(out / f"{stem}.json", e.report, name=stem, xi=spec.xi)
            raise
        assert report.policy is not None
        files = [
            reports.write_report(out / f"{stem}.json", report, name=stem, xi=spec.xi),
            policyfile.write_policy(out / f"{stem}.policy", PolicyArtifact(report.policy, str(spec.tag), spec.prior)),
        ]
        self.output(
            f"{stem}: achieved {report.achieved:.6g}, dual value {report.dual_value:.6g}, gap {report.gap:.3g}, "
            + f"{report.seconds:.1f}s"
        )
        if report.box_active:
            self.output(f"{stem}: multiplier box was active, consider raising --lambda-box", file=sys.stderr)
        return report, [str(f) for f in files]

    def _sweep_rows(self, artifact: PolicyArtifact, sweep: SweepSpec) -> list[oc.OcRow]:
        alpha = sweep.alpha if sweep.alpha is not None else self.config.Evaluation__alpha
        table = self.table(artifact.n)
        return oc.sweep(artifact.policy, sweep.theta_C, sweep.theta_D, alpha, threads=self.threads, table=table)

    def solve(self) -> Result:
        run_config, options, out = self.load_config()
        _, files = self._solve(run_config, options, out)
        return Result(Action.solve, Status.success, design=run_config.stem, files=files)

    def evaluate(self) -> Result:
        path = self.config.Runtime_Options__policy
        if path is None:
            raise ConfigError("a policy artifact is required (--policy)")
        artifact = policyfile.read_policy(path)
        sweep = SweepSpec()
        out = self.config.Runtime_Options__out
        if self.config.Runtime_Options__config is not None:
            run_config, _, out = self.load_config()
            if run_config.design.n != artifact.n:
                raise ConfigError(f"policy {path} is for n={artifact.n}, the configuration for n={run_config.design.n}")
            sweep = run_config.sweep

        rows = self._sweep_rows(artifact, sweep)
        csv_file = reports.write_oc_csv(out / f"{path.stem}.csv", rows)
        self.output(f"{path.stem}: {len(rows)} operating characteristic rows written to {csv_file}")
        return Result(Action.evaluate, Status.success, design=artifact.design, files=[str(csv_file)])

    def sweep(self) -> Result:
        run_config, options, out = self.load_config()
        report, files = self._solve(run_config, options, out)
        assert report.policy is not None
        artifact = PolicyArtifact(report.policy, str(run_config.design.tag), run_config.design.prior)
        rows = self._sweep_rows(artifact, run_config.sweep)
        files.append(str(reports.write_oc_csv(out / f"{run_config.stem}.csv", rows)))
        return Result(Action.sweep, Status.success, design=run_config.stem, files=files)

    def reproduce(self) -> Result:
        target = self.config.Commands__target
        if target == "list":
            for experiment in experiments.EXPERIMENTS.values():
                self.output(f"{experiment.id:<20} {experiment.description}", file=sys.stdout)
            return Result(Action.reproduce, Status.success, target)

        experiment = experiments.get_experiment(target)
        options = solver_options(self.config)
        outcomes = experiments.run_experiment(
            experiment, self.config.Runtime_Options__out, options, self.table, self.threads
        )
        files = [str(f) for o in outcomes for f in o.files]
        for o in outcomes:
            self.output(f"{o.spec.name}: achieved {o.report.achieved:.6g}, gap {o.report.gap:.3g}")
        return Result(Action.reproduce, Status.success, target, files=files)

    def selftest(self) -> Result:
        results = selftest.run_selftest()
        for r in results:
            self.output(str(r), file=sys.stdout)
        failed = [r.name for r in results if not r.passed]
        if failed:
            return Result(Action.selftest, Status.numeric_failure, message=f"failed: {', '.join(failed)}")
        return Result(Action.selftest, Status.success)
