"""YAML design run configurations

A run configuration names one design, the operating-characteristic grid to evaluate it on, solver
overrides and where output goes. See README.md for the schema.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import pathlib
from collections.abc import Collection
from typing import Any

import yaml

from trialapi import utils
from trialapi.designs import DesignSpec, DesignTag
from trialapi.errors import ConfigError

logger = logging.getLogger(__name__)

DESIGN_KEYS = {
    "tag": "str",
    "n": "int",
    "p": "float",
    "prior": "counts4",
    "alpha": "float",
    "alpha_star": "float",
    "beta": "float",
    "null_prior": "counts2",
    "power_prior": "counts4",
    "xi": "float",
    "rectangle_prior": "counts4",
    "li_prior": "counts4",
}
SWEEP_KEYS = {"theta_C", "theta_D", "alpha"}
GRID_KEYS = {"start", "stop", "step"}
SOLVER_KEYS = {
    "eps_tol": "float",
    "phi": "float",
    "lambda_box": "float",
    "max_iterations": "int",
    "max_repair_iterations": "int",
}
OUTPUT_KEYS = {"dir", "name"}
TOP_KEYS = {"design", "sweep", "solver", "output"}


@dataclasses.dataclass(frozen=True)
class SweepSpec:
    theta_C: float = 0.5
    theta_D: tuple[float, ...] = dataclasses.field(default_factory=lambda: tuple(utils.grid(0.0, 1.0, 0.01)))
    alpha: float | None = None

    def __post_init__(self) -> None:
        utils.check_probability(self.theta_C, "theta_C")
        if self.alpha is not None:
            utils.check_probability(self.alpha, "alpha")
        for d in self.theta_D:
            utils.check_probability(d, "theta_D")


@dataclasses.dataclass
class RunConfig:
    design: DesignSpec
    sweep: SweepSpec = dataclasses.field(default_factory=SweepSpec)
    solver: dict[str, Any] = dataclasses.field(default_factory=dict)
    out: pathlib.Path | None = None
    name: str = ""
    source: pathlib.Path | None = None

    @property
    def stem(self) -> str:
        return self.name or self.design.name


def _lines(node: yaml.Node, prefix: str, out: dict[str, int]) -> dict[str, int]:
    """Map dotted key paths to 1-based line numbers"""
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            path = f"{prefix}.{key.value}" if prefix else str(key.value)
            out[path] = key.start_mark.line + 1
            _lines(value, path, out)
    return out


class _Reader:
    def __init__(self, lines: dict[str, int], source: str) -> None:
        self.lines = lines
        self.source = source

    def fail(self, path: str, message: str) -> ConfigError:
        line = self.lines.get(path)
        where = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{where}: {path}: {message}")

    def mapping(self, value: Any, path: str, allowed: Collection[str]) -> dict[str, Any]:
        if value is None:
            return {}
        if not isinstance(value, dict):
            raise self.fail(path, "expected a mapping")
        for key in value:
            if key not in allowed:
                dotted = f"{path}.{key}" if path else str(key)
                raise self.fail(dotted, f"unknown key, expected one of {', '.join(sorted(allowed))}")
        return value

    def number(self, value: Any, path: str, kind: str) -> float | int:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.fail(path, f"expected a number, got {value!r}")
        if kind == "int":
            if isinstance(value, float) and not value.is_integer():
                raise self.fail(path, f"expected an integer, got {value!r}")
            return int(value)
        if not math.isfinite(value):
            raise self.fail(path, f"expected a finite number, got {value!r}")
        return float(value)

    def probability(self, value: Any, path: str) -> float:
        v = self.number(value, path, "float")
        if not 0.0 <= v <= 1.0:
            raise self.fail(path, f"must lie in [0, 1], got {v!r}")
        return float(v)

    def counts(self, value: Any, path: str, length: int) -> tuple[float, ...]:
        if not isinstance(value, list) or len(value) != length:
            raise self.fail(path, f"expected a list of {length} pseudo-counts")
        counts = tuple(float(self.number(v, path, "float")) for v in value)
        if any(c <= 0.0 for c in counts):
            raise self.fail(path, "pseudo-counts must be positive")
        return counts

    def design(self, raw: Any) -> DesignSpec:
        if raw is None:
            raise self.fail("design", "a design section is required")
        section = self.mapping(raw, "design", DESIGN_KEYS.keys())
        for required in ("tag", "n"):
            if required not in section:
                raise self.fail("design", f"missing required key '{required}'")
        kwargs: dict[str, Any] = {}
        for key, value in section.items():
            path = f"design.{key}"
            kind = DESIGN_KEYS[key]
            if key == "tag":
                try:
                    kwargs[key] = DesignTag(str(value))
                except ValueError:
                    raise self.fail(path, f"unknown design {value!r}, expected one of {', '.join(DesignTag)}")
            elif kind.startswith("counts"):
                kwargs[key] = self.counts(value, path, int(kind[-1]))
            elif key in ("alpha", "alpha_star", "beta"):
                kwargs[key] = self.probability(value, path)
            elif key == "n":
                kwargs[key] = self.number(value, path, "int")
                if kwargs[key] < 1:
                    raise self.fail(path, "horizon must be at least 1")
            elif key == "p":
                kwargs[key] = self.number(value, path, "float")
                if not 0.5 <= kwargs[key] <= 1.0:
                    raise self.fail(path, f"randomisation bound must lie in [0.5, 1], got {kwargs[key]!r}")
            else:
                kwargs[key] = self.number(value, path, kind)
        try:
            return DesignSpec(**kwargs)
        except ValueError as e:
            raise self.fail("design", str(e)) from e

    def grid(self, value: Any, path: str) -> tuple[float, ...]:
        if isinstance(value, list):
            if not value:
                raise self.fail(path, "theta_D grid is empty")
            return tuple(self.probability(v, path) for v in value)
        section = self.mapping(value, path, GRID_KEYS)
        start = self.probability(section.get("start", 0.0), f"{path}.start")
        stop = self.probability(section.get("stop", 1.0), f"{path}.stop")
        step = self.number(section.get("step", 0.01), f"{path}.step", "float")
        if not step > 0:
            raise self.fail(f"{path}.step", "step must be positive")
        if stop < start:
            raise self.fail(path, "stop is below start")
        return tuple(utils.grid(start, stop, step))

    def sweep(self, raw: Any) -> SweepSpec:
        section = self.mapping(raw, "sweep", SWEEP_KEYS)
        kwargs: dict[str, Any] = {}
        if "theta_C" in section:
            kwargs["theta_C"] = self.probability(section["theta_C"], "sweep.theta_C")
        if "alpha" in section:
            kwargs["alpha"] = self.probability(section["alpha"], "sweep.alpha")
        if "theta_D" in section:
            kwargs["theta_D"] = self.grid(section["theta_D"], "sweep.theta_D")
        return SweepSpec(**kwargs)

    def solver(self, raw: Any) -> dict[str, Any]:
        section = self.mapping(raw, "solver", SOLVER_KEYS.keys())
        values = {key: self.number(value, f"solver.{key}", SOLVER_KEYS[key]) for key, value in section.items()}
        for key, value in values.items():
            if not value > 0 and key != "max_repair_iterations":
                raise self.fail(f"solver.{key}", "must be positive")
            if value < 0:
                raise self.fail(f"solver.{key}", "must not be negative")
        return values


def parse_run_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark else "?"
        raise ConfigError(f"{source}:{line}: {e.problem}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"{source}: {e}") from e

    reader = _Reader(_lines(node, "", {}) if node is not None else {}, source)
    top = reader.mapping(data, "", TOP_KEYS)
    output = reader.mapping(top.get("output"), "output", OUTPUT_KEYS)
    out = None
    if "dir" in output:
        out = pathlib.Path(str(output["dir"]))
    config = RunConfig(
        design=reader.design(top.get("design")),
        sweep=reader.sweep(top.get("sweep")),
        solver=reader.solver(top.get("solver")),
        out=out,
        name=str(output.get("name", "")),
    )
    logger.debug("loaded run configuration %s from %s", config.stem, source)
    return config


def load_run_config(path: pathlib.Path) -> RunConfig:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    config = parse_run_config(text, str(path))
    config.source = path
    return config
