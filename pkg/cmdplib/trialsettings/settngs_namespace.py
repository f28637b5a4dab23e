from __future__ import annotations

import pathlib
import typing

import settngs

import cmdplib.resulttypes
import cmdplib.trialsettings.types


class SettngsNS(settngs.TypedNS):
    Commands__version: bool
    Commands__command: cmdplib.resulttypes.Action
    Commands__target: str

    Runtime_Options__settings_dir: cmdplib.trialsettings.types.TrialPaths
    Runtime_Options__verbose: int
    Runtime_Options__config: pathlib.Path | None
    Runtime_Options__out: pathlib.Path
    Runtime_Options__policy: pathlib.Path | None
    Runtime_Options__seedless: bool
    Runtime_Options__json: bool

    Solver__eps_tol: float
    Solver__phi: float
    Solver__lambda_box: float
    Solver__max_iterations: int
    Solver__max_repair_iterations: int

    Evaluation__threads: int
    Evaluation__alpha: float
    Evaluation__terminal_cache: bool


class Commands(typing.TypedDict):
    version: bool
    command: cmdplib.resulttypes.Action
    target: str


class Runtime_Options(typing.TypedDict):
    settings_dir: cmdplib.trialsettings.types.TrialPaths
    verbose: int
    config: pathlib.Path | None
    out: pathlib.Path
    policy: pathlib.Path | None
    seedless: bool
    json: bool


class Solver(typing.TypedDict):
    eps_tol: float
    phi: float
    lambda_box: float
    max_iterations: int
    max_repair_iterations: int


class Evaluation(typing.TypedDict):
    threads: int
    alpha: float
    terminal_cache: bool


SettngsDict = typing.TypedDict(
    "SettngsDict",
    {
        "Commands": Commands,
        "Runtime Options": Runtime_Options,
        "Solver": Solver,
        "Evaluation": Evaluation,
    },
)
