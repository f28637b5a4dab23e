"""Exceptions raised while building and solving constrained trial designs"""

from __future__ import annotations

from typing import Any


class CmdpError(Exception):
    """Base error; `code` doubles as the command line exit status"""

    codes = {
        2: "Configuration Error",
        3: "Infeasible",
        4: "Numeric Failure",
    }
    code = 4

    def __init__(self, desc: str = "", code: int | None = None, report: Any = None) -> None:
        super().__init__(desc)
        self.desc = desc
        if code is not None:
            self.code = code
        self.report = report

    def __str__(self) -> str:
        return f"{self.codes.get(self.code, 'Unknown')}: {self.desc}"


class ConfigError(CmdpError):
    code = 2


class InfeasibleError(CmdpError):
    code = 3


class NumericError(CmdpError):
    code = 4


class IterationLimitError(NumericError):
    """Raised when the cutting plane does not close its gap; `report` holds the best solution so far"""


class SingularBasisError(NumericError):
    pass


class DegenerateMeasureError(NumericError):
    """A truncated Beta law has (numerically) no mass on its rectangle"""
