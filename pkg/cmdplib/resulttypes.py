from __future__ import annotations

import dataclasses
from enum import auto

from trialapi import utils


class Action(utils.StrEnum):
    solve = auto()
    evaluate = auto()
    sweep = auto()
    reproduce = auto()
    selftest = auto()
    save_config = auto()


class Status(utils.StrEnum):
    success = auto()
    config_error = auto()
    infeasible = auto()
    numeric_failure = auto()

    @property
    def exit_code(self) -> int:
        return {Status.success: 0, Status.config_error: 2, Status.infeasible: 3, Status.numeric_failure: 4}[self]

    @classmethod
    def from_code(cls, code: int) -> Status:
        return {0: cls.success, 2: cls.config_error, 3: cls.infeasible}.get(code, cls.numeric_failure)


@dataclasses.dataclass
class Result:
    """Outcome of one command, as printed with --json"""

    action: Action
    status: Status
    target: str = ""
    design: str = ""
    files: list[str] = dataclasses.field(default_factory=list)
    message: str = ""

    def __str__(self) -> str:
        text = f"{self.action} {self.design or self.target}: {self.status}"
        if self.message:
            text += f" ({self.message})"
        return text
