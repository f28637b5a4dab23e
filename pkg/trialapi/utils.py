"""Some generic utilities"""

from __future__ import annotations

import logging
import math
import sys
from collections.abc import Iterable, Sequence
from enum import Enum
from typing import Any

logger = logging.getLogger(__name__)

if sys.version_info < (3, 11):

    class StrEnum(str, Enum):
        """
        Enum where members are also (and must be) strings
        """

        def __new__(cls, *values: Any) -> Any:
            "values must already be of type `str`"
            if len(values) != 1 or not isinstance(values[0], str):
                raise TypeError(f"{values!r} is not a single string")
            member = str.__new__(cls, values[0])
            member._value_ = values[0]
            return member

        @staticmethod
        def _generate_next_value_(name: str, start: int, count: int, last_values: Any) -> str:
            """
            Return the lower-cased version of the member name.
            """
            return name.lower()

        @classmethod
        def _missing_(cls, value: Any) -> str | None:
            if not isinstance(value, str):
                return None
            if not hasattr(cls, "_lower_members"):
                cls._lower_members = {x.casefold(): x for x in cls}  # type: ignore[attr-defined]
            return cls._lower_members.get(value.casefold(), None)  # type: ignore[attr-defined]

        def __str__(self) -> str:
            return self.value

else:
    from enum import StrEnum as s

    class StrEnum(s):
        @classmethod
        def _missing_(cls, value: Any) -> str | None:
            if not isinstance(value, str):
                return None
            if not hasattr(cls, "_lower_members"):
                cls._lower_members = {x.casefold(): x for x in cls}  # type: ignore[attr-defined]
            return cls._lower_members.get(value.casefold(), None)  # type: ignore[attr-defined]


def check_probability(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise ValueError(f"{name} must be a probability in [0, 1], got {value!r}")
    return value


def check_pseudo_counts(values: Sequence[float], length: int, name: str) -> tuple[float, ...]:
    counts = tuple(float(v) for v in values)
    if len(counts) != length:
        raise ValueError(f"{name} needs {length} pseudo-counts, got {len(counts)}")
    for v in counts:
        if not v > 0.0 or math.isinf(v):
            raise ValueError(f"{name} pseudo-counts must be positive and finite, got {counts!r}")
    return counts


def grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive, evenly spaced grid rounded to 12 decimals so 0.01 steps print cleanly."""
    if step <= 0:
        raise ValueError("grid step must be positive")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(max(count, 0))]


def format_float(value: float) -> str:
    """Locale independent, round-trippable float text."""
    return repr(float(value))


def format_row(values: Iterable[Any]) -> list[str]:
    return [format_float(v) if isinstance(v, float) else str(v) for v in values]
