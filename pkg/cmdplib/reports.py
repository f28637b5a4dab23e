"""Writers for solve reports, operating-characteristic CSVs and experiment summaries

CSV files use '.' decimals, LF line endings and a header row, so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import json
import logging
import pathlib
from collections.abc import Collection, Iterable, Sequence
from typing import Any

import numpy as np

from trialapi import utils
from trialapi.cmdp import SolveReport
from trialapi.oc import CSV_HEADER, OcRow

logger = logging.getLogger(__name__)

SUMMARY_HEADER = ("design", "n", "p", "xi", "achieved", "dual_value", "gap")


class OutputEncoder(json.JSONEncoder):
    def default(self, obj: Any) -> Any:
        if isinstance(obj, pathlib.Path):
            return str(obj)
        if isinstance(obj, np.generic):
            return obj.item()
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if not isinstance(obj, str) and isinstance(obj, Collection):
            return list(obj)

        # Let the base class default method raise the TypeError
        return json.JSONEncoder.default(self, obj)


def report_json(report: SolveReport, **extra: Any) -> str:
    return json.dumps({**report.to_dict(), **extra}, cls=OutputEncoder, indent=2)


def write_report(path: pathlib.Path, report: SolveReport, **extra: Any) -> pathlib.Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report_json(report, **extra) + "\n", encoding="utf-8", newline="\n")
    return path


def write_csv(path: pathlib.Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> pathlib.Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_oc_csv(path: pathlib.Path, rows: Iterable[OcRow]) -> pathlib.Path:
    return write_csv(path, CSV_HEADER, (row.as_row() for row in rows))


def summary_row(report: SolveReport, xi: float | None = None) -> list[str]:
    return utils.format_row(
        (
            report.design,
            report.n,
            float(report.p),
            "" if xi is None else float(xi),
            float(report.achieved),
            float(report.dual_value),
            float(report.gap),
        )
    )
