from __future__ import annotations

import math

import pytest

import trialapi.utils


@pytest.mark.parametrize(
    "start,stop,step,result",
    [
        (0.0, 1.0, 0.25, [0.0, 0.25, 0.5, 0.75, 1.0]),
        (0.0, 0.03, 0.01, [0.0, 0.01, 0.02, 0.03]),
        (0.5, 0.5, 0.1, [0.5]),
        (0.5, 0.4, 0.1, []),
    ],
)
def test_grid(start, stop, step, result):
    assert trialapi.utils.grid(start, stop, step) == result


def test_grid_hundredths():
    grid = trialapi.utils.grid(0.0, 1.0, 0.01)
    assert len(grid) == 101
    assert grid[7] == 0.07
    assert grid[-1] == 1.0


def test_grid_step():
    with pytest.raises(ValueError):
        trialapi.utils.grid(0.0, 1.0, 0.0)


@pytest.mark.parametrize("value", [-0.1, 1.1, math.nan])
def test_check_probability(value):
    with pytest.raises(ValueError):
        trialapi.utils.check_probability(value, "theta")


@pytest.mark.parametrize("values,length", [((1.0, 0.0), 2), ((1.0, 1.0, 1.0), 4), ((1.0, math.inf), 2)])
def test_check_pseudo_counts(values, length):
    with pytest.raises(ValueError):
        trialapi.utils.check_pseudo_counts(values, length, "prior")


@pytest.mark.parametrize(
    "value,result",
    [
        (0.1, "0.1"),
        (1 - 0.9, "0.09999999999999998"),
        (3.0, "3.0"),
        (1e-10, "1e-10"),
    ],
)
def test_format_float(value, result):
    assert trialapi.utils.format_float(value) == result


def test_format_row():
    assert trialapi.utils.format_row(["CRDP", 75, 0.5]) == ["CRDP", "75", "0.5"]


@pytest.mark.parametrize("value", ["cmdp-t", "CMDP-T", "Cmdp-T"])
def test_str_enum_casefold(value):
    from trialapi.designs import DesignTag

    assert DesignTag(value) is DesignTag.CMDP_T
    assert str(DesignTag(value)) == "CMDP-T"
