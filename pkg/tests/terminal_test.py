from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from trialapi import statespace, terminal
from trialapi.errors import DegenerateMeasureError
from trialapi.measures import Rectangle
from trialapi.statespace import TrialState
from trialapi.terminal import TerminalTable


@pytest.mark.parametrize("n", [1, 4, 6, 8])
def test_fisher_pvalues_match_scipy(n):
    pvalues = terminal.fisher_pvalues(n)
    for i, x in enumerate(statespace.indexer(n).enumerate(n)):
        table = [[x.s_C, x.n_C - x.s_C], [x.s_D, x.n_D - x.s_D]]
        _, expected = stats.fisher_exact(table, alternative="two-sided")
        assert pvalues[i] == pytest.approx(expected, rel=1e-9), x


@pytest.mark.parametrize(
    "x,expected",
    [
        (TrialState(s_C=3, s_D=0, n_C=3, n_D=3), 0.1),
        (TrialState(s_C=0, s_D=0, n_C=0, n_D=6), 1.0),
        (TrialState(s_C=2, s_D=2, n_C=3, n_D=3), 1.0),
    ],
)
def test_fisher_pvalue(x, expected):
    assert terminal.fisher_pvalue(x) == pytest.approx(expected)


def test_reject():
    x = TrialState(s_C=3, s_D=0, n_C=3, n_D=3)
    assert terminal.reject(x, 0.11)
    assert not terminal.reject(x, 0.05)


@pytest.mark.parametrize(
    "x,expected",
    [
        (TrialState(s_C=1, s_D=2, n_C=2, n_D=3), 2 / 3 - 1 / 2),
        (TrialState(s_C=0, s_D=2, n_C=0, n_D=3), 3 / 5 - 1 / 2),
        (TrialState(s_C=0, s_D=2, n_C=0, n_D=2), 3 / 4 - 1 / 2),
        (TrialState(s_C=4, s_D=0, n_C=4, n_D=0), 1 / 2 - 5 / 6),
    ],
)
def test_effect_estimate(x, expected):
    assert terminal.effect_estimate(x) == pytest.approx(expected)


def test_posterior_mse_terminal_nonnegative():
    rect = Rectangle(0.25, 0.5, 0.5, 0.75)
    for x in statespace.indexer(5).enumerate(5):
        assert terminal.posterior_mse_terminal(x, rect) >= 0.0


def test_posterior_mse_terminal_empty_data():
    # uniform prior, no data: estimate 0 on the unit square, MSE = E[(theta_D - theta_C)^2] = 1/6
    assert terminal.posterior_mse_terminal(TrialState(), Rectangle()) == pytest.approx(1 / 6)


def test_posterior_mse_terminal_one_control_success():
    # estimate -1/6 equals the posterior mean, leaving Var Beta(2, 1) + Var Beta(1, 1)
    x = TrialState(s_C=1, s_D=0, n_C=1, n_D=0)
    assert terminal.posterior_mse_terminal(x, Rectangle()) == pytest.approx(5 / 36, rel=1e-10)


def test_posterior_mse_degenerate():
    rect = Rectangle(0.0, 0.01, 0.0, 1.0)
    with pytest.raises(DegenerateMeasureError):
        terminal.posterior_mse_terminal(TrialState(s_C=200, s_D=0, n_C=200, n_D=0), rect, (1.0, 1.0, 1.0, 1.0))


def test_terminal_table(table6):
    assert table6.pvalues.shape == (statespace.stage_size(6),)
    assert not table6.pvalues.flags.writeable
    rejections = table6.rejections(0.1)
    assert set(np.unique(rejections)) <= {0.0, 1.0}
    assert np.array_equal(rejections, (table6.pvalues <= 0.1).astype(float))


def test_terminal_table_posterior_mse_is_memoised(table6):
    rect = Rectangle(0.5, 0.75, 0.0, 0.25)
    first = table6.posterior_mse(rect)
    assert table6.posterior_mse(rect) is first
    assert np.all(np.isfinite(first))
    assert np.all(first >= 0.0)


def test_terminal_table_shape_check():
    with pytest.raises(ValueError):
        TerminalTable(3, np.zeros(5), np.zeros(5))
