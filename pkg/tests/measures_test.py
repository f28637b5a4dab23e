from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import special

from trialapi import betafunc, statespace
from trialapi.errors import DegenerateMeasureError
from trialapi.measures import (
    IndependentBeta,
    PointMass,
    PooledNull,
    Rectangle,
    TruncatedIndependentBeta,
    log_marginal_likelihood,
    predictive_success_prob,
)
from trialapi.statespace import Arm, StageStates, TrialState

beta_args = [
    (1.0, 1.0, 0.3),
    (2.5, 0.5, 0.9),
    (0.5, 3.0, 0.01),
    (30.0, 70.0, 0.31),
    (60.0, 40.0, 0.75),
    (201.0, 3.0, 0.5),
    (5.0, 5.0, 0.0),
    (5.0, 5.0, 1.0),
]


@pytest.mark.parametrize("a,b,x", beta_args)
def test_regularized_incomplete_beta(a, b, x):
    expected = special.betainc(a, b, x)
    assert betafunc.regularized_incomplete_beta(a, b, x) == pytest.approx(expected, rel=1e-10, abs=1e-300)


def test_regularized_incomplete_beta_vectorised():
    a, b, x = (np.array(v) for v in zip(*beta_args))
    assert np.allclose(betafunc.regularized_incomplete_beta(a, b, x), special.betainc(a, b, x), rtol=1e-10, atol=0)


@pytest.mark.parametrize(
    "a,b,lo,hi",
    [
        (2.0, 3.0, 0.25, 0.5),
        (30.0, 70.0, 0.0, 0.25),
        (60.0, 40.0, 0.9, 1.0),
        (101.0, 2.0, 0.75, 0.9),
    ],
)
def test_log_interval_mass(a, b, lo, hi):
    expected = math.log(special.betainc(a, b, hi) - special.betainc(a, b, lo))
    assert float(betafunc.log_interval_mass(a, b, lo, hi)) == pytest.approx(expected, abs=1e-9)


def test_log_interval_mass_far_tail():
    expected = math.log(special.betainc(200.0, 2.0, 0.1))
    assert float(betafunc.log_interval_mass(200.0, 2.0, 0.0, 0.1)) == pytest.approx(expected, rel=1e-10)


def test_log_interval_mass_upper_tail():
    expected = math.log(special.betaincc(2.0, 200.0, 0.9))
    assert float(betafunc.log_interval_mass(2.0, 200.0, 0.9, 1.0)) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (3.0, 7.0), (0.5, 0.5)])
def test_truncated_moment_unit_interval(a, b):
    assert betafunc.truncated_beta_moment(a, b, 0.0, 1.0, 1) == pytest.approx(a / (a + b), rel=1e-12)
    second = a * (a + 1) / ((a + b) * (a + b + 1))
    assert betafunc.truncated_beta_moment(a, b, 0.0, 1.0, 2) == pytest.approx(second, rel=1e-12)


def test_truncated_moment_uniform_interval():
    # uniform on [0.25, 0.5]
    assert betafunc.truncated_beta_moment(1.0, 1.0, 0.25, 0.5, 1) == pytest.approx(0.375, rel=1e-12)
    assert betafunc.truncated_beta_moment(1.0, 1.0, 0.25, 0.5, 2) == pytest.approx(7 / 48, rel=1e-12)


def test_truncated_moment_errors():
    with pytest.raises(ValueError):
        betafunc.truncated_beta_moment(1.0, 1.0, 0.5, 0.5, 1)
    with pytest.raises(ValueError):
        betafunc.truncated_beta_moment(1.0, 1.0, 0.0, 1.0, 3)
    with pytest.raises(DegenerateMeasureError):
        betafunc.truncated_beta_moment(1000.0, 1.0, 0.0, 0.01, 1)


def test_independent_beta_predictive():
    m = IndependentBeta(1.0, 1.0, 2.0, 3.0)
    x = TrialState(s_C=2, s_D=1, n_C=3, n_D=4)
    assert predictive_success_prob(m, x, Arm.C) == pytest.approx(3 / 5)
    assert predictive_success_prob(m, x, Arm.D) == pytest.approx(3 / 9)


def test_independent_beta_marginal():
    m = IndependentBeta()
    # one success then one failure on control under a uniform prior: 1/2 * 1/3
    x = TrialState(s_C=1, s_D=0, n_C=2, n_D=0)
    assert math.exp(log_marginal_likelihood(m, x)) == pytest.approx(1 / 6)


def test_pooled_null():
    m = PooledNull(1.0, 1.0)
    x = TrialState(s_C=1, s_D=1, n_C=1, n_D=2)
    assert predictive_success_prob(m, x, Arm.C) == pytest.approx(3 / 5)
    assert predictive_success_prob(m, x, Arm.D) == pytest.approx(3 / 5)
    expected = math.exp(special.betaln(3, 2) - special.betaln(1, 1))
    assert math.exp(log_marginal_likelihood(m, x)) == pytest.approx(expected)


def test_point_mass():
    m = PointMass(0.3, 0.8)
    x = TrialState(s_C=1, s_D=2, n_C=2, n_D=2)
    assert math.exp(log_marginal_likelihood(m, x)) == pytest.approx(0.3 * 0.7 * 0.8 * 0.8)
    assert predictive_success_prob(m, x, Arm.D) == 0.8
    assert not m.is_boundary


def test_point_mass_boundary():
    m = PointMass(0.0, 1.0)
    assert m.is_boundary
    assert log_marginal_likelihood(m, TrialState(s_C=0, s_D=1, n_C=1, n_D=1)) == 0.0
    assert log_marginal_likelihood(m, TrialState(s_C=1, s_D=1, n_C=1, n_D=1)) == -math.inf


@pytest.mark.parametrize("t", range(5))
def test_unit_rectangle_matches_independent(t):
    st = statespace.stage_states(t)
    prior = (3.0, 7.0, 6.0, 4.0)
    plain = IndependentBeta(*prior)
    truncated = TruncatedIndependentBeta(*prior, rectangle=Rectangle())
    assert np.allclose(truncated.stage_log_marginal(st), plain.stage_log_marginal(st), atol=1e-12)
    for arm in Arm:
        assert np.allclose(truncated.stage_success_prob(st, arm), plain.stage_success_prob(st, arm), atol=1e-12)


def test_truncated_success_prob_inside_rectangle():
    rect = Rectangle(0.25, 0.5, 0.75, 0.9)
    law = TruncatedIndependentBeta(rectangle=rect)
    st = statespace.stage_states(6)
    p_C = law.stage_success_prob(st, Arm.C)
    p_D = law.stage_success_prob(st, Arm.D)
    assert np.all((p_C >= 0.25) & (p_C <= 0.5))
    assert np.all((p_D >= 0.75) & (p_D <= 0.9))


def test_truncated_posterior_moments():
    law = TruncatedIndependentBeta(rectangle=Rectangle(0.25, 0.5, 0.0, 1.0))
    st = StageStates.from_state(TrialState())
    m1, m2 = law.posterior_moments(st, Arm.C)
    assert m1[0] == pytest.approx(0.375)
    assert m2[0] == pytest.approx(7 / 48)


@pytest.mark.parametrize(
    "build",
    [
        lambda: IndependentBeta(0.0, 1.0, 1.0, 1.0),
        lambda: IndependentBeta(1.0, -1.0, 1.0, 1.0),
        lambda: PooledNull(math.inf, 1.0),
        lambda: PointMass(1.5, 0.5),
        lambda: Rectangle(0.5, 0.5, 0.0, 1.0),
        lambda: Rectangle(0.0, 1.2, 0.0, 1.0),
    ],
)
def test_invalid_measures(build):
    with pytest.raises(ValueError):
        build()


def test_degenerate_truncation():
    with pytest.raises(DegenerateMeasureError):
        TruncatedIndependentBeta(1000.0, 1.0, 1.0, 1.0, rectangle=Rectangle(0.0, 0.01, 0.0, 1.0))
