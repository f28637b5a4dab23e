from __future__ import annotations

import numpy as np
import pytest

from testing.designs import stage_sizes
from trialapi import statespace
from trialapi.statespace import Arm, Outcome, StageStates, TrialState


@pytest.mark.parametrize("t,size", stage_sizes)
def test_stage_size(t, size):
    assert statespace.stage_size(t) == size
    assert len(statespace.stage_states(t)) == size


@pytest.mark.parametrize("t", range(8))
def test_stage_offset(t):
    assert statespace.stage_offset(t) == sum(statespace.stage_size(u) for u in range(t))


@pytest.mark.parametrize("t", range(8))
def test_stage_states_storage_order(t):
    st = statespace.stage_states(t)
    local = statespace.local_index(t, st.n_C, st.s_C, st.s_D)
    assert np.array_equal(local, np.arange(len(st)))
    assert np.all(st.s_C <= st.n_C)
    assert np.all(st.s_D <= st.n_D)
    assert np.all(st.n_C + st.n_D == t)


@pytest.mark.parametrize("t", range(6))
def test_block_start(t):
    st = statespace.stage_states(t)
    for k in range(t + 1):
        assert statespace.block_start(t, k) == int(np.sum(st.n_C < k))


def test_indexer_sizes():
    idx = statespace.indexer(3)
    assert idx.nonterminal_size == 1 + 4 + 10
    assert idx.terminal_size == 20
    assert idx.size == 35


def test_index_unindex(indexer4):
    for i in range(indexer4.size):
        x = indexer4.unindex(i)
        assert x.is_valid(4)
        assert indexer4.index(x) == i


def test_enumerate_matches_stage(indexer4):
    states = list(indexer4.enumerate(2))
    assert len(states) == 10
    assert states[0] == TrialState(0, 0, 0, 2)
    assert states[-1] == TrialState(2, 0, 2, 0)


@pytest.mark.parametrize(
    "arm,outcome,expected",
    [
        (Arm.C, Outcome.success, TrialState(1, 0, 1, 0)),
        (Arm.C, Outcome.failure, TrialState(0, 0, 1, 0)),
        (Arm.D, Outcome.success, TrialState(0, 1, 0, 1)),
        (Arm.D, Outcome.failure, TrialState(0, 0, 0, 1)),
    ],
)
def test_successor(arm, outcome, expected):
    assert statespace.indexer(2).successor(TrialState(), arm, outcome) == expected


@pytest.mark.parametrize("t", range(4))
def test_successor_indices_match_scalar(indexer4, t):
    succ = indexer4.successor_indices(t)
    maps = {
        (Arm.C, Outcome.success): succ.c_success,
        (Arm.C, Outcome.failure): succ.c_failure,
        (Arm.D, Outcome.success): succ.d_success,
        (Arm.D, Outcome.failure): succ.d_failure,
    }
    offset = indexer4.stage_offset(t + 1)
    for i, x in enumerate(indexer4.enumerate(t)):
        for (arm, outcome), local in maps.items():
            assert indexer4.index(indexer4.successor(x, arm, outcome)) == offset + local[i]


@pytest.mark.parametrize("t", range(5))
def test_successor_maps_are_injective(t):
    succ = statespace.successor_indices(t)
    for local in (succ.c_success, succ.c_failure, succ.d_success, succ.d_failure):
        assert np.unique(local).size == local.size


def test_invalid_states(indexer4):
    with pytest.raises(IndexError):
        indexer4.index(TrialState(2, 0, 1, 0))
    with pytest.raises(IndexError):
        indexer4.index(TrialState(0, 0, 3, 2))
    with pytest.raises(IndexError):
        indexer4.successor(TrialState(0, 0, 2, 2), Arm.C, Outcome.success)
    with pytest.raises(IndexError):
        indexer4.unindex(indexer4.size)
    with pytest.raises(IndexError):
        indexer4.successor_indices(4)


def test_negative_horizon():
    with pytest.raises(ValueError):
        statespace.StateIndexer(-1)


def test_stage_states_from_state():
    st = StageStates.from_state(TrialState(1, 2, 3, 4))
    assert st.t == 7
    assert st.f_C[0] == 2
    assert st.f_D[0] == 2
    assert st.s[0] == 3
    with pytest.raises(ValueError):
        StageStates.from_state(TrialState(4, 0, 3, 0))


def test_horizon_zero():
    idx = statespace.indexer(0)
    assert idx.nonterminal_size == 0
    assert idx.terminal_size == 1
