"""Trial state space: enumeration, storage mapping and transitions

States at stage t are the tuples (s_C, s_D, n_C, n_D) with n_C + n_D = t. Stage blocks are stored
contiguously, stage t starting at sum_{u<t} C(u+3, 3), and within a block states are ordered
lexicographically by (n_C, s_C, s_D).
"""

from __future__ import annotations

import bisect
import dataclasses
import functools
import logging
from collections.abc import Iterator
from enum import auto

import numpy as np
import numpy.typing as npt
from typing_extensions import NamedTuple

from trialapi import utils

logger = logging.getLogger(__name__)

IntArray = npt.NDArray[np.int64]


class Arm(utils.StrEnum):
    C = "C"
    D = "D"


class Outcome(utils.StrEnum):
    success = auto()
    failure = auto()


class TrialState(NamedTuple):
    s_C: int = 0
    s_D: int = 0
    n_C: int = 0
    n_D: int = 0

    @property
    def stage(self) -> int:
        return self.n_C + self.n_D

    @property
    def s(self) -> int:
        return self.s_C + self.s_D

    def successes(self, arm: Arm) -> int:
        return self.s_C if arm == Arm.C else self.s_D

    def allocations(self, arm: Arm) -> int:
        return self.n_C if arm == Arm.C else self.n_D

    def is_valid(self, n: int | None = None) -> bool:
        if not (0 <= self.s_C <= self.n_C and 0 <= self.s_D <= self.n_D):
            return False
        return n is None or self.stage <= n


@dataclasses.dataclass(frozen=True)
class StageStates:
    """Count arrays for a batch of states of a single stage, in storage order"""

    t: int
    n_C: IntArray
    s_C: IntArray
    s_D: IntArray

    def __len__(self) -> int:
        return int(self.n_C.size)

    @property
    def n_D(self) -> IntArray:
        return self.t - self.n_C

    @property
    def f_C(self) -> IntArray:
        return self.n_C - self.s_C

    @property
    def f_D(self) -> IntArray:
        return self.n_D - self.s_D

    @property
    def s(self) -> IntArray:
        return self.s_C + self.s_D

    @classmethod
    def from_state(cls, x: TrialState) -> StageStates:
        if not x.is_valid():
            raise ValueError(f"invalid trial state {x}")
        return cls(
            t=x.stage,
            n_C=np.array([x.n_C], dtype=np.int64),
            s_C=np.array([x.s_C], dtype=np.int64),
            s_D=np.array([x.s_D], dtype=np.int64),
        )

    def state(self, i: int) -> TrialState:
        return TrialState(int(self.s_C[i]), int(self.s_D[i]), int(self.n_C[i]), int(self.t - self.n_C[i]))


def stage_size(t: int) -> int:
    return (t + 1) * (t + 2) * (t + 3) // 6


def stage_offset(t: int) -> int:
    return t * (t + 1) * (t + 2) * (t + 3) // 24


def block_start(t: int, k: IntArray | int) -> IntArray | int:
    """Position of the first state with n_C = k inside the stage-t block"""
    return k * (k + 1) * (3 * t + 5 - 2 * k) // 6


def local_index(t: int, n_C: IntArray | int, s_C: IntArray | int, s_D: IntArray | int) -> IntArray | int:
    return block_start(t, n_C) + s_C * (t - n_C + 1) + s_D


@functools.lru_cache(maxsize=4)
def stage_states(t: int) -> StageStates:
    k = np.arange(t + 1, dtype=np.int64)
    per_k = k + 1
    pair_n_C = np.repeat(k, per_k)
    pair_s_C = np.arange(pair_n_C.size, dtype=np.int64) - np.repeat(np.cumsum(per_k) - per_k, per_k)

    widths = t - pair_n_C + 1
    n_C = np.repeat(pair_n_C, widths)
    s_C = np.repeat(pair_s_C, widths)
    s_D = np.arange(n_C.size, dtype=np.int64) - np.repeat(np.cumsum(widths) - widths, widths)
    for a in (n_C, s_C, s_D):
        a.setflags(write=False)
    return StageStates(t, n_C, s_C, s_D)


@dataclasses.dataclass(frozen=True)
class Successors:
    """Local stage t+1 indices reached from each stage t state, one array per (arm, outcome)"""

    c_success: IntArray
    c_failure: IntArray
    d_success: IntArray
    d_failure: IntArray


@functools.lru_cache(maxsize=4)
def successor_indices(t: int) -> Successors:
    st = stage_states(t)
    nxt = t + 1
    succ = Successors(
        c_success=local_index(nxt, st.n_C + 1, st.s_C + 1, st.s_D),
        c_failure=local_index(nxt, st.n_C + 1, st.s_C, st.s_D),
        d_success=local_index(nxt, st.n_C, st.s_C, st.s_D + 1),
        d_failure=local_index(nxt, st.n_C, st.s_C, st.s_D),
    )
    for a in (succ.c_success, succ.c_failure, succ.d_success, succ.d_failure):
        a.setflags(write=False)
    return succ


class StateIndexer:
    """Storage mapping for all states of a horizon-n trial"""

    def __init__(self, n: int) -> None:
        if n < 0:
            raise ValueError(f"horizon must be non-negative, got {n}")
        self.n = n
        self.offsets = [stage_offset(t) for t in range(n + 2)]

    def __repr__(self) -> str:
        return f"StateIndexer(n={self.n})"

    @property
    def size(self) -> int:
        """d_{<=n}: number of states over all stages"""
        return self.offsets[self.n + 1]

    @property
    def nonterminal_size(self) -> int:
        """d_{<n}: states at which an allocation is made"""
        return self.offsets[self.n]

    @property
    def terminal_size(self) -> int:
        return stage_size(self.n)

    def _check_stage(self, t: int) -> None:
        if not 0 <= t <= self.n:
            raise IndexError(f"stage {t} outside 0..{self.n}")

    def stage_size(self, t: int) -> int:
        self._check_stage(t)
        return stage_size(t)

    def stage_offset(self, t: int) -> int:
        self._check_stage(t)
        return self.offsets[t]

    def stage_slice(self, t: int) -> slice:
        self._check_stage(t)
        return slice(self.offsets[t], self.offsets[t + 1])

    def stage_states(self, t: int) -> StageStates:
        self._check_stage(t)
        return stage_states(t)

    def successor_indices(self, t: int) -> Successors:
        if not 0 <= t < self.n:
            raise IndexError(f"stage {t} has no successors for horizon {self.n}")
        return successor_indices(t)

    def enumerate(self, t: int) -> Iterator[TrialState]:
        st = self.stage_states(t)
        for i in range(len(st)):
            yield st.state(i)

    def index(self, x: TrialState) -> int:
        if not x.is_valid(self.n):
            raise IndexError(f"invalid trial state {x} for horizon {self.n}")
        return self.offsets[x.stage] + int(local_index(x.stage, x.n_C, x.s_C, x.s_D))

    def unindex(self, i: int) -> TrialState:
        if not 0 <= i < self.size:
            raise IndexError(f"flat index {i} outside 0..{self.size - 1}")
        t = bisect.bisect_right(self.offsets, i) - 1
        r = i - self.offsets[t]
        starts = [int(block_start(t, k)) for k in range(t + 2)]
        k = bisect.bisect_right(starts, r) - 1
        s_C, s_D = divmod(r - starts[k], t - k + 1)
        return TrialState(s_C, s_D, k, t - k)

    def successor(self, x: TrialState, arm: Arm, outcome: Outcome) -> TrialState:
        if not x.is_valid(self.n):
            raise IndexError(f"invalid trial state {x} for horizon {self.n}")
        if x.stage >= self.n:
            raise IndexError(f"{x} is terminal for horizon {self.n}")
        won = 1 if outcome == Outcome.success else 0
        if arm == Arm.C:
            return TrialState(x.s_C + won, x.s_D, x.n_C + 1, x.n_D)
        return TrialState(x.s_C, x.s_D + won, x.n_C, x.n_D + 1)


@functools.lru_cache(maxsize=16)
def indexer(n: int) -> StateIndexer:
    return StateIndexer(n)
