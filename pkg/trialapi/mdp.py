"""Backward induction and forward recursion over the trial state space

Both sweeps run stage by stage on whole stage arrays. Only two stage buffers are alive at any time, and the
summation order within a stage is fixed by the storage mapping so repeated runs are bitwise identical.
"""

from __future__ import annotations

import dataclasses
import logging
from collections.abc import Iterator, Sequence
from typing import Callable, Union

import numpy as np
import numpy.typing as npt

from trialapi import statespace
from trialapi.measures import Measure
from trialapi.statespace import Arm, StageStates, TrialState

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
StageValue = Union[FloatArray, float]

TIE_TOLERANCE = 1e-12
FLUSH_BELOW = 1e-300


@dataclasses.dataclass(frozen=True)
class RewardSpec:
    """r(x, delta) = delta * rho_C(x) + (1 - delta) * rho_D(x) + kappa(x) on stages 0..n-1 plus h(x_n)

    `running` maps a stage to (rho_C, rho_D), `offset` to kappa; `terminal` holds h over X_n in storage
    order. Missing parts are zero.
    """

    running: Callable[[StageStates], tuple[StageValue, StageValue]] | None = None
    offset: Callable[[StageStates], StageValue] | None = None
    terminal: FloatArray | None = None

    def stage(self, st: StageStates) -> tuple[StageValue, StageValue]:
        """Reward of allocating to C and to D at each state of the stage"""
        rho_C: StageValue = 0.0
        rho_D: StageValue = 0.0
        if self.running is not None:
            rho_C, rho_D = self.running(st)
        if self.offset is not None:
            kappa = self.offset(st)
            rho_C = rho_C + kappa
            rho_D = rho_D + kappa
        return rho_C, rho_D

    @property
    def has_running(self) -> bool:
        return self.running is not None or self.offset is not None

    def terminal_values(self, size: int) -> StageValue:
        if self.terminal is None:
            return 0.0
        if self.terminal.shape != (size,):
            raise ValueError(f"terminal reward has {self.terminal.size} entries, expected {size}")
        return self.terminal


def combine_rewards(weights: Sequence[float], specs: Sequence[RewardSpec]) -> RewardSpec:
    """The reward sum_i w_i r_i; zero weights are skipped"""
    pairs = [(float(w), s) for w, s in zip(weights, specs) if w != 0.0]
    running = [(w, s) for w, s in pairs if s.has_running]

    def stage(st: StageStates) -> tuple[StageValue, StageValue]:
        rho_C: StageValue = 0.0
        rho_D: StageValue = 0.0
        for w, s in running:
            c, d = s.stage(st)
            rho_C = rho_C + w * c
            rho_D = rho_D + w * d
        return rho_C, rho_D

    terminal: FloatArray | None = None
    for w, s in pairs:
        if s.terminal is not None:
            terminal = w * s.terminal if terminal is None else terminal + w * s.terminal
    return RewardSpec(running=stage if running else None, terminal=terminal)


class PolicyTable:
    """Allocation probability to control at every non-terminal state

    Policies from backward induction are stored as int8 action codes (+1 -> p, -1 -> 1 - p, 0 -> 1/2);
    externally supplied policies as float64 probabilities.
    """

    def __init__(self, n: int, p: float, values: npt.NDArray, *, codes: bool = False) -> None:
        self.indexer = statespace.indexer(n)
        self.n = n
        self.p = float(p)
        self.codes = codes
        expected = self.indexer.nonterminal_size
        if values.shape != (expected,):
            raise ValueError(f"policy for n={n} needs {expected} entries, got {values.shape}")
        if codes:
            values = values.astype(np.int8, copy=False)
        else:
            values = values.astype(np.float64, copy=False)
            low = min(self.p, 1.0 - self.p)
            if values.size and (values.min() < low - 1e-12 or values.max() > max(self.p, 1.0 - self.p) + 1e-12):
                raise ValueError(f"policy values must lie in [{low}, {1.0 - low}]")
        self._values = values

    @classmethod
    def constant(cls, n: int, value: float = 0.5) -> PolicyTable:
        if value == 0.5:
            return cls(n, 0.5, np.zeros(statespace.indexer(n).nonterminal_size, dtype=np.int8), codes=True)
        p = max(value, 1.0 - value)
        return cls(n, p, np.full(statespace.indexer(n).nonterminal_size, float(value)))

    @classmethod
    def from_probabilities(cls, n: int, p: float, probabilities: FloatArray) -> PolicyTable:
        """Compress to action codes when every entry is one of p, 1 - p, 1/2"""
        probabilities = np.asarray(probabilities, dtype=np.float64)
        up = probabilities == p
        down = probabilities == 1.0 - p
        if np.all(up | down | (probabilities == 0.5)):
            codes = np.where(up, 1, np.where(down, -1, 0)).astype(np.int8)
            return cls(n, p, codes, codes=True)
        return cls(n, p, probabilities)

    def __len__(self) -> int:
        return int(self._values.size)

    def __getitem__(self, key: TrialState | int) -> float:
        i = self.indexer.index(key) if isinstance(key, TrialState) else int(key)
        if not 0 <= i < len(self):
            raise IndexError(f"{key} is not a decision state for horizon {self.n}")
        return float(self._decode(self._values[i : i + 1])[0])

    def _decode(self, block: npt.NDArray) -> FloatArray:
        if not self.codes:
            return block
        return np.where(block > 0, self.p, np.where(block < 0, 1.0 - self.p, 0.5))

    def stage(self, t: int) -> FloatArray:
        return self._decode(self._values[self.indexer.stage_slice(t)])

    def probabilities(self) -> FloatArray:
        return self._decode(self._values)

    def has_ties(self, t: int) -> npt.NDArray[np.bool_]:
        if self.codes:
            return self._values[self.indexer.stage_slice(t)] == 0
        return self.stage(t) == 0.5

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PolicyTable):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.probabilities(), other.probabilities())

    def __repr__(self) -> str:
        return f"PolicyTable(n={self.n}, p={self.p}, codes={self.codes})"


def _kernel(kernel: Measure, st: StageStates) -> tuple[FloatArray, FloatArray]:
    return kernel.stage_success_prob(st, Arm.C), kernel.stage_success_prob(st, Arm.D)


def backward_induction(kernel: Measure, rewards: RewardSpec, p: float, n: int) -> tuple[float, PolicyTable]:
    """Value of the best Markov policy with actions in [1 - p, p] and one maximiser (ties go to 1/2)"""
    if not 0.5 <= p <= 1.0:
        raise ValueError(f"randomisation bound must lie in [1/2, 1], got {p}")
    idx = statespace.indexer(n)
    codes = np.zeros(idx.nonterminal_size, dtype=np.int8)
    value = np.zeros(idx.terminal_size) + rewards.terminal_values(idx.terminal_size)

    for t in range(n - 1, -1, -1):
        st = idx.stage_states(t)
        succ = idx.successor_indices(t)
        p_C, p_D = _kernel(kernel, st)
        rho_C, rho_D = rewards.stage(st)
        q_C = rho_C + p_C * value[succ.c_success] + (1.0 - p_C) * value[succ.c_failure]
        q_D = rho_D + p_D * value[succ.d_success] + (1.0 - p_D) * value[succ.d_failure]
        coef = q_C - q_D
        action = np.where(coef > TIE_TOLERANCE, 1, np.where(coef < -TIE_TOLERANCE, -1, 0)).astype(np.int8)
        delta = np.where(action > 0, p, np.where(action < 0, 1.0 - p, 0.5))
        value = q_D + delta * coef
        codes[idx.stage_slice(t)] = action
    return float(value[0]), PolicyTable(n, p, codes, codes=True)


def _push(
    dist: FloatArray, st: StageStates, succ: statespace.Successors, delta: FloatArray, kernel: Measure, size: int
) -> FloatArray:
    p_C, p_D = _kernel(kernel, st)
    to_C = dist * delta
    to_D = dist - to_C
    nxt = np.zeros(size)
    # each successor map is injective, so plain fancy-index accumulation is exact
    nxt[succ.c_success] += to_C * p_C
    nxt[succ.c_failure] += to_C * (1.0 - p_C)
    nxt[succ.d_success] += to_D * p_D
    nxt[succ.d_failure] += to_D * (1.0 - p_D)
    nxt[nxt < FLUSH_BELOW] = 0.0
    return nxt


def stage_distributions(kernel: Measure, policy: PolicyTable) -> Iterator[tuple[int, FloatArray]]:
    """Yield (t, law of X_t) for t = 0..n, holding one stage at a time"""
    idx = policy.indexer
    dist = np.ones(1)
    yield 0, dist
    for t in range(policy.n):
        st = idx.stage_states(t)
        dist = _push(dist, st, idx.successor_indices(t), policy.stage(t), kernel, idx.stage_size(t + 1))
        yield t + 1, dist


def forward_distribution(
    kernel: Measure, policy: PolicyTable, *, all_stages: bool = False
) -> FloatArray | list[FloatArray]:
    """Distribution of X_n, or of every X_t when all_stages is set"""
    if all_stages:
        return [dist for _, dist in stage_distributions(kernel, policy)]
    dist = np.ones(1)
    for _, dist in stage_distributions(kernel, policy):
        pass
    return dist


def forward_pass(
    kernel: Measure, policy: PolicyTable, rewards: Sequence[RewardSpec]
) -> tuple[FloatArray, FloatArray]:
    """Expected totals E[sum_t r(X_t, pi(X_t)) + h(X_n)] of every reward and the distribution of X_n"""
    idx = policy.indexer
    totals = np.zeros(len(rewards))
    running = [(i, spec) for i, spec in enumerate(rewards) if spec.has_running]
    dist = np.ones(1)
    for t in range(policy.n):
        st = idx.stage_states(t)
        delta = policy.stage(t)
        for i, spec in running:
            rho_C, rho_D = spec.stage(st)
            totals[i] += np.dot(dist, rho_D + delta * (np.asarray(rho_C) - rho_D))
        dist = _push(dist, st, idx.successor_indices(t), delta, kernel, idx.stage_size(t + 1))
    for i, spec in enumerate(rewards):
        if spec.terminal is not None:
            totals[i] += np.dot(dist, spec.terminal_values(idx.terminal_size))
    return totals, dist


def expected_totals(kernel: Measure, policy: PolicyTable, rewards: Sequence[RewardSpec]) -> FloatArray:
    return forward_pass(kernel, policy, rewards)[0]


def expected_total(kernel: Measure, policy: PolicyTable, rewards: RewardSpec) -> float:
    return float(forward_pass(kernel, policy, [rewards])[0][0])
