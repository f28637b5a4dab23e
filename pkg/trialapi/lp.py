"""Dense two-phase simplex

Solves   minimize c @ x   subject to   A_ub @ x <= b_ub,  A_eq @ x == b_eq,  x >= 0

on a full tableau with Bland's rule for both the entering and the leaving variable. Problems here are
small (cutting-plane masters and occupancy LPs up to n = 8), so no attempt is made at sparsity.
"""

from __future__ import annotations

import dataclasses
import logging
from enum import auto

import numpy as np
import numpy.typing as npt

from trialapi import utils
from trialapi.errors import IterationLimitError, NumericError, SingularBasisError

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

PIVOT_TOLERANCE = 1e-9
RESIDUAL_TOLERANCE = 1e-8
MAX_CONDITION = 1e13


class LpStatus(utils.StrEnum):
    optimal = auto()
    infeasible = auto()
    unbounded = auto()


def _as_block(
    matrix: npt.ArrayLike | None, rhs: npt.ArrayLike | None, width: int, name: str
) -> tuple[FloatArray, FloatArray]:
    if matrix is None:
        if rhs is not None and np.size(rhs):
            raise ValueError(f"{name} right-hand side given without a matrix")
        return np.zeros((0, width)), np.zeros(0)
    a = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    b = np.atleast_1d(np.asarray(rhs, dtype=np.float64))
    if a.size == 0:
        a = a.reshape(0, width)
    if a.shape[1] != width:
        raise ValueError(f"{name} matrix has {a.shape[1]} columns, expected {width}")
    if b.shape != (a.shape[0],):
        raise ValueError(f"{name} right-hand side has shape {b.shape}, expected ({a.shape[0]},)")
    return a, b


@dataclasses.dataclass
class LinearProgram:
    c: FloatArray
    A_ub: FloatArray | None = None
    b_ub: FloatArray | None = None
    A_eq: FloatArray | None = None
    b_eq: FloatArray | None = None

    def __post_init__(self) -> None:
        self.c = np.atleast_1d(np.asarray(self.c, dtype=np.float64))
        self.A_ub, self.b_ub = _as_block(self.A_ub, self.b_ub, self.c.size, "inequality")
        self.A_eq, self.b_eq = _as_block(self.A_eq, self.b_eq, self.c.size, "equality")
        blocks = {"c": self.c, "A_ub": self.A_ub, "b_ub": self.b_ub, "A_eq": self.A_eq, "b_eq": self.b_eq}
        for name, value in blocks.items():
            if not np.all(np.isfinite(value)):
                raise ValueError(f"{name} has non-finite entries")

    @property
    def n_vars(self) -> int:
        return int(self.c.size)

    def residuals(self, x: FloatArray) -> tuple[float, float]:
        """Largest inequality violation and largest equality violation at x"""
        ub = float(np.max(self.A_ub @ x - self.b_ub, initial=0.0))
        eq = float(np.max(np.abs(self.A_eq @ x - self.b_eq), initial=0.0))
        return ub, eq


@dataclasses.dataclass
class LpSolution:
    status: LpStatus
    x: FloatArray
    value: float
    iterations: int = 0

    @property
    def success(self) -> bool:
        return self.status == LpStatus.optimal


def _pivot(T: FloatArray, basis: npt.NDArray[np.int64], row: int, col: int) -> None:
    pivot_row = T[row] / T[row, col]
    T -= np.outer(T[:, col], pivot_row)
    T[row] = pivot_row
    basis[row] = col


def _run(
    T: FloatArray, basis: npt.NDArray[np.int64], allowed: npt.NDArray[np.bool_], max_iter: int
) -> tuple[LpStatus, int]:
    """Iterate on T (constraint rows then the reduced cost row) until optimal or unbounded"""
    m = T.shape[0] - 1
    for it in range(max_iter):
        candidates = np.flatnonzero((T[-1, :-1] < -PIVOT_TOLERANCE) & allowed)
        if candidates.size == 0:
            return LpStatus.optimal, it
        col = int(candidates[0])
        column = T[:m, col]
        positive = column > PIVOT_TOLERANCE
        if not positive.any():
            return LpStatus.unbounded, it
        ratios = np.full(m, np.inf)
        ratios[positive] = T[:m, -1][positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + PIVOT_TOLERANCE * max(1.0, abs(best)))
        row = int(ties[np.argmin(basis[ties])])
        _pivot(T, basis, row, col)
    raise IterationLimitError(f"simplex did not terminate within {max_iter} pivots")


def solve(lp: LinearProgram, max_iter: int = 100_000) -> LpSolution:
    n = lp.n_vars
    assert lp.A_ub is not None and lp.b_ub is not None and lp.A_eq is not None and lp.b_eq is not None
    m_ub = lp.A_ub.shape[0]
    m_eq = lp.A_eq.shape[0]
    m = m_ub + m_eq

    # standard form columns: x, one slack per inequality row
    A = np.zeros((m, n + m_ub))
    A[:m_ub, :n] = lp.A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = lp.A_eq
    b = np.concatenate([lp.b_ub, lp.b_eq])
    negative = b < 0
    A[negative] *= -1.0
    b[negative] *= -1.0

    needs_artificial = negative.copy()
    needs_artificial[m_ub:] = True
    art_rows = np.flatnonzero(needs_artificial)
    width = n + m_ub
    n_art = art_rows.size

    T = np.zeros((m + 1, width + n_art + 1))
    T[:m, :width] = A
    T[:m, -1] = b
    basis = np.empty(m, dtype=np.int64)
    basis[:m_ub] = n + np.arange(m_ub)
    for k, row in enumerate(art_rows):
        T[row, width + k] = 1.0
        basis[row] = width + k

    iterations = 0
    if n_art:
        T[-1, :width] = -T[art_rows, :width].sum(axis=0)
        T[-1, -1] = -b[art_rows].sum()
        allowed = np.ones(width + n_art, dtype=bool)
        _, iterations = _run(T, basis, allowed, max_iter)
        infeasibility = -T[-1, -1]
        if infeasibility > RESIDUAL_TOLERANCE * max(1.0, float(np.abs(b).max(initial=0.0))):
            logger.debug("phase one ended with infeasibility %g", infeasibility)
            return LpSolution(LpStatus.infeasible, np.full(n, np.nan), np.nan, iterations)

        keep = np.ones(m + 1, dtype=bool)
        for row in range(m):
            if basis[row] < width:
                continue
            nonzero = np.flatnonzero(np.abs(T[row, :width]) > PIVOT_TOLERANCE)
            if nonzero.size:
                _pivot(T, basis, row, int(nonzero[0]))
            else:
                keep[row] = False
        if not keep.all():
            logger.debug("dropping %d redundant equality rows", int((~keep).sum()))
            A = A[keep[:m]]
            b = b[keep[:m]]
            T = T[keep]
            basis = basis[keep[:m]]
            m = A.shape[0]
        T = np.delete(T, np.s_[width : width + n_art], axis=1)

    cost = np.zeros(width)
    cost[:n] = lp.c
    T[-1] = 0.0
    T[-1, :width] = cost
    for row in range(m):
        T[-1] -= cost[basis[row]] * T[row]
    status, more = _run(T, basis, np.ones(width, dtype=bool), max_iter - iterations)
    iterations += more
    if status == LpStatus.unbounded:
        return LpSolution(status, np.full(n, np.nan), -np.inf, iterations)

    x_std = np.zeros(width)
    if m:
        B = A[:, basis]
        try:
            if np.linalg.cond(B) > MAX_CONDITION:
                raise SingularBasisError(f"optimal basis is numerically singular (cond {np.linalg.cond(B):.3g})")
            x_std[basis] = np.linalg.solve(B, b)
        except np.linalg.LinAlgError as e:
            raise SingularBasisError(f"optimal basis could not be refactorised: {e}") from e
    x = np.maximum(x_std[:n], 0.0)

    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    ub, eq = lp.residuals(x)
    if max(ub, eq) > RESIDUAL_TOLERANCE * scale or x_std.min(initial=0.0) < -RESIDUAL_TOLERANCE * scale:
        raise NumericError(f"simplex solution violates its constraints (inequality {ub:.3g}, equality {eq:.3g})")
    return LpSolution(LpStatus.optimal, x, float(lp.c @ x), iterations)
