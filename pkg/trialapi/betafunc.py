"""Regularized incomplete beta function and truncated Beta moments

The incomplete beta is evaluated with the continued fraction of Numerical Recipes (modified Lentz),
switching to I_x(a, b) = 1 - I_{1-x}(b, a) when x >= (a + 1) / (a + b + 2). Everything is vectorised and
kept in log space so that interval masses far in the tails survive at large trial sizes.
"""

from __future__ import annotations

import logging
import math
from typing import Union

import numpy as np
import numpy.typing as npt
from scipy.special import betaln

from trialapi.errors import DegenerateMeasureError, NumericError

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
ArrayLike = Union[float, FloatArray]

_TINY = 1e-300
_EPS = 1e-15
_MAX_ITER = 2000
LOG_HALF = math.log(0.5)
LOG_MIN_MASS = math.log(1e-300)


def _continued_fraction(a: FloatArray, b: FloatArray, x: FloatArray) -> FloatArray:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = 1.0 / np.where(np.abs(d) < _TINY, _TINY, d)
    h = d.copy()

    # only entries that have not converged are updated
    active = np.arange(x.size)
    for m in range(1, _MAX_ITER + 1):
        if active.size == 0:
            return h
        aa_, bb, xx, cc, dd = a[active], b[active], x[active], c[active], d[active]
        m2 = 2 * m
        num = m * (bb - m) * xx / ((qam[active] + m2) * (aa_ + m2))
        dd = 1.0 + num * dd
        dd = 1.0 / np.where(np.abs(dd) < _TINY, _TINY, dd)
        cc = 1.0 + num / cc
        cc = np.where(np.abs(cc) < _TINY, _TINY, cc)
        h[active] *= dd * cc

        num = -(aa_ + m) * (qab[active] + m) * xx / ((aa_ + m2) * (qap[active] + m2))
        dd = 1.0 + num * dd
        dd = 1.0 / np.where(np.abs(dd) < _TINY, _TINY, dd)
        cc = 1.0 + num / cc
        cc = np.where(np.abs(cc) < _TINY, _TINY, cc)
        delta = dd * cc
        h[active] *= delta

        c[active] = cc
        d[active] = dd
        active = active[np.abs(delta - 1.0) > _EPS]
    if active.size:
        raise NumericError(f"incomplete beta continued fraction did not converge for {active.size} entries")
    return h


def log1mexp(v: FloatArray) -> FloatArray:
    """log(1 - exp(v)) for v <= 0"""
    v = np.minimum(v, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(v > -math.log(2.0), np.log(-np.expm1(v)), np.log1p(-np.exp(v)))


def log_diff(la: FloatArray, lb: FloatArray) -> FloatArray:
    """log(exp(la) - exp(lb)); -inf when lb >= la"""
    with np.errstate(invalid="ignore"):
        out = la + log1mexp(lb - la)
    return np.where((la == -np.inf) | (lb >= la), -np.inf, out)


def log_incomplete_beta(a: ArrayLike, b: ArrayLike, x: ArrayLike) -> tuple[FloatArray, FloatArray]:
    """Return (log I_x(a, b), log(1 - I_x(a, b))) elementwise"""
    a_, b_, x_ = (np.array(v, dtype=np.float64) for v in np.broadcast_arrays(a, b, x))
    if np.any(~(a_ > 0)) or np.any(~(b_ > 0)):
        raise ValueError("incomplete beta requires a > 0 and b > 0")
    if np.any(~((x_ >= 0) & (x_ <= 1))):
        raise ValueError("incomplete beta requires 0 <= x <= 1")
    shape = x_.shape
    a_, b_, x_ = a_.ravel(), b_.ravel(), x_.ravel()

    log_i = np.where(x_ >= 1.0, 0.0, -np.inf)
    log_c = np.where(x_ >= 1.0, -np.inf, 0.0)
    inner = (x_ > 0.0) & (x_ < 1.0)
    if np.any(inner):
        ai, bi, xi = a_[inner], b_[inner], x_[inner]
        direct = xi < (ai + 1.0) / (ai + bi + 2.0)
        pa = np.where(direct, ai, bi)
        pb = np.where(direct, bi, ai)
        px = np.where(direct, xi, 1.0 - xi)
        front = ai * np.log(xi) + bi * np.log1p(-xi) - betaln(ai, bi)
        tail = front + np.log(_continued_fraction(pa, pb, px)) - np.log(pa)
        tail = np.minimum(tail, 0.0)
        log_i[inner] = np.where(direct, tail, log1mexp(tail))
        log_c[inner] = np.where(direct, log1mexp(tail), tail)
    return log_i.reshape(shape), log_c.reshape(shape)


def regularized_incomplete_beta(a: ArrayLike, b: ArrayLike, x: ArrayLike) -> ArrayLike:
    log_i, _ = log_incomplete_beta(a, b, x)
    out = np.exp(log_i)
    if out.ndim == 0:
        return float(out)
    return out


def log_interval_mass(a: ArrayLike, b: ArrayLike, lo: ArrayLike, hi: ArrayLike) -> FloatArray:
    """log(I_hi(a, b) - I_lo(a, b)), using the complement form when the interval sits in the upper tail"""
    li_hi, lc_hi = log_incomplete_beta(a, b, hi)
    li_lo, lc_lo = log_incomplete_beta(a, b, lo)
    lower = log_diff(li_hi, li_lo)
    upper = log_diff(lc_lo, lc_hi)
    return np.where(li_lo >= LOG_HALF, upper, lower)


def log_truncated_moment(
    a: ArrayLike, b: ArrayLike, lo: ArrayLike, hi: ArrayLike, k: int, log_norm: FloatArray | None = None
) -> FloatArray:
    """log E[theta^k] under Beta(a, b) truncated to [lo, hi]; nan where the normalising mass vanishes"""
    a_ = np.asarray(a, dtype=np.float64)
    b_ = np.asarray(b, dtype=np.float64)
    if log_norm is None:
        log_norm = log_interval_mass(a_, b_, lo, hi)
    log_num = log_interval_mass(a_ + k, b_, lo, hi)
    with np.errstate(invalid="ignore"):
        out = betaln(a_ + k, b_) - betaln(a_, b_) + log_num - log_norm
    return np.where(log_norm < LOG_MIN_MASS, np.nan, out)


def truncated_beta_moment(a: float, b: float, lo: float, hi: float, k: int) -> float:
    if k not in (1, 2):
        raise ValueError(f"moment order must be 1 or 2, got {k}")
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError(f"invalid truncation interval [{lo}, {hi}]")
    log_norm = log_interval_mass(a, b, lo, hi)
    if float(log_norm) < LOG_MIN_MASS:
        raise DegenerateMeasureError(f"Beta({a}, {b}) has no mass on [{lo}, {hi}]")
    return float(np.exp(log_truncated_moment(a, b, lo, hi, k, log_norm)))
