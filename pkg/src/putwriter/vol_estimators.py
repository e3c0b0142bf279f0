"""Daily realized-variance estimators and annualization.

All estimators return a per-day variance computed over a trailing window
of daily OHLC bars. ``memory`` is the window length in trading days; the
close-to-close, overnight, and Yang-Zhang estimators need one extra bar
to form the first return or gap.
"""
from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np

TRADING_DAYS_PER_YEAR = 252

ESTIMATOR_KINDS = ("c2c", "gk", "yz")


@dataclass(frozen=True)
class VolEstimate:
    """Annualized volatility derived from a per-period variance."""
    variance: float
    periods_per_year: int
    sigma: float
    clamped: bool


def annualize(variance: float, periods_per_year: int = TRADING_DAYS_PER_YEAR) -> VolEstimate:
    """Turn a per-period variance into an annualized sigma.

    Cross products can push a variance estimate slightly negative; it is
    clamped to zero and flagged rather than propagated into sqrt.
    """
    clamped = variance < 0.0
    var = 0.0 if clamped else float(variance)
    return VolEstimate(variance=var, periods_per_year=periods_per_year,
                       sigma=math.sqrt(var * periods_per_year), clamped=clamped)


def _trailing(arr: np.ndarray, n: int, name: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if len(arr) < n:
        raise ValueError(f"need at least {n} bars for {name}, got {len(arr)}")
    return arr[-n:]


def c2c_variance(closes: np.ndarray, memory: int) -> float:
    """Sample variance of the last ``memory`` close-to-close log returns."""
    if memory < 2:
        raise ValueError("memory must be >= 2")
    window = _trailing(closes, memory + 1, "c2c")
    rets = np.diff(np.log(window))
    return float(np.sum((rets - rets.mean()) ** 2) / (memory - 1))


def gk_variance(opens: np.ndarray, highs: np.ndarray, lows: np.ndarray,
                closes: np.ndarray, memory: int) -> float:
    """Garman-Klass range estimator averaged over the window."""
    if memory < 1:
        raise ValueError("memory must be >= 1")
    o = _trailing(opens, memory, "gk")
    h = _trailing(highs, memory, "gk")
    l = _trailing(lows, memory, "gk")
    c = _trailing(closes, memory, "gk")
    hl = np.log(h / l)
    co = np.log(c / o)
    terms = 0.5 * hl ** 2 - (2.0 * math.log(2.0) - 1.0) * co ** 2
    return float(terms.mean())


def rs_variance(opens: np.ndarray, highs: np.ndarray, lows: np.ndarray,
                closes: np.ndarray, memory: int) -> float:
    """Rogers-Satchell drift-independent estimator averaged over the window."""
    if memory < 1:
        raise ValueError("memory must be >= 1")
    o = _trailing(opens, memory, "rs")
    h = _trailing(highs, memory, "rs")
    l = _trailing(lows, memory, "rs")
    c = _trailing(closes, memory, "rs")
    terms = np.log(h / c) * np.log(h / o) + np.log(l / c) * np.log(l / o)
    return float(terms.mean())


def overnight_variance(opens: np.ndarray, closes: np.ndarray, memory: int) -> float:
    """Sample variance of log(open / prior close) gaps over the window."""
    if memory < 2:
        raise ValueError("memory must be >= 2")
    o = _trailing(opens, memory, "overnight")
    c_prev = _trailing(closes, memory + 1, "overnight")[:-1]
    gaps = np.log(o / c_prev)
    return float(np.sum((gaps - gaps.mean()) ** 2) / (memory - 1))


def yz_weight(memory: int) -> float:
    """Mixing weight on the close-to-close component of Yang-Zhang."""
    if memory < 2:
        raise ValueError("memory must be >= 2")
    return 0.34 / (1.34 + (memory + 1) / (memory - 1))


def yz_variance(opens: np.ndarray, highs: np.ndarray, lows: np.ndarray,
                closes: np.ndarray, memory: int) -> float:
    """Yang-Zhang combination of overnight, close-to-close, and Rogers-Satchell.

    The middle component is the plain close-to-close sample variance over
    the same window, weighted by ``yz_weight``.
    """
    k = yz_weight(memory)
    sigma_o = overnight_variance(opens, closes, memory)
    sigma_c = c2c_variance(closes, memory)
    sigma_rs = rs_variance(opens, highs, lows, closes, memory)
    return sigma_o + k * sigma_c + (1.0 - k) * sigma_rs


def estimate_sigma(kind: str, opens: np.ndarray, highs: np.ndarray, lows: np.ndarray,
                   closes: np.ndarray, memory: int,
                   periods_per_year: int = TRADING_DAYS_PER_YEAR) -> VolEstimate:
    """Annualized volatility from the named estimator on trailing bars."""
    if kind == "c2c":
        var = c2c_variance(closes, memory)
    elif kind == "gk":
        var = gk_variance(opens, highs, lows, closes, memory)
    elif kind == "yz":
        var = yz_variance(opens, highs, lows, closes, memory)
    else:
        raise ValueError(f"unknown estimator kind: {kind!r}")
    return annualize(var, periods_per_year)


def bars_required(kind: str, memory: int) -> int:
    """Trailing daily bars needed before the estimator can run."""
    if kind == "gk":
        return memory
    if kind in ("c2c", "yz"):
        return memory + 1
    raise ValueError(f"unknown estimator kind: {kind!r}")
