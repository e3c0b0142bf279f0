"""Risk-adjusted performance metrics over daily equity curves.

Conventions: daily returns use the prior-value denominator, annualization
assumes 252 trading days, drawdown metrics are computed on equity levels,
VaR/CVaR are reported as positive loss fractions, and the probabilistic
Sharpe ratio uses the non-annualized daily Sharpe with raw (non-excess)
kurtosis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import ndtr

TRADING_DAYS_PER_YEAR = 252


def daily_returns(equity: np.ndarray) -> np.ndarray:
    """Fractional day-over-day changes of an equity curve."""
    equity = np.asarray(equity, dtype=float)
    if len(equity) < 2:
        raise ValueError("need at least 2 equity points")
    if np.any(equity <= 0):
        raise ValueError("equity values must be positive")
    return np.diff(equity) / equity[:-1]


def annualized_return(returns: np.ndarray,
                      periods_per_year: int = TRADING_DAYS_PER_YEAR) -> float:
    """Geometric compounding of daily returns, annualized."""
    returns = np.asarray(returns, dtype=float)
    if len(returns) == 0:
        raise ValueError("need at least 1 return")
    if np.any(returns <= -1.0):
        raise ValueError("returns must exceed -100%")
    total = float(np.prod(1.0 + returns))
    return total ** (periods_per_year / len(returns)) - 1.0


def annualized_stdev(returns: np.ndarray,
                     periods_per_year: int = TRADING_DAYS_PER_YEAR) -> float:
    """Sample standard deviation of daily returns scaled by sqrt(252)."""
    returns = np.asarray(returns, dtype=float)
    if len(returns) < 2:
        raise ValueError("need at least 2 returns")
    return math.sqrt(periods_per_year) * float(np.std(returns, ddof=1))


def max_drawdown(equity: np.ndarray) -> float:
    """Largest peak-to-trough equity loss as a fraction of the peak."""
    equity = np.asarray(equity, dtype=float)
    if len(equity) == 0:
        raise ValueError("empty equity curve")
    if np.any(equity <= 0):
        raise ValueError("equity values must be positive")
    peaks = np.maximum.accumulate(equity)
    return float(np.max((peaks - equity) / peaks))


class LossDuration(NamedTuple):
    years: float
    open_ended: bool


def max_loss_duration(equity: np.ndarray,
                      periods_per_year: int = TRADING_DAYS_PER_YEAR) -> LossDuration:
    """Longest spell below a running-maximum peak, in years.

    Measured from the peak to the first value at or above it. A drawdown
    still open at the end of the series counts to the final observation
    and sets ``open_ended``.
    """
    equity = np.asarray(equity, dtype=float)
    if len(equity) == 0:
        raise ValueError("empty equity curve")
    longest = 0
    open_ended = False
    peak_idx = 0
    in_drawdown = False
    for i in range(1, len(equity)):
        if equity[i] >= equity[peak_idx]:
            if in_drawdown:
                longest = max(longest, i - peak_idx)
                in_drawdown = False
            peak_idx = i
        else:
            in_drawdown = True
    if in_drawdown:
        trailing = len(equity) - 1 - peak_idx
        if trailing >= longest:
            longest = trailing
            open_ended = True
    return LossDuration(longest / periods_per_year, open_ended)


def information_ratio(ann_return: float, ann_stdev: float) -> float:
    """Annualized return over annualized stdev; infinite when riskless and nonzero."""
    if ann_stdev < 0:
        raise ValueError("ann_stdev must be non-negative")
    if ann_stdev == 0.0:
        return 0.0 if ann_return == 0.0 else math.copysign(math.inf, ann_return)
    return ann_return / ann_stdev


def var_cvar(returns: np.ndarray, alpha: float = 0.05) -> Tuple[float, float]:
    """Empirical value-at-risk and conditional VaR as positive loss fractions.

    VaR is the ceil(alpha*n)-th smallest return, negated; CVaR is the
    negated mean of returns at or below that threshold.
    """
    returns = np.asarray(returns, dtype=float)
    if len(returns) == 0:
        raise ValueError("empty return series")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    order = np.sort(returns)
    k = math.ceil(alpha * len(returns))
    threshold = order[k - 1]
    cvar = -float(returns[returns <= threshold].mean())
    return float(-threshold), cvar


def _central_moments(returns: np.ndarray) -> Tuple[float, float, float, float]:
    mean = float(returns.mean())
    dev = returns - mean
    m2 = float(np.mean(dev ** 2))
    m3 = float(np.mean(dev ** 3))
    m4 = float(np.mean(dev ** 4))
    return mean, m2, m3, m4


def skewness(returns: np.ndarray) -> float:
    """Moment-based skewness m3 / m2^1.5; NaN for zero-variance samples."""
    returns = np.asarray(returns, dtype=float)
    _, m2, m3, _ = _central_moments(returns)
    if m2 == 0.0:
        return math.nan
    return m3 / m2 ** 1.5


def kurtosis(returns: np.ndarray) -> float:
    """Raw (non-excess) kurtosis m4 / m2^2; NaN for zero-variance samples."""
    returns = np.asarray(returns, dtype=float)
    _, m2, _, m4 = _central_moments(returns)
    if m2 == 0.0:
        return math.nan
    return m4 / m2 ** 2


def daily_sharpe(returns: np.ndarray) -> float:
    """Non-annualized mean/stdev Sharpe of a daily return series."""
    returns = np.asarray(returns, dtype=float)
    if len(returns) < 2:
        raise ValueError("need at least 2 returns")
    sd = float(np.std(returns, ddof=1))
    if sd == 0.0:
        raise ValueError("zero-dispersion series has no Sharpe ratio")
    return float(returns.mean()) / sd


def probabilistic_sharpe(returns: np.ndarray, sr_benchmark: float) -> float:
    """Probability that the true Sharpe exceeds ``sr_benchmark``.

    Adjusts the observed daily Sharpe for sample size, skewness, and raw
    kurtosis. Returns NaN when the variance correction term is not
    positive (undefined statistic).
    """
    returns = np.asarray(returns, dtype=float)
    if len(returns) < 4:
        raise ValueError("need at least 4 returns for the kurtosis term")
    sr = daily_sharpe(returns)
    g3 = skewness(returns)
    g4 = kurtosis(returns)
    radicand = 1.0 - g3 * sr + (g4 - 1.0) / 4.0 * sr * sr
    if radicand <= 0.0:
        return math.nan
    z = (sr - sr_benchmark) * math.sqrt(len(returns) - 1) / math.sqrt(radicand)
    return float(ndtr(z))


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    stdev: float
    variance: float
    minimum: float
    p10: float
    p25: float
    p50: float
    p75: float
    p90: float
    maximum: float
    skew: float
    kurt: float


def summary_stats(returns: np.ndarray) -> SummaryStats:
    """Descriptive statistics of a return series.

    Skew and kurtosis are NaN for degenerate (zero-variance) samples.
    """
    returns = np.asarray(returns, dtype=float)
    if len(returns) < 2:
        raise ValueError("need at least 2 returns")
    p10, p25, p50, p75, p90 = np.percentile(returns, [10, 25, 50, 75, 90])
    return SummaryStats(
        mean=float(returns.mean()),
        stdev=float(np.std(returns, ddof=1)),
        variance=float(np.var(returns, ddof=1)),
        minimum=float(returns.min()),
        p10=float(p10), p25=float(p25), p50=float(p50),
        p75=float(p75), p90=float(p90),
        maximum=float(returns.max()),
        skew=skewness(returns),
        kurt=kurtosis(returns),
    )


@dataclass(frozen=True)
class MetricsReport:
    """Full performance report of one equity curve."""
    ann_return: float
    ann_stdev: float
    max_drawdown: float
    max_loss_duration_years: float
    loss_duration_open: bool
    information_ratio: float
    var_95: float
    cvar_95: float
    skew: float
    kurt: float
    psr: Optional[float]
    n_days: int


def compute_report(equity: np.ndarray,
                   benchmark_daily_sharpe: Optional[float] = None,
                   periods_per_year: int = TRADING_DAYS_PER_YEAR) -> MetricsReport:
    """All metrics of an equity curve, with PSR against an optional benchmark."""
    returns = daily_returns(equity)
    arc = annualized_return(returns, periods_per_year)
    asd = annualized_stdev(returns, periods_per_year)
    mld = max_loss_duration(equity, periods_per_year)
    var95, cvar95 = var_cvar(returns, 0.05)
    psr = None
    if benchmark_daily_sharpe is not None and len(returns) >= 4:
        sd = float(np.std(returns, ddof=1))
        psr = probabilistic_sharpe(returns, benchmark_daily_sharpe) if sd > 0 else None
    return MetricsReport(
        ann_return=arc,
        ann_stdev=asd,
        max_drawdown=max_drawdown(equity),
        max_loss_duration_years=mld.years,
        loss_duration_open=mld.open_ended,
        information_ratio=information_ratio(arc, asd),
        var_95=var95,
        cvar_95=cvar95,
        skew=skewness(returns),
        kurt=kurtosis(returns),
        psr=psr,
        n_days=len(returns),
    )
