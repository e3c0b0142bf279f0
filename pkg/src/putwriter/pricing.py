"""European put pricing, strike selection, and margin for index option writing.

Prices follow the Black-Scholes-Merton model with a continuous dividend
yield. All time arguments are in years; volatility is annualized.
"""
from __future__ import annotations

import math
from typing import Sequence, Union

import numpy as np
from scipy.special import ndtr

ArrayLike = Union[float, np.ndarray]

DEFAULT_STRIKE_GRID = 25.0


def _norm_cdf(x: ArrayLike) -> ArrayLike:
    return ndtr(x)


def bsm_put_price(spot: ArrayLike, strike: ArrayLike, rate: float, div_yield: float,
                  sigma: float, tau: float) -> ArrayLike:
    """Black-Scholes-Merton European put value.

    ``spot`` and ``strike`` broadcast against each other. Degenerate
    regimes are handled explicitly: at expiry (tau <= 0) the put is worth
    its intrinsic value, and with zero volatility it is worth the positive
    part of its discounted forward intrinsic value.
    """
    spot = np.asarray(spot, dtype=float)
    strike = np.asarray(strike, dtype=float)
    if np.any(spot < 0) or np.any(strike < 0):
        raise ValueError("spot and strike must be non-negative")
    scalar = spot.ndim == 0 and strike.ndim == 0
    if tau <= 0.0:
        out = np.maximum(strike - spot, 0.0)
        return float(out) if scalar else out
    if sigma <= 0.0:
        out = np.maximum(strike * math.exp(-rate * tau)
                         - spot * math.exp(-div_yield * tau), 0.0)
        return float(out) if scalar else out
    sd = sigma * math.sqrt(tau)
    with np.errstate(divide="ignore"):
        d1 = (np.log(spot / strike) + (rate - div_yield + 0.5 * sigma * sigma) * tau) / sd
    d2 = d1 - sd
    out = (strike * math.exp(-rate * tau) * _norm_cdf(-d2)
           - spot * math.exp(-div_yield * tau) * _norm_cdf(-d1))
    # spot == 0 makes d1 = -inf; the limit is the discounted strike
    out = np.where(spot == 0.0, strike * math.exp(-rate * tau), out)
    return float(out) if scalar else out


def bsm_call_price(spot: ArrayLike, strike: ArrayLike, rate: float, div_yield: float,
                   sigma: float, tau: float) -> ArrayLike:
    """European call value under the same model (used for parity checks)."""
    spot = np.asarray(spot, dtype=float)
    strike = np.asarray(strike, dtype=float)
    if np.any(spot < 0) or np.any(strike < 0):
        raise ValueError("spot and strike must be non-negative")
    scalar = spot.ndim == 0 and strike.ndim == 0
    if tau <= 0.0:
        out = np.maximum(spot - strike, 0.0)
        return float(out) if scalar else out
    if sigma <= 0.0:
        out = np.maximum(spot * math.exp(-div_yield * tau)
                         - strike * math.exp(-rate * tau), 0.0)
        return float(out) if scalar else out
    sd = sigma * math.sqrt(tau)
    with np.errstate(divide="ignore"):
        d1 = (np.log(spot / strike) + (rate - div_yield + 0.5 * sigma * sigma) * tau) / sd
    d2 = d1 - sd
    out = (spot * math.exp(-div_yield * tau) * _norm_cdf(d1)
           - strike * math.exp(-rate * tau) * _norm_cdf(d2))
    out = np.where(spot == 0.0, 0.0, out)
    return float(out) if scalar else out


def put_moneyness(spot: float, strike: float, rate: float, tau: float) -> float:
    """Discounted-strike moneyness of a put: K*exp(-r*tau) - S.

    Negative values mean the put is out of the money in present-value
    terms; zero is at the money.
    """
    if spot < 0 or strike < 0:
        raise ValueError("spot and strike must be non-negative")
    return strike * math.exp(-rate * tau) - spot


def select_strike(spot: float, otm_pct: float, strikes: Sequence[float],
                  rate: float, tau: float,
                  grid: float = DEFAULT_STRIKE_GRID) -> float:
    """Pick the listed strike whose moneyness is closest to the target.

    The target is ``-otm_pct/100 * spot`` (a put written otm_pct percent
    below the money). Only strikes divisible by ``grid`` are eligible.
    Ties go to the lower strike.
    """
    if spot <= 0:
        raise ValueError("spot must be positive")
    eligible = sorted(k for k in strikes if k > 0 and _on_grid(k, grid))
    if not eligible:
        raise ValueError("no eligible strikes on the %g-point grid" % grid)
    target = -(otm_pct / 100.0) * spot
    best = None
    best_dist = math.inf
    for k in eligible:
        dist = abs(put_moneyness(spot, k, rate, tau) - target)
        # strict < keeps the lower strike on ties (list is ascending)
        if dist < best_dist:
            best, best_dist = k, dist
    return best


def _on_grid(strike: float, grid: float) -> bool:
    ratio = strike / grid
    return abs(ratio - round(ratio)) < 1e-9


def put_margin(premium: float, spot: float, strike: float,
               multiplier: float = 100.0) -> float:
    """Initial margin for one short put contract, in currency units.

    Requirement per contract is the premium plus the greater of 15% of
    spot less the amount the strike exceeds spot, or a 10%-of-spot
    floor, all scaled by the contract multiplier.
    """
    if premium < 0:
        raise ValueError("premium must be non-negative")
    if spot <= 0 or strike <= 0:
        raise ValueError("spot and strike must be positive")
    core = max(0.15 * spot - max(0.0, strike - spot), 0.10 * spot)
    return (premium + core) * multiplier
