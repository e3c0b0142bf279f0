"""Percentile-rank regime scaling for contract sizing.

The rank of the latest volatility-index value within its trailing window
maps to a de-risking factor: calm regimes (low rank) size fully, feared
regimes (high rank) size down to zero.
"""
from __future__ import annotations

import math

import numpy as np


def percentile_rank(value: float, window: np.ndarray) -> float:
    """Percentile rank of ``value`` inside ``window``, in (0, 100].

    Defined as the mean 1-based position of the value's occurrences in
    the ascending sort of the window, scaled by 100/W. ``value`` must be
    a member of the window (it is normally the latest observation).
    """
    window = np.asarray(window, dtype=float)
    if window.size == 0:
        raise ValueError("window must be non-empty")
    order = np.sort(window)
    positions = np.flatnonzero(order == value) + 1
    if positions.size == 0:
        raise ValueError("value is not a member of the window")
    return 100.0 * positions.sum() / (window.size * positions.size)


def sizing_factor(rank: float) -> float:
    """De-risking multiplier (1 - rank/100), clipped into [0, 1]."""
    if not 0.0 <= rank <= 100.0:
        raise ValueError("rank must lie in [0, 100]")
    return 1.0 - rank / 100.0


def contracts_from_rank(portfolio_value: float, margin_per_contract: float,
                        rank: float, kelly_frac: float = 1.0) -> int:
    """Whole contracts under the rank factor, optionally scaled by a Kelly stake."""
    if margin_per_contract <= 0:
        raise ValueError("margin_per_contract must be positive")
    if kelly_frac < 0:
        raise ValueError("kelly_frac must be non-negative")
    if portfolio_value <= 0:
        return 0
    qty = portfolio_value / margin_per_contract * kelly_frac * sizing_factor(rank)
    return max(int(math.floor(qty)), 0)


def vix_rank_contracts(portfolio_value: float, margin_per_contract: float,
                       vix_value: float, window: np.ndarray) -> int:
    """Size purely from the volatility-index percentile rank."""
    rank = percentile_rank(vix_value, window)
    return contracts_from_rank(portfolio_value, margin_per_contract, rank)


def hybrid_contracts(portfolio_value: float, margin_per_contract: float,
                     kelly_frac: float, vix_value: float,
                     window: np.ndarray) -> int:
    """Size from the product of the Kelly stake and the rank factor."""
    rank = percentile_rank(vix_value, window)
    return contracts_from_rank(portfolio_value, margin_per_contract, rank,
                               kelly_frac=kelly_frac)
