"""Kelly-criterion position sizing for short option trades.

The workflow: simulate terminal index levels under GBM over the planned
holding period, value the short put at the horizon, convert the paths
into per-premium trade returns, estimate win/loss odds, and map them to
a capped Kelly fraction and a contract count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .pricing import bsm_put_price

Seed = Union[int, Tuple[int, ...]]


@dataclass(frozen=True)
class SimConfig:
    """Inputs for a terminal-price Monte Carlo run.

    ``horizon`` is in years. ``drift`` defaults to rate - div_yield
    (risk-neutral carry); pass an override to simulate under a different
    measure.
    """
    s0: float
    sigma: float
    rate: float
    div_yield: float
    horizon: float
    steps: int = 1
    n_paths: int = 10_000
    seed: Seed = 0
    drift: Optional[float] = None

    def __post_init__(self) -> None:
        if self.s0 <= 0:
            raise ValueError("s0 must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")
        if self.steps < 1 or self.n_paths < 1:
            raise ValueError("steps and n_paths must be >= 1")

    @property
    def effective_drift(self) -> float:
        return self.rate - self.div_yield if self.drift is None else self.drift


def simulate_terminal_prices(cfg: SimConfig) -> np.ndarray:
    """Terminal index levels from discretized GBM.

    Each step adds (mu - sigma^2/2) * dt + sigma * sqrt(dt) * Z to the log
    price. With sigma = 0 every path lands on s0 * exp(mu * horizon).
    """
    mu = cfg.effective_drift
    if cfg.sigma == 0.0 or cfg.horizon == 0.0:
        return np.full(cfg.n_paths, cfg.s0 * math.exp(mu * cfg.horizon))
    dt = cfg.horizon / cfg.steps
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    z = rng.standard_normal((cfg.n_paths, cfg.steps))
    log_move = (mu - 0.5 * cfg.sigma ** 2) * dt * cfg.steps \
        + cfg.sigma * math.sqrt(dt) * z.sum(axis=1)
    return cfg.s0 * np.exp(log_move)


@dataclass(frozen=True)
class TradeOdds:
    """Win/loss statistics of a short put, per unit premium.

    ``avg_win`` and ``avg_loss`` are magnitudes (both non-negative);
    either is None when its side has no paths. Zero-return paths count
    as losses.
    """
    win_prob: float
    avg_win: Optional[float]
    avg_loss: Optional[float]
    n_win: int
    n_loss: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.win_prob <= 1.0:
            raise ValueError("win_prob must lie in [0, 1]")
        if self.avg_win is not None and self.avg_win < 0:
            raise ValueError("avg_win must be non-negative")
        if self.avg_loss is not None and self.avg_loss < 0:
            raise ValueError("avg_loss must be non-negative")


def estimate_trade_odds(premium: float, strike: float, cfg: SimConfig,
                        residual_tau: float = 0.0) -> TradeOdds:
    """Estimate short-put odds by simulation.

    The put is valued at the horizon with ``residual_tau`` years left
    (zero when held to expiry, where the value is intrinsic). The return
    per path is (premium - horizon value) / premium.
    """
    if premium <= 0:
        raise ValueError("premium must be positive")
    terminal = simulate_terminal_prices(cfg)
    value = bsm_put_price(terminal, strike, cfg.rate, cfg.div_yield,
                          cfg.sigma, residual_tau)
    returns = (premium - np.asarray(value)) / premium
    wins = returns > 0.0
    n_win = int(wins.sum())
    n_loss = len(returns) - n_win
    avg_win = float(returns[wins].mean()) if n_win else None
    avg_loss = float(-returns[~wins].mean()) if n_loss else None
    return TradeOdds(win_prob=n_win / len(returns), avg_win=avg_win,
                     avg_loss=avg_loss, n_win=n_win, n_loss=n_loss)


def log_growth(fraction: float, win_prob: float, win_frac: float) -> float:
    """Expected log growth of wealth betting ``fraction`` on a binary trade.

    The win pays ``win_frac`` per unit staked and the loss forfeits the
    stake. Fractions at or above 1 hit log(0).
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must lie in [0, 1)")
    if not 0.0 <= win_prob <= 1.0:
        raise ValueError("win_prob must lie in [0, 1]")
    if win_frac <= 0:
        raise ValueError("win_frac must be positive")
    return (win_prob * math.log1p(win_frac * fraction)
            + (1.0 - win_prob) * math.log1p(-fraction))


def kelly_fraction_binary(win_prob: float, win_frac: float) -> float:
    """Growth-optimal stake when losses forfeit the whole stake."""
    if not 0.0 <= win_prob <= 1.0:
        raise ValueError("win_prob must lie in [0, 1]")
    if win_frac <= 0:
        raise ValueError("win_frac must be positive")
    if win_prob == 1.0:  # certain win: exact boundary, no rounding residue
        return 1.0
    return (win_prob * (win_frac + 1.0) - 1.0) / win_frac


@dataclass(frozen=True)
class KellyFraction:
    raw: float
    clamped: float
    cap: float


def kelly_fraction(odds: TradeOdds, cap: float = 1.0) -> KellyFraction:
    """Partial-loss Kelly stake, clamped to [0, cap].

    raw = win_prob / avg_loss - (1 - win_prob) / avg_win. Degenerate
    sides are resolved conservatively: no winning paths stakes nothing;
    no losing paths (or zero average loss) stakes the cap.
    """
    if cap <= 0:
        raise ValueError("cap must be positive")
    if odds.avg_win is None or odds.avg_win == 0.0:
        raw = 0.0
    elif odds.avg_loss is None or odds.avg_loss == 0.0:
        raw = cap
    else:
        raw = odds.win_prob / odds.avg_loss - (1.0 - odds.win_prob) / odds.avg_win
    return KellyFraction(raw=raw, clamped=min(max(raw, 0.0), cap), cap=cap)


def contracts_for_fraction(portfolio_value: float, margin_per_contract: float,
                           fraction: float) -> int:
    """Whole contracts whose margin consumes ``fraction`` of portfolio value."""
    if margin_per_contract <= 0:
        raise ValueError("margin_per_contract must be positive")
    if fraction < 0:
        raise ValueError("fraction must be non-negative")
    if portfolio_value <= 0:
        return 0
    return max(int(math.floor(portfolio_value / margin_per_contract * fraction)), 0)
