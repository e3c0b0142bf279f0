"""Event-driven daily backtest engine for short-put writing.

One decision per day, 15 minutes after the open: evaluate the rollover
rule against the listed expiries, pick the strike closest to the target
moneyness, size the position with the configured rule (Kelly Monte
Carlo, VIX percentile rank, or their product), and fill at the quote
mid. Positions are marked at the closing quote mid, expiries are
PM-cash-settled against the index close, and the equity curve is
recorded daily at the close.

Runs are deterministic: per-decision RNG streams derive from the config
seed and the decision date, so grid workers reproduce serial results
bit for bit.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .kelly import (SimConfig, contracts_for_fraction, estimate_trade_odds,
                    kelly_fraction)
from .market_data import (MarketDataset, OptionContract, OptionQuote,
                          rate_at, years_to_expiry)
from .metrics import MetricsReport, compute_report, daily_returns, daily_sharpe
from .pricing import put_margin, select_strike
from .vix_rank import percentile_rank, contracts_from_rank
from .vol_estimators import ESTIMATOR_KINDS, bars_required, estimate_sigma

TRADING_DAYS_PER_YEAR = 252

SIZING_KELLY = "kelly"
SIZING_VIX_RANK = "vix_rank"
SIZING_HYBRID = "hybrid"
SIZING_METHODS = (SIZING_KELLY, SIZING_VIX_RANK, SIZING_HYBRID)

VIX_SOURCES = ("vix9d", "vix30d")
VIX_TIMING = ("prior_close", "same_day")

ACTION_OPEN = "open"
ACTION_ROLL_CLOSE = "roll_close"
ACTION_ROLL_OPEN = "roll_open"
ACTION_EXPIRE = "expire_settle"
ACTION_FORCED_CLOSE = "forced_close"

DECISION_DELAY_MIN = 15     # first permitted fill: open + 15 minutes
CUTOFF_BEFORE_CLOSE_MIN = 30  # last permitted fill: close - 30 minutes


@dataclass(frozen=True)
class CostModel:
    commission_per_contract: float = 0.65
    spread_cross_fraction: float = 0.5  # fraction of the full spread crossed

    def __post_init__(self) -> None:
        if self.commission_per_contract < 0:
            raise ValueError("commission must be non-negative")
        if not 0.0 <= self.spread_cross_fraction <= 1.0:
            raise ValueError("spread_cross_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class SimSettings:
    n_paths: int = 10_000
    f_max: float = 1.0
    drift_override: Optional[float] = None

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.f_max <= 0:
            raise ValueError("f_max must be positive")


@dataclass(frozen=True)
class StrategyConfig:
    """One grid point: horizon, moneyness, and a sizing rule with its knobs."""
    target_dte: int
    otm_pct: float
    sizing: str
    estimator_kind: Optional[str] = None
    estimator_memory: Optional[int] = None
    vix_source: Optional[str] = None
    vix_memory: Optional[int] = None
    sim: SimSettings = field(default_factory=SimSettings)
    costs: CostModel = field(default_factory=CostModel)
    start_capital: float = 5_000_000.0
    seed: int = 0
    vix_timing: str = "prior_close"

    def __post_init__(self) -> None:
        if self.target_dte < 0:
            raise ValueError("target_dte must be >= 0")
        if self.otm_pct < 0:
            raise ValueError("otm_pct must be >= 0")
        if self.sizing not in SIZING_METHODS:
            raise ValueError(f"unknown sizing method {self.sizing!r}")
        if self.start_capital <= 0:
            raise ValueError("start_capital must be positive")
        if self.vix_timing not in VIX_TIMING:
            raise ValueError(f"unknown vix_timing {self.vix_timing!r}")
        needs_estimator = self.sizing in (SIZING_KELLY, SIZING_HYBRID)
        has_estimator = self.estimator_kind is not None or self.estimator_memory is not None
        if needs_estimator:
            if self.estimator_kind not in ESTIMATOR_KINDS:
                raise ValueError(f"estimator_kind must be one of {ESTIMATOR_KINDS}")
            if self.estimator_memory is None or self.estimator_memory < 2:
                raise ValueError("estimator_memory must be >= 2")
        elif has_estimator:
            raise ValueError("estimator fields are only valid for kelly/hybrid sizing")
        needs_vix = self.sizing in (SIZING_VIX_RANK, SIZING_HYBRID)
        has_vix = self.vix_source is not None or self.vix_memory is not None
        if needs_vix:
            if self.vix_source not in VIX_SOURCES:
                raise ValueError(f"vix_source must be one of {VIX_SOURCES}")
            if self.vix_memory is None or self.vix_memory < 1:
                raise ValueError("vix_memory must be >= 1")
        elif has_vix:
            raise ValueError("vix fields are only valid for vix_rank/hybrid sizing")

    def key(self) -> Tuple:
        """Stable identity used to order grid output."""
        return (self.sizing, self.target_dte, self.otm_pct,
                self.estimator_kind or "", self.estimator_memory or 0,
                self.vix_source or "", self.vix_memory or 0, self.seed)

    def label(self) -> str:
        parts = [self.sizing, f"dte{self.target_dte}", f"otm{self.otm_pct:g}"]
        if self.estimator_kind:
            parts.append(f"{self.estimator_kind}{self.estimator_memory}")
        if self.vix_source:
            parts.append(f"{self.vix_source}m{self.vix_memory}")
        return "_".join(parts)


@dataclass
class Position:
    contract: OptionContract
    qty: int
    entry_fill: float
    entry_time: datetime
    margin_held: float


@dataclass(frozen=True)
class TradeRecord:
    time: datetime
    action: str
    contract: OptionContract
    qty: int
    fill: float
    commission: float
    realized_pnl: float
    flag: Optional[str] = None

    def line(self) -> str:
        return (f"{self.time.isoformat()} {self.action} {self.contract.expiry} "
                f"K={self.contract.strike:g} qty={self.qty} fill={self.fill!r} "
                f"comm={self.commission!r} pnl={self.realized_pnl!r} "
                f"flag={self.flag}")


@dataclass(frozen=True)
class DecisionRecord:
    """One rollover evaluation, kept for audit and oracle re-checks."""
    day: np.datetime64
    current_dte: Optional[int]
    candidate_dtes: Tuple[int, ...]
    action: str                       # hold | open | roll
    chosen_dte: Optional[int]
    contracts: int
    note: str = ""


@dataclass
class BacktestResult:
    config: StrategyConfig
    equity_times: np.ndarray          # datetime64[m], first entry = period start
    equity: np.ndarray
    trades: List[TradeRecord]
    n_positions: int
    decisions: List[DecisionRecord]
    diagnostics: List[str]

    def returns(self) -> np.ndarray:
        return daily_returns(self.equity)

    def ledger_lines(self) -> List[str]:
        return [t.line() for t in self.trades]


class RolloverAction:
    HOLD = "hold"
    OPEN = "open"
    ROLL = "roll"

    def __init__(self, kind: str, expiry: Optional[np.datetime64] = None,
                 dte: Optional[int] = None):
        self.kind = kind
        self.expiry = expiry
        self.dte = dte


def rollover_decision(current_dte: Optional[int],
                      candidates: Sequence[Tuple[np.datetime64, int]],
                      target_dte: int) -> RolloverAction:
    """Daily hold/open/roll choice against the listed expiries.

    The best candidate minimizes |DTE - target| (ties to the shorter
    expiry). With a position open, rolling requires a strict improvement
    over the current contract's distance; ties hold. No tradable
    expiries holds the day.
    """
    usable = [(exp, dte) for exp, dte in candidates if dte >= 0]
    if not usable:
        return RolloverAction(RolloverAction.HOLD)
    best_exp, best_dte = min(usable, key=lambda c: (abs(c[1] - target_dte), c[1]))
    if current_dte is None:
        return RolloverAction(RolloverAction.OPEN, best_exp, best_dte)
    if abs(current_dte - target_dte) <= abs(best_dte - target_dte):
        return RolloverAction(RolloverAction.HOLD)
    return RolloverAction(RolloverAction.ROLL, best_exp, best_dte)


@dataclass(frozen=True)
class Fill:
    price: float
    cash_delta: float
    commission: float


SELL_TO_OPEN = "sell_to_open"
BUY_TO_CLOSE = "buy_to_close"


def execute_fill(quote: Optional[OptionQuote], side: str, qty: int,
                 costs: CostModel) -> Fill:
    """Fill one order against a quote, crossing part of the spread.

    The configured fraction of the full bid-ask spread is paid from the
    far touch, so 0.5 fills at mid. Cash delta includes commissions.
    """
    if quote is None:
        raise ValueError("absent quote")
    if quote.bid == 0.0 and quote.ask == 0.0:
        raise ValueError("zero quote")
    if qty < 1:
        raise ValueError("qty must be >= 1")
    spread = quote.ask - quote.bid
    commission = costs.commission_per_contract * qty
    mult = quote.contract.multiplier
    if side == SELL_TO_OPEN:
        price = quote.ask - costs.spread_cross_fraction * spread
        return Fill(price, price * mult * qty - commission, commission)
    if side == BUY_TO_CLOSE:
        price = quote.bid + costs.spread_cross_fraction * spread
        return Fill(price, -price * mult * qty - commission, commission)
    raise ValueError(f"unknown side {side!r}")


def settle_at_expiry(position: Position, settlement_price: float,
                     when: datetime) -> TradeRecord:
    """PM cash settlement: the writer pays intrinsic value, no commission."""
    intrinsic = max(position.contract.strike - settlement_price, 0.0)
    mult = position.contract.multiplier
    return TradeRecord(
        time=when, action=ACTION_EXPIRE, contract=position.contract,
        qty=position.qty, fill=intrinsic, commission=0.0,
        realized_pnl=(position.entry_fill - intrinsic) * mult * position.qty)


def buy_and_hold_benchmark(closes: np.ndarray, start_capital: float) -> np.ndarray:
    """Equity of buying the index at the first close and holding."""
    closes = np.asarray(closes, dtype=float)
    if len(closes) == 0:
        raise ValueError("empty index series")
    return start_capital * closes / closes[0]


# ---------------------------------------------------------------------------
# Engine


class _DayFrame:
    """Per-day bar geometry: decision bar, fill window, closing bar."""

    __slots__ = ("cal_index", "day", "decision_idx", "close_idx", "decision_ts",
                 "close_ts", "decision_minute", "day_len", "window_ok")

    def __init__(self, data: MarketDataset, day_pos: int):
        bars = data.index_bars
        lo, hi = int(bars.day_starts[day_pos]), int(bars.day_ends[day_pos])
        self.day = bars.days[day_pos]
        self.cal_index = data.day_index(self.day)
        open_ts = bars.timestamps[lo]
        self.close_ts = bars.timestamps[hi - 1]
        self.close_idx = hi - 1
        target = open_ts + DECISION_DELAY_MIN
        idx = lo + int(np.searchsorted(bars.timestamps[lo:hi], target))
        window_end = self.close_ts - CUTOFF_BEFORE_CLOSE_MIN
        self.window_ok = idx < hi and bars.timestamps[idx] <= window_end
        self.decision_idx = min(idx, hi - 1)
        self.decision_ts = bars.timestamps[self.decision_idx]
        self.decision_minute = self.decision_idx - lo
        self.day_len = hi - lo


def run_backtest(config: StrategyConfig, data: MarketDataset) -> BacktestResult:
    """Run one strategy configuration over a dataset."""
    bars = data.index_bars
    bar_days = bars.days
    missing = ~np.isin(bar_days, data.calendar)
    if np.any(missing):
        raise ValueError(f"bar days missing from calendar: {bar_days[missing][:5]}")

    cash = config.start_capital
    position: Optional[Position] = None
    trades: List[TradeRecord] = []
    decisions: List[DecisionRecord] = []
    diags: List[str] = []
    times: List[np.datetime64] = [bars.timestamps[0]]
    equity: List[float] = [config.start_capital]
    n_positions = 0

    for day_pos in range(len(bar_days)):
        frame = _DayFrame(data, day_pos)
        day = frame.day
        if not frame.window_ok:
            diags.append(f"{day}: no permitted fill window; day skipped")
        else:
            cash, position, opened = _decide_and_trade(
                config, data, frame, cash, position, trades, decisions, diags)
            n_positions += opened

        # end of day: settle, mark, record
        s_close = float(bars.close[frame.close_idx])
        close_dt = frame.close_ts.astype("datetime64[s]").astype(object)
        if position is not None and _as_day64(position.contract.expiry) == day:
            record = settle_at_expiry(position, s_close, close_dt)
            mult = position.contract.multiplier
            cash -= record.fill * mult * position.qty
            trades.append(record)
            position = None
        liability = 0.0
        if position is not None:
            mark = _mark_mid(data, frame.close_ts, position, s_close, diags, day)
            mult = position.contract.multiplier
            liability = mark * mult * position.qty
            position.margin_held = position.qty * put_margin(
                mark, s_close, position.contract.strike, mult)
        times.append(frame.close_ts)
        equity.append(cash - liability)

    return BacktestResult(
        config=config,
        equity_times=np.array(times, dtype="datetime64[m]"),
        equity=np.array(equity, dtype=float),
        trades=trades,
        n_positions=n_positions,
        decisions=decisions,
        diagnostics=diags,
    )


def _as_day64(d) -> np.datetime64:
    return np.datetime64(d, "D")


def _mark_mid(data: MarketDataset, ts: np.datetime64, position: Position,
              spot: float, diags: List[str], day: np.datetime64) -> float:
    quote = data.chains.quote(ts, position.contract.expiry,
                              position.contract.strike)
    if quote is not None:
        return quote.mid
    diags.append(f"{day}: no closing quote for K={position.contract.strike:g} "
                 f"{position.contract.expiry}; marked at intrinsic")
    return max(position.contract.strike - spot, 0.0)


def _decide_and_trade(config: StrategyConfig, data: MarketDataset,
                      frame: _DayFrame, cash: float,
                      position: Optional[Position],
                      trades: List[TradeRecord],
                      decisions: List[DecisionRecord],
                      diags: List[str]) -> Tuple[float, Optional[Position], int]:
    """The open+15min decision: breach check, rollover, sizing, fills."""
    day = frame.day
    ts = frame.decision_ts
    bars = data.index_bars
    s_dec = float(bars.close[frame.decision_idx])
    dec_dt = ts.astype("datetime64[s]").astype(object)

    # margin breach: force-close at the first permitted timestamp
    if position is not None:
        mark = _decision_mark(data, ts, position, s_dec)
        liability = mark * position.contract.multiplier * position.qty
        if position.margin_held > cash - liability:
            quote = data.chains.quote(ts, position.contract.expiry,
                                      position.contract.strike)
            try:
                fill = execute_fill(quote, BUY_TO_CLOSE, position.qty, config.costs)
            except ValueError:
                diags.append(f"{day}: margin breach but no quote to close; holding")
            else:
                cash += fill.cash_delta
                mult = position.contract.multiplier
                trades.append(TradeRecord(
                    time=dec_dt, action=ACTION_FORCED_CLOSE,
                    contract=position.contract, qty=position.qty,
                    fill=fill.price, commission=fill.commission,
                    realized_pnl=(position.entry_fill - fill.price) * mult
                    * position.qty - fill.commission,
                    flag="margin_breach"))
                position = None

    current_dte = None
    if position is not None:
        current_dte = data.trading_dte(day, position.contract.expiry)

    candidates = _tradable_expiries(data, ts, frame.cal_index)
    action = rollover_decision(current_dte, candidates, config.target_dte)

    if action.kind == RolloverAction.HOLD:
        note = "no tradable expiries" if not candidates else ""
        if note:
            diags.append(f"{day}: {note}; holding")
        decisions.append(DecisionRecord(
            day=day, current_dte=current_dte,
            candidate_dtes=tuple(d for _, d in candidates),
            action=action.kind, chosen_dte=None, contracts=0, note=note))
        return cash, position, 0

    roll = action.kind == RolloverAction.ROLL
    if roll:
        quote = data.chains.quote(ts, position.contract.expiry,
                                  position.contract.strike)
        try:
            fill = execute_fill(quote, BUY_TO_CLOSE, position.qty, config.costs)
        except ValueError:
            diags.append(f"{day}: roll aborted, no quote to close "
                         f"K={position.contract.strike:g}; holding")
            decisions.append(DecisionRecord(
                day=day, current_dte=current_dte,
                candidate_dtes=tuple(d for _, d in candidates),
                action=RolloverAction.HOLD, chosen_dte=None, contracts=0,
                note="roll aborted: missing quote"))
            return cash, position, 0
        cash += fill.cash_delta
        mult = position.contract.multiplier
        trades.append(TradeRecord(
            time=dec_dt, action=ACTION_ROLL_CLOSE, contract=position.contract,
            qty=position.qty, fill=fill.price, commission=fill.commission,
            realized_pnl=(position.entry_fill - fill.price) * mult
            * position.qty - fill.commission))
        position = None

    qty, note, premium_quote = _size_position(config, data, frame, cash, s_dec,
                                              action)
    decisions.append(DecisionRecord(
        day=day, current_dte=current_dte,
        candidate_dtes=tuple(d for _, d in candidates),
        action=action.kind, chosen_dte=action.dte, contracts=qty, note=note))
    if qty < 1:
        if note:
            diags.append(f"{day}: no position opened ({note})")
        return cash, position, 0

    fill = execute_fill(premium_quote, SELL_TO_OPEN, qty, config.costs)
    cash += fill.cash_delta
    contract = premium_quote.contract
    margin = put_margin(fill.price, s_dec, contract.strike, contract.multiplier)
    trades.append(TradeRecord(
        time=dec_dt, action=ACTION_ROLL_OPEN if roll else ACTION_OPEN,
        contract=contract, qty=qty, fill=fill.price,
        commission=fill.commission, realized_pnl=-fill.commission))
    position = Position(contract=contract, qty=qty, entry_fill=fill.price,
                        entry_time=dec_dt, margin_held=qty * margin)
    return cash, position, 1


def _decision_mark(data: MarketDataset, ts: np.datetime64, position: Position,
                   spot: float) -> float:
    quote = data.chains.quote(ts, position.contract.expiry,
                              position.contract.strike)
    if quote is not None:
        return quote.mid
    return max(position.contract.strike - spot, 0.0)


def _tradable_expiries(data: MarketDataset, ts: np.datetime64,
                       cal_index: int) -> List[Tuple[np.datetime64, int]]:
    out = []
    for exp in data.chains.expiries_at(ts):
        pos = int(np.searchsorted(data.calendar, exp))
        if pos >= len(data.calendar) or data.calendar[pos] != exp:
            continue
        dte = pos - cal_index
        if dte >= 0:
            out.append((exp, dte))
    return out


def _sigma_for_day(config: StrategyConfig, data: MarketDataset,
                   cal_day: np.datetime64) -> Tuple[Optional[float], str]:
    """Annualized volatility from trailing daily bars, excluding the day."""
    daily = data.daily_bars
    pos = int(np.searchsorted(daily.days, _as_day64(cal_day)))
    needed = bars_required(config.estimator_kind, config.estimator_memory)
    if pos < needed:
        return None, "estimator warm-up"
    est = estimate_sigma(config.estimator_kind,
                         daily.open[:pos], daily.high[:pos],
                         daily.low[:pos], daily.close[:pos],
                         config.estimator_memory)
    note = "variance clamped to zero" if est.clamped else ""
    return est.sigma, note


def _vix_window(config: StrategyConfig, data: MarketDataset,
                day: np.datetime64) -> Optional[np.ndarray]:
    series = data.vix9d if config.vix_source == "vix9d" else data.vix30d
    window = series.trailing(day, config.vix_memory,
                             include_day=config.vix_timing == "same_day")
    if len(window) < config.vix_memory:
        return None
    return window


def _chosen_quote(config: StrategyConfig, data: MarketDataset, frame: _DayFrame,
                  s_dec: float, action: RolloverAction) -> Optional[OptionQuote]:
    rate = rate_at(data.risk_free, frame.day)
    tau = years_to_expiry(action.dte, frame.decision_minute, frame.day_len)
    strikes, _, _ = data.chains.strikes_at(frame.decision_ts, action.expiry)
    strike = select_strike(s_dec, config.otm_pct, strikes, rate, tau,
                           grid=data.strike_grid)
    return data.chains.quote(frame.decision_ts, action.expiry, strike)


def _size_position(config: StrategyConfig, data: MarketDataset, frame: _DayFrame,
                   cash: float, s_dec: float, action: RolloverAction
                   ) -> Tuple[int, str, Optional[OptionQuote]]:
    """Contract count for the chosen expiry under the configured sizing rule."""
    day = frame.day
    try:
        quote = _chosen_quote(config, data, frame, s_dec, action)
    except ValueError as exc:
        return 0, f"strike selection failed: {exc}", None
    if quote is None:
        return 0, "missing premium quote", None
    costs = config.costs
    premium = quote.ask - costs.spread_cross_fraction * (quote.ask - quote.bid)
    if premium <= 0.0:
        return 0, "zero premium", None
    strike = quote.contract.strike
    margin = put_margin(premium, s_dec, strike, quote.contract.multiplier)
    pv = cash  # any prior position was closed before sizing

    kelly_clamped = None
    if config.sizing in (SIZING_KELLY, SIZING_HYBRID):
        sigma, note = _sigma_for_day(config, data, day)
        if sigma is None:
            return 0, note, None
        rate = rate_at(data.risk_free, day)
        div = rate_at(data.dividend_yield, day)
        tau = years_to_expiry(action.dte, frame.decision_minute, frame.day_len)
        if action.dte == 0:
            horizon = tau
            residual = 0.0
        else:
            horizon = 1.0 / TRADING_DAYS_PER_YEAR
            residual = tau - horizon
        sim = SimConfig(
            s0=s_dec, sigma=sigma, rate=rate, div_yield=div, horizon=horizon,
            steps=1, n_paths=config.sim.n_paths,
            seed=(config.seed, int(_as_day64(day).astype(np.int64))),
            drift=config.sim.drift_override)
        odds = estimate_trade_odds(premium, strike, sim, residual_tau=residual)
        kelly_clamped = kelly_fraction(odds, cap=config.sim.f_max).clamped

    if config.sizing == SIZING_KELLY:
        return contracts_for_fraction(pv, margin, kelly_clamped), "", quote

    window = _vix_window(config, data, day)
    if window is None:
        return 0, "vix window warm-up", None
    rank = percentile_rank(float(window[-1]), window)
    if config.sizing == SIZING_VIX_RANK:
        return contracts_from_rank(pv, margin, rank), "", quote
    return contracts_from_rank(pv, margin, rank, kelly_frac=kelly_clamped), "", quote


# ---------------------------------------------------------------------------
# Grid orchestration


@dataclass
class GridRunRecord:
    config: StrategyConfig
    result: Optional[BacktestResult]
    report: Optional[MetricsReport]
    benchmark_daily_sharpe: Optional[float]
    error: Optional[str] = None


_WORKER_DATA: Optional[MarketDataset] = None


def _init_worker(data: MarketDataset) -> None:
    global _WORKER_DATA
    _WORKER_DATA = data


def _run_one(config: StrategyConfig, data: MarketDataset,
             benchmark_sr: Optional[float]) -> GridRunRecord:
    try:
        result = run_backtest(config, data)
        report = compute_report(result.equity,
                                benchmark_daily_sharpe=benchmark_sr)
        return GridRunRecord(config, result, report, benchmark_sr)
    except Exception as exc:  # isolate per-config failures
        return GridRunRecord(config, None, None, benchmark_sr,
                             error=f"{type(exc).__name__}: {exc}")


def _worker_run(args: Tuple[StrategyConfig, Optional[float]]) -> GridRunRecord:
    config, benchmark_sr = args
    return _run_one(config, _WORKER_DATA, benchmark_sr)


def benchmark_daily_sharpe_of(data: MarketDataset) -> Optional[float]:
    """Daily Sharpe of buy-and-hold on the dataset's index closes."""
    closes = data.daily_bars.close
    if len(closes) < 3:
        return None
    bench = buy_and_hold_benchmark(closes, 1.0)
    rets = daily_returns(bench)
    if float(np.std(rets, ddof=1)) == 0.0:
        return None
    return daily_sharpe(rets)


def run_grid(configs: Sequence[StrategyConfig], data: MarketDataset,
             jobs: int = 1) -> List[GridRunRecord]:
    """Run many configs; output is independent of worker count.

    Failures are isolated per config. Records come back in the order of
    ``configs``.
    """
    if not configs:
        raise ValueError("configs must be non-empty")
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    benchmark_sr = benchmark_daily_sharpe_of(data)
    if jobs == 1 or len(configs) == 1:
        return [_run_one(cfg, data, benchmark_sr) for cfg in configs]
    tasks = [(cfg, benchmark_sr) for cfg in configs]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                             initargs=(data,)) as pool:
        return list(pool.map(_worker_run, tasks, chunksize=1))
