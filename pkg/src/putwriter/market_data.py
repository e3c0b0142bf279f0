"""Market data containers, CSV ingestion, and synthetic market generation.

Real data arrives as CSV files (minute bars, option quotes, daily series)
tied together by a JSON manifest. Synthetic markets are generated from a
GBM index path with option quotes priced under a configurable implied
volatility, which makes every downstream module testable without any
licensed exchange data.

Containers are column-oriented (numpy arrays) with row-level dataclass
views, so a two-year minute dataset stays cheap to hold and to share
across parallel backtest workers.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .pricing import bsm_put_price

MINUTES_PER_SESSION = 390
SESSION_OPEN_MINUTE = 9 * 60 + 30  # 09:30 exchange time

DateLike = Union[str, date, np.datetime64]


def _as_day(value: DateLike) -> np.datetime64:
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[D]")
    if isinstance(value, datetime):
        return np.datetime64(value.date(), "D")
    if isinstance(value, date):
        return np.datetime64(value, "D")
    return np.datetime64(str(value), "D")


def _bad_rows(mask: np.ndarray, what: str, limit: int = 5) -> None:
    """Raise naming the offending 1-based data rows when any mask entry is set."""
    if not np.any(mask):
        return
    rows = (np.flatnonzero(mask) + 1)[:limit]
    listed = ", ".join(str(r) for r in rows)
    more = "" if np.count_nonzero(mask) <= limit else ", ..."
    raise ValueError(f"{what} (data row{'s' if len(rows) > 1 else ''} {listed}{more})")


# ---------------------------------------------------------------------------
# Row-level records


@dataclass(frozen=True)
class MinuteBar:
    timestamp: datetime
    open: float
    high: float
    low: float
    close: float
    bid: float
    ask: float


@dataclass(frozen=True)
class DailyBar:
    day: date
    open: float
    high: float
    low: float
    close: float


@dataclass(frozen=True)
class OptionContract:
    """A PM-cash-settled European put identified by strike and expiry."""
    underlying: str
    strike: float
    expiry: date
    multiplier: float = 100.0
    settlement: str = "PM-cash"

    def __post_init__(self) -> None:
        if self.strike <= 0:
            raise ValueError("strike must be positive")


@dataclass(frozen=True)
class OptionQuote:
    timestamp: datetime
    contract: OptionContract
    bid: float
    ask: float

    @property
    def mid(self) -> float:
        return 0.5 * (self.bid + self.ask)


@dataclass(frozen=True)
class SeriesPoint:
    day: date
    value: float


# ---------------------------------------------------------------------------
# Column-oriented series


class MinuteBarSeries:
    """Strictly time-ordered intraday bars held as parallel arrays."""

    def __init__(self, timestamps: np.ndarray, opens: np.ndarray, highs: np.ndarray,
                 lows: np.ndarray, closes: np.ndarray, bids: np.ndarray,
                 asks: np.ndarray, validate: bool = True):
        self.timestamps = np.asarray(timestamps, dtype="datetime64[m]")
        self.open = np.asarray(opens, dtype=float)
        self.high = np.asarray(highs, dtype=float)
        self.low = np.asarray(lows, dtype=float)
        self.close = np.asarray(closes, dtype=float)
        self.bid = np.asarray(bids, dtype=float)
        self.ask = np.asarray(asks, dtype=float)
        if validate:
            self._validate()
        days = self.timestamps.astype("datetime64[D]")
        self.days, self.day_starts = np.unique(days, return_index=True)
        self.day_ends = np.append(self.day_starts[1:], len(self.timestamps))

    def _validate(self) -> None:
        n = len(self.timestamps)
        for arr, name in ((self.open, "open"), (self.high, "high"), (self.low, "low"),
                          (self.close, "close"), (self.bid, "bid"), (self.ask, "ask")):
            if len(arr) != n:
                raise ValueError(f"{name} column length {len(arr)} != {n}")
            _bad_rows(~np.isfinite(arr) | (arr <= 0), f"nonpositive or non-finite {name}")
        if n == 0:
            raise ValueError("empty bar series")
        _bad_rows(np.diff(self.timestamps.astype(np.int64)) <= 0,
                  "timestamps not strictly increasing")
        _bad_rows(self.low > np.minimum(self.open, self.close),
                  "low above min(open, close)")
        _bad_rows(self.high < np.maximum(self.open, self.close),
                  "high below max(open, close)")
        _bad_rows(self.bid > self.ask, "bid above ask")

    def __len__(self) -> int:
        return len(self.timestamps)

    def __getitem__(self, i: int) -> MinuteBar:
        return MinuteBar(
            timestamp=self.timestamps[i].astype("datetime64[s]").item(),
            open=float(self.open[i]), high=float(self.high[i]),
            low=float(self.low[i]), close=float(self.close[i]),
            bid=float(self.bid[i]), ask=float(self.ask[i]))

    def day_slice(self, day: DateLike) -> slice:
        """Index range of the bars belonging to one trading day."""
        d = _as_day(day)
        pos = np.searchsorted(self.days, d)
        if pos >= len(self.days) or self.days[pos] != d:
            raise KeyError(f"no bars on {d}")
        return slice(int(self.day_starts[pos]), int(self.day_ends[pos]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MinuteBarSeries):
            return NotImplemented
        return (np.array_equal(self.timestamps, other.timestamps)
                and np.array_equal(self.open, other.open)
                and np.array_equal(self.high, other.high)
                and np.array_equal(self.low, other.low)
                and np.array_equal(self.close, other.close)
                and np.array_equal(self.bid, other.bid)
                and np.array_equal(self.ask, other.ask))


class DailyBarSeries:
    """Daily OHLC bars as parallel arrays keyed by trading date."""

    def __init__(self, days: np.ndarray, opens: np.ndarray, highs: np.ndarray,
                 lows: np.ndarray, closes: np.ndarray):
        self.days = np.asarray(days, dtype="datetime64[D]")
        self.open = np.asarray(opens, dtype=float)
        self.high = np.asarray(highs, dtype=float)
        self.low = np.asarray(lows, dtype=float)
        self.close = np.asarray(closes, dtype=float)
        if len(self.days) and np.any(np.diff(self.days.astype(np.int64)) <= 0):
            raise ValueError("daily bars must be strictly date-ordered")

    def __len__(self) -> int:
        return len(self.days)

    def __getitem__(self, i: int) -> DailyBar:
        return DailyBar(day=self.days[i].astype(object), open=float(self.open[i]),
                        high=float(self.high[i]), low=float(self.low[i]),
                        close=float(self.close[i]))

    def index_of(self, day: DateLike) -> int:
        d = _as_day(day)
        pos = int(np.searchsorted(self.days, d))
        if pos >= len(self.days) or self.days[pos] != d:
            raise KeyError(f"no daily bar on {d}")
        return pos

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DailyBarSeries):
            return NotImplemented
        return (np.array_equal(self.days, other.days)
                and np.array_equal(self.open, other.open)
                and np.array_equal(self.high, other.high)
                and np.array_equal(self.low, other.low)
                and np.array_equal(self.close, other.close))


class DateSeries:
    """A date-indexed scalar series with step (last-known-value) lookup."""

    def __init__(self, days: np.ndarray, values: np.ndarray, name: str = "series"):
        self.days = np.asarray(days, dtype="datetime64[D]")
        self.values = np.asarray(values, dtype=float)
        self.name = name
        if len(self.days) != len(self.values):
            raise ValueError("days and values must have equal length")
        if len(self.days) == 0:
            raise ValueError(f"empty {name}")
        _bad_rows(np.diff(self.days.astype(np.int64)) <= 0,
                  f"{name} dates not strictly increasing")
        _bad_rows(~np.isfinite(self.values), f"non-finite {name} value")

    def __len__(self) -> int:
        return len(self.days)

    def __getitem__(self, i: int) -> SeriesPoint:
        return SeriesPoint(day=self.days[i].astype(object), value=float(self.values[i]))

    def value_at(self, day: DateLike) -> float:
        """Most recent value at or before ``day``."""
        d = _as_day(day)
        pos = int(np.searchsorted(self.days, d, side="right")) - 1
        if pos < 0:
            raise ValueError(f"{d} precedes the first {self.name} observation "
                             f"({self.days[0]})")
        return float(self.values[pos])

    def trailing(self, day: DateLike, count: int, include_day: bool) -> np.ndarray:
        """Up to ``count`` values ending at ``day`` (inclusive or exclusive)."""
        d = _as_day(day)
        side = "right" if include_day else "left"
        end = int(np.searchsorted(self.days, d, side=side))
        return self.values[max(end - count, 0):end]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DateSeries):
            return NotImplemented
        return (np.array_equal(self.days, other.days)
                and np.array_equal(self.values, other.values))


def rate_at(series: DateSeries, day: DateLike) -> float:
    """Step-interpolated rate lookup: most recent observation at or before day."""
    return series.value_at(day)


class OptionChains:
    """All option quotes of a dataset, indexed by timestamp and expiry.

    The logical structure is expiry -> strike -> quote series; physically
    the quotes live in flat arrays sorted by (timestamp, expiry, strike)
    for cheap per-decision lookup.
    """

    def __init__(self, timestamps: np.ndarray, expiries: np.ndarray,
                 strikes: np.ndarray, bids: np.ndarray, asks: np.ndarray,
                 underlying: str = "INDEX", validate: bool = True):
        timestamps = np.asarray(timestamps, dtype="datetime64[m]")
        expiries = np.asarray(expiries, dtype="datetime64[D]")
        strikes = np.asarray(strikes, dtype=float)
        bids = np.asarray(bids, dtype=float)
        asks = np.asarray(asks, dtype=float)
        if validate:
            _bad_rows(strikes <= 0, "nonpositive strike")
            _bad_rows(bids < 0, "negative bid")
            _bad_rows(bids > asks, "bid above ask")
        order = np.lexsort((strikes, expiries.astype(np.int64),
                            timestamps.astype(np.int64)))
        self.timestamps = timestamps[order]
        self.expiries = expiries[order]
        self.strikes = strikes[order]
        self.bids = bids[order]
        self.asks = asks[order]
        self.underlying = underlying
        self._index: Dict[int, Dict[int, Tuple[int, int]]] = {}
        ts_i = self.timestamps.astype(np.int64)
        ex_i = self.expiries.astype(np.int64)
        boundaries = np.flatnonzero(np.diff(ts_i) != 0) + 1
        for lo, hi in zip(np.append(0, boundaries),
                          np.append(boundaries, len(ts_i))):
            if hi <= lo:
                continue
            per_exp: Dict[int, Tuple[int, int]] = {}
            sub = ex_i[lo:hi]
            ex_bounds = np.flatnonzero(np.diff(sub) != 0) + 1
            for elo, ehi in zip(np.append(0, ex_bounds),
                                np.append(ex_bounds, len(sub))):
                per_exp[int(sub[elo])] = (int(lo + elo), int(lo + ehi))
            self._index[int(ts_i[lo])] = per_exp

    def __len__(self) -> int:
        return len(self.timestamps)

    @staticmethod
    def _ts_key(ts: np.datetime64) -> int:
        return int(np.datetime64(ts, "m").astype(np.int64))

    def expiries_at(self, ts: np.datetime64) -> List[np.datetime64]:
        """Expiries with any quote at exactly this timestamp, ascending."""
        per_exp = self._index.get(self._ts_key(ts))
        if not per_exp:
            return []
        return [np.datetime64(e, "D") for e in sorted(per_exp)]

    def strikes_at(self, ts: np.datetime64,
                   expiry: DateLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(strikes, bids, asks) quoted at a timestamp for one expiry."""
        per_exp = self._index.get(self._ts_key(ts))
        if not per_exp:
            return (np.empty(0), np.empty(0), np.empty(0))
        key = int(_as_day(expiry).astype(np.int64))
        span = per_exp.get(key)
        if span is None:
            return (np.empty(0), np.empty(0), np.empty(0))
        lo, hi = span
        return (self.strikes[lo:hi], self.bids[lo:hi], self.asks[lo:hi])

    def quote(self, ts: np.datetime64, expiry: DateLike,
              strike: float) -> Optional[OptionQuote]:
        """The exact quote for (timestamp, expiry, strike), or None."""
        strikes, bids, asks = self.strikes_at(ts, expiry)
        pos = int(np.searchsorted(strikes, strike))
        if pos >= len(strikes) or strikes[pos] != strike:
            return None
        contract = OptionContract(underlying=self.underlying, strike=float(strike),
                                  expiry=_as_day(expiry).astype(object))
        when = np.datetime64(ts, "s").astype(object)
        return OptionQuote(timestamp=when, contract=contract,
                           bid=float(bids[pos]), ask=float(asks[pos]))

    def series(self, expiry: DateLike, strike: float) -> List[OptionQuote]:
        """Every quote of one contract in time order."""
        mask = (self.expiries == _as_day(expiry)) & (self.strikes == strike)
        return [OptionQuote(
            timestamp=np.datetime64(t, "s").astype(object),
            contract=OptionContract(underlying=self.underlying, strike=float(strike),
                                    expiry=_as_day(expiry).astype(object)),
            bid=float(b), ask=float(a))
            for t, b, a in zip(self.timestamps[mask], self.bids[mask],
                               self.asks[mask])]

    def all_expiries(self) -> np.ndarray:
        return np.unique(self.expiries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OptionChains):
            return NotImplemented
        return (self.underlying == other.underlying
                and np.array_equal(self.timestamps, other.timestamps)
                and np.array_equal(self.expiries, other.expiries)
                and np.array_equal(self.strikes, other.strikes)
                and np.array_equal(self.bids, other.bids)
                and np.array_equal(self.asks, other.asks))


# ---------------------------------------------------------------------------
# Dataset


@dataclass(eq=False)
class MarketDataset:
    """Everything a backtest consumes, immutable once constructed."""
    index_bars: MinuteBarSeries
    daily_bars: DailyBarSeries
    chains: OptionChains
    vix9d: DateSeries
    vix30d: DateSeries
    risk_free: DateSeries
    dividend_yield: DateSeries
    calendar: np.ndarray  # trading days, datetime64[D], ascending
    underlying: str = "INDEX"
    strike_grid: float = 25.0

    def __post_init__(self) -> None:
        self.calendar = np.asarray(self.calendar, dtype="datetime64[D]")
        if len(self.calendar) == 0:
            raise ValueError("empty trading calendar")
        if np.any(np.diff(self.calendar.astype(np.int64)) <= 0):
            raise ValueError("calendar must be strictly increasing")
        if len(self.chains):
            first = self.index_bars.timestamps[0].astype("datetime64[D]")
            if np.any(self.chains.expiries < first):
                raise ValueError("chain expiry precedes the first bar date")

    def day_index(self, day: DateLike) -> int:
        """Position of a trading day in the calendar."""
        d = _as_day(day)
        pos = int(np.searchsorted(self.calendar, d))
        if pos >= len(self.calendar) or self.calendar[pos] != d:
            raise KeyError(f"{d} is not a trading day in this calendar")
        return pos

    def trading_dte(self, day: DateLike, expiry: DateLike) -> int:
        """Trading days from ``day`` until ``expiry`` (0 = expires today)."""
        return self.day_index(expiry) - self.day_index(day)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MarketDataset):
            return NotImplemented
        return (self.index_bars == other.index_bars
                and self.daily_bars == other.daily_bars
                and self.chains == other.chains
                and self.vix9d == other.vix9d
                and self.vix30d == other.vix30d
                and self.risk_free == other.risk_free
                and self.dividend_yield == other.dividend_yield
                and np.array_equal(self.calendar, other.calendar)
                and self.underlying == other.underlying
                and self.strike_grid == other.strike_grid)


def resample_daily(bars: MinuteBarSeries,
                   calendar: Optional[np.ndarray] = None) -> DailyBarSeries:
    """Aggregate minute bars to daily OHLC (first open, max, min, last close)."""
    if len(bars) == 0:
        raise ValueError("empty bar series")
    days = bars.days
    if calendar is not None:
        cal = np.asarray(calendar, dtype="datetime64[D]")
        missing = ~np.isin(days, cal)
        if np.any(missing):
            raise ValueError(f"bars on non-calendar days: {days[missing][:5]}")
    n = len(days)
    opens = np.empty(n)
    highs = np.empty(n)
    lows = np.empty(n)
    closes = np.empty(n)
    for i, (lo, hi) in enumerate(zip(bars.day_starts, bars.day_ends)):
        opens[i] = bars.open[lo]
        closes[i] = bars.close[hi - 1]
        highs[i] = bars.high[lo:hi].max()
        lows[i] = bars.low[lo:hi].min()
    return DailyBarSeries(days, opens, highs, lows, closes)


# ---------------------------------------------------------------------------
# CSV loading

MINUTE_SCHEMA = {"timestamp": "timestamp", "open": "open", "high": "high",
                 "low": "low", "close": "close", "bid": "bid", "ask": "ask"}
QUOTE_SCHEMA = {"timestamp": "timestamp", "expiry": "expiry", "strike": "strike",
                "bid": "bid", "ask": "ask"}
SERIES_SCHEMA = {"date": "date", "value": "value"}


def _read_csv(path: Union[str, Path], schema: Mapping[str, str],
              defaults: Mapping[str, str]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    columns = dict(defaults)
    columns.update(schema or {})
    # round_trip float parsing keeps serialize/load exact to the bit
    df = pd.read_csv(path, float_precision="round_trip")
    missing = [col for col in columns.values() if col not in df.columns]
    if missing:
        raise ValueError(f"{path.name}: missing columns {missing}; "
                         f"found {list(df.columns)}")
    return df.rename(columns={v: k for k, v in columns.items()})


def _to_float(df: pd.DataFrame, col: str, path: str) -> np.ndarray:
    try:
        return pd.to_numeric(df[col], errors="raise").to_numpy(dtype=float)
    except (ValueError, TypeError) as exc:
        raise ValueError(f"{path}: unparseable {col} column: {exc}") from exc


def load_minute_bars(path: Union[str, Path],
                     schema: Optional[Mapping[str, str]] = None) -> MinuteBarSeries:
    """Parse a minute-bar CSV; rows violating bar invariants are rejected."""
    df = _read_csv(path, schema or {}, MINUTE_SCHEMA)
    name = Path(path).name
    try:
        ts = pd.to_datetime(df["timestamp"]).to_numpy().astype("datetime64[m]")
    except (ValueError, TypeError) as exc:
        raise ValueError(f"{name}: unparseable timestamp column: {exc}") from exc
    return MinuteBarSeries(ts, *(_to_float(df, c, name) for c in
                                 ("open", "high", "low", "close", "bid", "ask")))


def load_option_quotes(path: Union[str, Path],
                       schema: Optional[Mapping[str, str]] = None,
                       underlying: str = "INDEX") -> OptionChains:
    """Parse an option-quote CSV into chains."""
    df = _read_csv(path, schema or {}, QUOTE_SCHEMA)
    name = Path(path).name
    try:
        ts = pd.to_datetime(df["timestamp"]).to_numpy().astype("datetime64[m]")
        expiry = pd.to_datetime(df["expiry"]).to_numpy().astype("datetime64[D]")
    except (ValueError, TypeError) as exc:
        raise ValueError(f"{name}: unparseable timestamp/expiry column: {exc}") from exc
    return OptionChains(ts, expiry,
                        _to_float(df, "strike", name),
                        _to_float(df, "bid", name),
                        _to_float(df, "ask", name),
                        underlying=underlying)


def load_date_series(path: Union[str, Path],
                     schema: Optional[Mapping[str, str]] = None,
                     name: str = "series", positive: bool = False) -> DateSeries:
    """Parse a (date, value) CSV into a DateSeries."""
    df = _read_csv(path, schema or {}, SERIES_SCHEMA)
    fname = Path(path).name
    try:
        days = pd.to_datetime(df["date"]).to_numpy().astype("datetime64[D]")
    except (ValueError, TypeError) as exc:
        raise ValueError(f"{fname}: unparseable date column: {exc}") from exc
    values = _to_float(df, "value", fname)
    if positive:
        _bad_rows(values <= 0, f"{name} values must be positive")
    return DateSeries(days, values, name=name)


# ---------------------------------------------------------------------------
# Synthetic markets


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic market.

    The index follows discretized GBM with annualized log-drift ``drift``
    and volatility ``sigma`` over ``minutes_per_day`` intraday steps per
    trading day (no overnight gaps). Option quote mids are exact BSM
    values under ``implied_sigma`` (defaulting to ``sigma``); keeping the
    two apart creates a controllable volatility risk premium. The VIX
    proxy series is implied_sigma x 100.

    Quotes are generated at two intraday minutes per day: the decision
    bar (open + ``decision_minute``) and the closing bar. Strikes cover
    ``strike_span`` times that day's decision-bar spot, on the grid.
    """
    start_date: str = "2022-01-03"
    n_days: int = 504
    minutes_per_day: int = MINUTES_PER_SESSION
    s0: float = 4000.0
    sigma: float = 0.2
    drift: float = 0.05
    implied_sigma: Optional[float] = None
    rate: float = 0.02
    div_yield: float = 0.015
    spread_fraction: float = 0.01
    strike_grid: float = 25.0
    strike_span: Tuple[float, float] = (0.70, 1.15)
    expiry_every: int = 1
    max_quote_dte: int = 8
    decision_minute: int = 15
    include_options: bool = True
    underlying: str = "SYNTH"

    @property
    def implied(self) -> float:
        return self.sigma if self.implied_sigma is None else self.implied_sigma

    def validate(self) -> None:
        if self.s0 <= 0:
            raise ValueError("s0 must be positive")
        if self.sigma < 0 or self.implied < 0:
            raise ValueError("volatilities must be non-negative")
        if not 0.0 <= self.spread_fraction <= 2.0:
            raise ValueError("spread_fraction must lie in [0, 2]")
        if self.n_days < 1 or self.minutes_per_day < 1:
            raise ValueError("n_days and minutes_per_day must be >= 1")
        if self.expiry_every < 1:
            raise ValueError("expiry_every must be >= 1 (empty expiry ladder)")
        if self.include_options:
            if self.max_quote_dte < 0:
                raise ValueError("max_quote_dte must be >= 0")
            if self.minutes_per_day <= self.decision_minute:
                raise ValueError("decision_minute outside the trading session")
        if not 0 < self.strike_span[0] <= self.strike_span[1]:
            raise ValueError("strike_span must be an increasing positive pair")


def trading_calendar(start: DateLike, n_days: int) -> np.ndarray:
    """``n_days`` consecutive weekdays starting at (or rolled onto) ``start``."""
    first = _as_day(start)
    return np.busday_offset(first, np.arange(n_days), roll="forward")


def day_fraction_remaining(minute: int, minutes_per_day: int) -> float:
    """Fraction of the trading day left after the given intraday bar."""
    if minutes_per_day <= 1:
        return 0.0
    return (minutes_per_day - 1 - minute) / (minutes_per_day - 1)


def years_to_expiry(dte_days: int, minute: int, minutes_per_day: int,
                    periods_per_year: int = 252) -> float:
    """Time to the expiry-day close, in years of trading time.

    Intraday time advances linearly from open to close; a whole trading
    day is one 1/252 unit and overnight gaps carry no duration.
    """
    return (dte_days + day_fraction_remaining(minute, minutes_per_day)) / periods_per_year


def synthesize_market(spec: SynthSpec, seed: int) -> MarketDataset:
    """Generate a deterministic synthetic dataset from (spec, seed)."""
    spec.validate()
    m = spec.minutes_per_day
    cal = trading_calendar(spec.start_date, spec.n_days)
    total = spec.n_days * m
    dt = 1.0 / (252.0 * m)

    rng = np.random.default_rng(seed)
    drift_step = (spec.drift - 0.5 * spec.sigma ** 2) * dt
    if spec.sigma > 0:
        increments = drift_step + spec.sigma * math.sqrt(dt) * rng.standard_normal(total)
    else:
        increments = np.full(total, drift_step)
    closes = spec.s0 * np.exp(np.cumsum(increments))
    opens = np.concatenate(([spec.s0], closes[:-1]))
    highs = np.maximum(opens, closes)
    lows = np.minimum(opens, closes)

    day_minutes = cal.astype("datetime64[m]") + SESSION_OPEN_MINUTE
    timestamps = np.repeat(day_minutes, m) + np.tile(np.arange(m), spec.n_days)
    bars = MinuteBarSeries(timestamps, opens, highs, lows, closes,
                           bids=closes, asks=closes, validate=False)

    c2 = closes.reshape(spec.n_days, m)
    o2 = opens.reshape(spec.n_days, m)
    daily = DailyBarSeries(cal, o2[:, 0],
                           highs.reshape(spec.n_days, m).max(axis=1),
                           lows.reshape(spec.n_days, m).min(axis=1),
                           c2[:, -1])

    vix_level = spec.implied * 100.0
    vix = DateSeries(cal, np.full(spec.n_days, vix_level), name="vix")
    rates = DateSeries(cal[:1], np.array([spec.rate]), name="risk_free")
    divs = DateSeries(cal[:1], np.array([spec.div_yield]), name="dividend_yield")

    if spec.include_options:
        chains = _synthesize_chains(spec, cal, c2)
    else:
        empty = np.empty(0)
        chains = OptionChains(np.empty(0, dtype="datetime64[m]"),
                              np.empty(0, dtype="datetime64[D]"),
                              empty, empty, empty, underlying=spec.underlying)

    return MarketDataset(index_bars=bars, daily_bars=daily, chains=chains,
                         vix9d=vix, vix30d=DateSeries(cal, vix.values.copy(),
                                                      name="vix"),
                         risk_free=rates, dividend_yield=divs, calendar=cal,
                         underlying=spec.underlying, strike_grid=spec.strike_grid)


def _synthesize_chains(spec: SynthSpec, cal: np.ndarray,
                       day_closes: np.ndarray) -> OptionChains:
    """BSM-priced quotes at the decision and closing bars of each day."""
    m = spec.minutes_per_day
    dec_k = spec.decision_minute
    close_k = m - 1
    grid = spec.strike_grid
    n_days = len(cal)
    expiry_positions = set(range(0, n_days, spec.expiry_every))

    ts_list: List[np.ndarray] = []
    exp_list: List[np.ndarray] = []
    strike_list: List[np.ndarray] = []
    bid_list: List[np.ndarray] = []
    ask_list: List[np.ndarray] = []

    day_open_minute = cal.astype("datetime64[m]") + SESSION_OPEN_MINUTE
    for i in range(n_days):
        s_dec = float(day_closes[i, dec_k])
        s_close = float(day_closes[i, -1])
        lo = math.ceil(spec.strike_span[0] * s_dec / grid) * grid
        hi = math.floor(spec.strike_span[1] * s_dec / grid) * grid
        if hi < lo:
            continue
        strikes = np.arange(lo, hi + 0.5 * grid, grid)
        for j in range(i, min(i + spec.max_quote_dte, n_days - 1) + 1):
            if j not in expiry_positions:
                continue
            dte = j - i
            for minute, spot, tau in (
                    (dec_k, s_dec, years_to_expiry(dte, dec_k, m)),
                    (close_k, s_close, years_to_expiry(dte, close_k, m))):
                if minute == close_k and dec_k == close_k:
                    continue  # single-bar day: one quote set
                mids = np.asarray(bsm_put_price(spot, strikes, spec.rate,
                                                spec.div_yield, spec.implied, tau))
                half = 0.5 * spec.spread_fraction * mids
                ts_list.append(np.full(len(strikes),
                                       day_open_minute[i] + minute))
                exp_list.append(np.full(len(strikes), cal[j]))
                strike_list.append(strikes)
                bid_list.append(mids - half)
                ask_list.append(mids + half)

    if not ts_list:
        empty = np.empty(0)
        return OptionChains(np.empty(0, dtype="datetime64[m]"),
                            np.empty(0, dtype="datetime64[D]"),
                            empty, empty, empty, underlying=spec.underlying)
    return OptionChains(np.concatenate(ts_list), np.concatenate(exp_list),
                        np.concatenate(strike_list), np.concatenate(bid_list),
                        np.concatenate(ask_list), underlying=spec.underlying,
                        validate=False)


# ---------------------------------------------------------------------------
# Serialization

MANIFEST_NAME = "manifest.json"
_FILES = ("index_minutes", "option_quotes", "vix9d", "vix30d",
          "risk_free", "dividend_yield", "calendar")


def save_dataset(dataset: MarketDataset, out_dir: Union[str, Path]) -> Path:
    """Write a dataset directory (CSV members + manifest); returns manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bars = dataset.index_bars
    pd.DataFrame({
        "timestamp": np.datetime_as_string(bars.timestamps, unit="m"),
        "open": bars.open, "high": bars.high, "low": bars.low,
        "close": bars.close, "bid": bars.bid, "ask": bars.ask,
    }).to_csv(out / "index_minutes.csv", index=False)
    ch = dataset.chains
    pd.DataFrame({
        "timestamp": np.datetime_as_string(ch.timestamps, unit="m"),
        "expiry": np.datetime_as_string(ch.expiries, unit="D"),
        "strike": ch.strikes, "bid": ch.bids, "ask": ch.asks,
    }).to_csv(out / "option_quotes.csv", index=False)
    for name, series in (("vix9d", dataset.vix9d), ("vix30d", dataset.vix30d),
                         ("risk_free", dataset.risk_free),
                         ("dividend_yield", dataset.dividend_yield)):
        pd.DataFrame({
            "date": np.datetime_as_string(series.days, unit="D"),
            "value": series.values,
        }).to_csv(out / f"{name}.csv", index=False)
    pd.DataFrame({
        "date": np.datetime_as_string(dataset.calendar, unit="D"),
    }).to_csv(out / "calendar.csv", index=False)
    manifest = {
        "underlying": dataset.underlying,
        "strike_grid": dataset.strike_grid,
        "files": {name: f"{name}.csv" for name in _FILES},
    }
    path = out / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_dataset(manifest_path: Union[str, Path]) -> MarketDataset:
    """Load a dataset directory from its manifest."""
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / MANIFEST_NAME
    if not manifest_path.exists():
        raise FileNotFoundError(f"no such manifest: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    for key in ("files", "underlying", "strike_grid"):
        if key not in manifest:
            raise ValueError(f"manifest missing key {key!r}")
    files = manifest["files"]
    missing = [name for name in _FILES if name not in files]
    if missing:
        raise ValueError(f"manifest missing file entries: {missing}")
    root = manifest_path.parent
    underlying = manifest["underlying"]

    bars = load_minute_bars(root / files["index_minutes"])
    chains = load_option_quotes(root / files["option_quotes"],
                                underlying=underlying)
    cal_df = pd.read_csv(root / files["calendar"])
    if "date" not in cal_df.columns:
        raise ValueError("calendar file must have a 'date' column")
    calendar = pd.to_datetime(cal_df["date"]).to_numpy().astype("datetime64[D]")
    return MarketDataset(
        index_bars=bars,
        daily_bars=resample_daily(bars),
        chains=chains,
        vix9d=load_date_series(root / files["vix9d"], name="vix9d", positive=True),
        vix30d=load_date_series(root / files["vix30d"], name="vix30d", positive=True),
        risk_free=load_date_series(root / files["risk_free"], name="risk_free"),
        dividend_yield=load_date_series(root / files["dividend_yield"],
                                        name="dividend_yield"),
        calendar=calendar,
        underlying=underlying,
        strike_grid=float(manifest["strike_grid"]),
    )
