import dataclasses
from datetime import date, datetime

import numpy as np
import pytest

from putwriter.backtester import (ACTION_EXPIRE, ACTION_FORCED_CLOSE,
                                  BUY_TO_CLOSE, SELL_TO_OPEN, CostModel,
                                  Position, RolloverAction, SimSettings,
                                  StrategyConfig, _run_one,
                                  buy_and_hold_benchmark, execute_fill,
                                  rollover_decision, run_backtest, run_grid,
                                  settle_at_expiry)
from putwriter.market_data import OptionChains, OptionContract, OptionQuote

FILL_ACTIONS = ("open", "roll_open", "roll_close", "forced_close")


def day64(s):
    return np.datetime64(s, "D")


def make_quote(bid, ask, strike=4000.0, expiry=date(2022, 1, 10)):
    contract = OptionContract(underlying="SYNTH", strike=strike, expiry=expiry)
    return OptionQuote(timestamp=datetime(2022, 1, 3, 9, 45),
                       contract=contract, bid=bid, ask=ask)


def kelly_config(**overrides):
    kwargs = dict(target_dte=0, otm_pct=5.0, sizing="kelly",
                  estimator_kind="c2c", estimator_memory=2,
                  sim=SimSettings(n_paths=512))
    kwargs.update(overrides)
    return StrategyConfig(**kwargs)


def vix_config(**overrides):
    kwargs = dict(target_dte=0, otm_pct=5.0, sizing="vix_rank",
                  vix_source="vix30d", vix_memory=2)
    kwargs.update(overrides)
    return StrategyConfig(**kwargs)


class TestRolloverDecision:
    def test_closer_candidate_triggers_roll(self):
        cands = [(day64("2022-01-10"), 4), (day64("2022-01-11"), 5)]
        action = rollover_decision(4, cands, target_dte=5)
        assert action.kind == RolloverAction.ROLL
        assert action.dte == 5 and action.expiry == day64("2022-01-11")

    def test_tie_holds(self):
        cands = [(day64("2022-01-05"), 0)]
        action = rollover_decision(2, cands, target_dte=1)
        assert action.kind == RolloverAction.HOLD

    def test_no_position_opens_best(self):
        cands = [(day64("2022-01-05"), 0), (day64("2022-01-06"), 1),
                 (day64("2022-01-10"), 3)]
        action = rollover_decision(None, cands, target_dte=0)
        assert action.kind == RolloverAction.OPEN and action.dte == 0

    def test_no_candidates_holds(self):
        assert rollover_decision(None, [], 5).kind == RolloverAction.HOLD
        assert rollover_decision(3, [], 5).kind == RolloverAction.HOLD

    def test_candidate_tie_prefers_shorter(self):
        cands = [(day64("2022-01-06"), 1), (day64("2022-01-10"), 3)]
        action = rollover_decision(None, cands, target_dte=2)
        assert action.dte == 1

    def test_expired_candidates_ignored(self):
        cands = [(day64("2021-12-31"), -1)]
        assert rollover_decision(None, cands, 0).kind == RolloverAction.HOLD

    def test_matching_position_holds(self):
        cands = [(day64("2022-01-06"), 1), (day64("2022-01-10"), 3)]
        assert rollover_decision(3, cands, 3).kind == RolloverAction.HOLD


class TestExecuteFill:
    COSTS = CostModel()  # 0.65/contract, half-spread cross

    def test_sell_at_mid_hand_case(self):
        fill = execute_fill(make_quote(10.40, 10.60), SELL_TO_OPEN, 1, self.COSTS)
        assert fill.price == pytest.approx(10.50)
        assert fill.cash_delta == pytest.approx(1049.35)
        assert fill.commission == pytest.approx(0.65)

    def test_buy_to_close_hand_case(self):
        fill = execute_fill(make_quote(10.40, 10.60), BUY_TO_CLOSE, 1, self.COSTS)
        assert fill.price == pytest.approx(10.50)
        assert fill.cash_delta == pytest.approx(-1050.65)

    def test_locked_quote_fills_at_touch(self):
        fill = execute_fill(make_quote(10.0, 10.0), SELL_TO_OPEN, 1, self.COSTS)
        assert fill.price == 10.0

    def test_full_cross_sells_at_bid(self):
        costs = CostModel(commission_per_contract=0.0, spread_cross_fraction=1.0)
        fill = execute_fill(make_quote(10.0, 11.0), SELL_TO_OPEN, 2, costs)
        assert fill.price == 10.0
        assert fill.cash_delta == pytest.approx(2000.0)

    def test_quantity_scales_commission(self):
        fill = execute_fill(make_quote(10.40, 10.60), SELL_TO_OPEN, 7, self.COSTS)
        assert fill.commission == pytest.approx(7 * 0.65)
        assert fill.cash_delta == pytest.approx(10.50 * 100 * 7 - 7 * 0.65)

    def test_absent_quote_rejected(self):
        with pytest.raises(ValueError, match="absent"):
            execute_fill(None, SELL_TO_OPEN, 1, self.COSTS)

    def test_zero_quote_rejected(self):
        with pytest.raises(ValueError, match="zero quote"):
            execute_fill(make_quote(0.0, 0.0), SELL_TO_OPEN, 1, self.COSTS)

    def test_zero_quantity_rejected(self):
        with pytest.raises(ValueError, match="qty"):
            execute_fill(make_quote(10.0, 10.2), SELL_TO_OPEN, 0, self.COSTS)

    def test_unknown_side_rejected(self):
        with pytest.raises(ValueError, match="side"):
            execute_fill(make_quote(10.0, 10.2), "hold", 1, self.COSTS)


class TestSettlement:
    def test_out_of_the_money_pays_nothing(self):
        contract = OptionContract("SYNTH", 3900.0, date(2022, 1, 10))
        pos = Position(contract, qty=3, entry_fill=12.0,
                       entry_time=datetime(2022, 1, 10, 9, 45), margin_held=0.0)
        record = settle_at_expiry(pos, 4000.0, datetime(2022, 1, 10, 16, 0))
        assert record.action == ACTION_EXPIRE
        assert record.fill == 0.0 and record.commission == 0.0
        assert record.realized_pnl == pytest.approx(12.0 * 100 * 3)

    def test_in_the_money_pays_intrinsic(self):
        contract = OptionContract("SYNTH", 4000.0, date(2022, 1, 10))
        pos = Position(contract, qty=2, entry_fill=10.5,
                       entry_time=datetime(2022, 1, 10, 9, 45), margin_held=0.0)
        record = settle_at_expiry(pos, 3900.0, datetime(2022, 1, 10, 16, 0))
        assert record.fill == 100.0
        assert record.fill * 100 * record.qty == pytest.approx(20_000.0)
        assert record.realized_pnl == pytest.approx((10.5 - 100.0) * 100 * 2)


class TestBenchmark:
    def test_tracks_index(self):
        closes = np.array([100.0, 110.0, 99.0])
        bench = buy_and_hold_benchmark(closes, 1_000_000.0)
        assert np.allclose(bench, [1_000_000.0, 1_100_000.0, 990_000.0])
        assert bench[0] == 1_000_000.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            buy_and_hold_benchmark(np.array([]), 1.0)


class TestConfigValidation:
    def test_kelly_requires_estimator(self):
        with pytest.raises(ValueError, match="estimator_kind"):
            StrategyConfig(target_dte=1, otm_pct=2.0, sizing="kelly")

    def test_vix_fields_invalid_for_kelly(self):
        with pytest.raises(ValueError, match="vix fields"):
            kelly_config(vix_source="vix30d", vix_memory=21)

    def test_estimator_fields_invalid_for_vix_rank(self):
        with pytest.raises(ValueError, match="estimator fields"):
            vix_config(estimator_kind="gk", estimator_memory=5)

    def test_hybrid_requires_both(self):
        with pytest.raises(ValueError):
            StrategyConfig(target_dte=1, otm_pct=2.0, sizing="hybrid",
                           estimator_kind="gk", estimator_memory=5)

    def test_memory_bounds(self):
        with pytest.raises(ValueError, match="estimator_memory"):
            kelly_config(estimator_memory=1)
        with pytest.raises(ValueError, match="vix_memory"):
            vix_config(vix_memory=0)

    def test_unknown_sizing(self):
        with pytest.raises(ValueError, match="sizing"):
            StrategyConfig(target_dte=1, otm_pct=2.0, sizing="martingale")

    def test_negative_dte(self):
        with pytest.raises(ValueError, match="target_dte"):
            vix_config(target_dte=-1)

    def test_bad_vix_timing(self):
        with pytest.raises(ValueError, match="vix_timing"):
            vix_config(vix_timing="noon")

    def test_label_and_key(self):
        cfg = kelly_config(target_dte=1, otm_pct=2.0, estimator_kind="gk",
                           estimator_memory=5)
        assert cfg.label() == "kelly_dte1_otm2_gk5"
        assert cfg.key()[0] == "kelly"


def fill_window_bounds(data):
    """Per-day [first, last] permitted fill timestamps."""
    bars = data.index_bars
    bounds = {}
    for i, day in enumerate(bars.days):
        lo, hi = int(bars.day_starts[i]), int(bars.day_ends[i])
        open_ts = bars.timestamps[lo]
        close_ts = bars.timestamps[hi - 1]
        bounds[day] = (open_ts + np.timedelta64(15, "m"),
                       close_ts - np.timedelta64(30, "m"))
    return bounds


def replay_cash(result, data, start_capital):
    """Recompute final equity from the trade ledger alone."""
    cash = start_capital
    open_pos = None
    for t in result.trades:
        mult = t.contract.multiplier
        if t.action in ("open", "roll_open"):
            cash += t.fill * mult * t.qty - t.commission
            open_pos = t
        elif t.action in ("roll_close", "forced_close"):
            cash -= t.fill * mult * t.qty + t.commission
            open_pos = None
        elif t.action == ACTION_EXPIRE:
            cash -= t.fill * mult * t.qty
            open_pos = None
        else:
            raise AssertionError(f"unknown action {t.action}")
    liability = 0.0
    if open_pos is not None:
        bars = data.index_bars
        last_ts = bars.timestamps[-1]
        expiry = day64(open_pos.contract.expiry)
        quote = data.chains.quote(last_ts, expiry, open_pos.contract.strike)
        if quote is not None:
            mark = quote.mid
        else:
            mark = max(open_pos.contract.strike - float(bars.close[-1]), 0.0)
        liability = mark * open_pos.contract.multiplier * open_pos.qty
    return cash - liability


@pytest.fixture(scope="module")
def kelly_run(trending_market):
    cfg = kelly_config(target_dte=3, otm_pct=2.0, estimator_kind="gk",
                       estimator_memory=5, seed=42)
    return cfg, run_backtest(cfg, trending_market)


class TestEngineInvariants:
    def test_deterministic_replay(self, trending_market, kelly_run):
        cfg, first = kelly_run
        second = run_backtest(cfg, trending_market)
        assert first.equity.tobytes() == second.equity.tobytes()
        assert first.equity_times.tobytes() == second.equity_times.tobytes()
        assert first.ledger_lines() == second.ledger_lines()

    def test_equity_curve_shape(self, trending_market, kelly_run):
        _, result = kelly_run
        n_days = len(trending_market.daily_bars)
        assert len(result.equity) == n_days + 1
        assert result.equity[0] == result.config.start_capital
        assert result.equity_times[0] == trending_market.index_bars.timestamps[0]
        assert np.all(np.diff(result.equity_times.astype(np.int64)) > 0)

    def test_fills_stay_inside_window(self, trending_market, kelly_run):
        _, result = kelly_run
        bounds = fill_window_bounds(trending_market)
        fills = [t for t in result.trades if t.action in FILL_ACTIONS]
        assert fills, "expected at least one fill"
        for t in fills:
            ts = np.datetime64(t.time).astype("datetime64[m]")
            lo, hi = bounds[ts.astype("datetime64[D]")]
            assert lo <= ts <= hi, t.line()

    def test_rollover_matches_exhaustive_scan(self, kelly_run):
        cfg, result = kelly_run
        assert result.decisions, "expected decisions"
        for rec in result.decisions:
            if rec.note.startswith("roll aborted"):
                continue
            usable = [d for d in rec.candidate_dtes if d >= 0]
            if not usable:
                assert rec.action == "hold"
                continue
            best = min(usable,
                       key=lambda d: (abs(d - cfg.target_dte), d))
            if rec.current_dte is None:
                assert rec.action == "open" and rec.chosen_dte == best
            elif (abs(rec.current_dte - cfg.target_dte)
                  <= abs(best - cfg.target_dte)):
                assert rec.action == "hold" and rec.chosen_dte is None
            else:
                assert rec.action == "roll" and rec.chosen_dte == best

    def test_ledger_conserves_cash(self, trending_market, kelly_run):
        cfg, result = kelly_run
        replayed = replay_cash(result, trending_market, cfg.start_capital)
        assert result.equity[-1] == pytest.approx(replayed, abs=1e-6)

    def test_one_decision_per_day(self, trending_market, kelly_run):
        _, result = kelly_run
        assert len(result.decisions) == len(trending_market.daily_bars)
        days = [rec.day for rec in result.decisions]
        assert days == list(trending_market.daily_bars.days)

    def test_returns_accessor(self, kelly_run):
        _, result = kelly_run
        rets = result.returns()
        assert len(rets) == len(result.equity) - 1


class TestEngineScenarios:
    def test_zero_volatility_closed_form(self, flat_market):
        cfg = kelly_config(otm_pct=0.0, seed=5)
        result = run_backtest(cfg, flat_market)
        opens = [t for t in result.trades if t.action == "open"]
        settles = [t for t in result.trades if t.action == ACTION_EXPIRE]
        assert len(opens) == len(settles) == result.n_positions
        assert result.n_positions > 0
        assert all(t.fill == 0.0 for t in settles)  # spot pinned at the strike
        expected = cfg.start_capital
        for t in opens:
            expected += t.fill * 100 * t.qty - t.commission
        assert result.equity[-1] == expected  # exact: premia minus commissions
        diffs = np.diff(result.equity)
        assert np.all(diffs >= 0.0)
        assert (diffs > 0).sum() == result.n_positions

    def test_commission_dominates_tiny_premium(self, flat_market):
        # far OTM on a pinned index: every put expires worthless but the
        # mid premium is below the commission, so each trade loses money
        cfg = kelly_config(otm_pct=5.0, seed=5)
        result = run_backtest(cfg, flat_market)
        assert result.n_positions > 0
        expected = cfg.start_capital
        for t in result.trades:
            if t.action == "open":
                expected += t.fill * 100 * t.qty - t.commission
        assert result.equity[-1] == expected
        traded_diffs = np.diff(result.equity)[np.diff(result.equity) != 0.0]
        assert np.all(traded_diffs < 0.0)

    def test_null_sizing_never_trades(self, flat_market):
        cfg = kelly_config(sim=SimSettings(n_paths=512, f_max=1e-12))
        result = run_backtest(cfg, flat_market)
        assert result.trades == []
        assert result.n_positions == 0
        assert np.all(result.equity == cfg.start_capital)

    def test_oversized_position_is_force_closed(self, trending_market):
        cfg = kelly_config(target_dte=1, otm_pct=2.0,
                           sim=SimSettings(n_paths=512, f_max=50.0), seed=9)
        result = run_backtest(cfg, trending_market)
        forced = [t for t in result.trades if t.action == ACTION_FORCED_CLOSE]
        assert forced, "expected a margin breach"
        assert all(t.flag == "margin_breach" for t in forced)
        bounds = fill_window_bounds(trending_market)
        for t in forced:
            ts = np.datetime64(t.time).astype("datetime64[m]")
            lo, hi = bounds[ts.astype("datetime64[D]")]
            assert lo <= ts <= hi
        assert np.all(np.isfinite(result.equity))

    def test_vix_sizing_runs_and_skips_warmup(self, flat_market):
        cfg = vix_config(vix_memory=5)
        result = run_backtest(cfg, flat_market)
        skipped = [rec for rec in result.decisions
                   if rec.note == "vix window warm-up"]
        assert len(skipped) == 5  # prior-close window needs five past days
        assert result.n_positions == len(flat_market.daily_bars) - 5

    def test_oversize_vix_memory_never_trades(self, flat_market):
        cfg = vix_config(vix_memory=len(flat_market.daily_bars) + 10)
        result = run_backtest(cfg, flat_market)
        assert result.n_positions == 0
        assert np.all(result.equity == cfg.start_capital)

    def test_missing_quotes_hold_the_day(self, flat_market):
        bars = flat_market.index_bars
        lo = int(bars.day_starts[10])
        blocked_ts = bars.timestamps[lo] + np.timedelta64(15, "m")
        chains = flat_market.chains
        keep = chains.timestamps != blocked_ts
        filtered = OptionChains(chains.timestamps[keep], chains.expiries[keep],
                                chains.strikes[keep], chains.bids[keep],
                                chains.asks[keep])
        data = dataclasses.replace(flat_market, chains=filtered)
        cfg = vix_config(vix_memory=2)
        result = run_backtest(cfg, data)
        blocked_day = bars.days[10]
        rec = next(r for r in result.decisions if r.day == blocked_day)
        assert rec.action == "hold" and rec.candidate_dtes == ()
        assert any("no tradable expiries" in d for d in result.diagnostics)
        assert not any(np.datetime64(t.time, "D") == blocked_day
                       for t in result.trades)

    def test_hybrid_sizes_below_both_parents(self, trending_market):
        base = dict(target_dte=1, otm_pct=2.0, seed=3)
        kelly = kelly_config(**base)
        vix = vix_config(vix_memory=3, **base)
        hybrid = StrategyConfig(sizing="hybrid", estimator_kind="c2c",
                                estimator_memory=2, vix_source="vix30d",
                                vix_memory=3, sim=SimSettings(n_paths=512),
                                **base)
        runs = {cfg.sizing: run_backtest(cfg, trending_market)
                for cfg in (kelly, vix, hybrid)}
        by_day = {}
        for name, result in runs.items():
            for rec in result.decisions:
                by_day.setdefault(rec.day, {})[name] = rec
        compared = 0
        for day, recs in by_day.items():
            if set(recs) != {"kelly", "vix_rank", "hybrid"}:
                continue
            if any(r.note for r in recs.values()):
                continue
            assert recs["hybrid"].contracts <= recs["kelly"].contracts
            assert recs["hybrid"].contracts <= recs["vix_rank"].contracts
            compared += 1
        assert compared > 5


class TestGrid:
    def grid_configs(self):
        return [
            kelly_config(target_dte=0, otm_pct=5.0, seed=1),
            kelly_config(target_dte=1, otm_pct=2.0, estimator_kind="gk",
                         estimator_memory=3, seed=2),
            vix_config(target_dte=3, otm_pct=0.0, vix_memory=3, seed=3),
            StrategyConfig(target_dte=1, otm_pct=0.0, sizing="hybrid",
                           estimator_kind="yz", estimator_memory=3,
                           vix_source="vix9d", vix_memory=2,
                           sim=SimSettings(n_paths=512), seed=4),
        ]

    def test_parallel_matches_serial(self, flat_market):
        configs = self.grid_configs()
        serial = run_grid(configs, flat_market, jobs=1)
        parallel = run_grid(configs, flat_market, jobs=2)
        assert len(serial) == len(parallel) == len(configs)
        for cfg, s, p in zip(configs, serial, parallel):
            assert s.config == p.config == cfg
            assert s.error is None and p.error is None
            assert s.result.equity.tobytes() == p.result.equity.tobytes()
            assert s.result.ledger_lines() == p.result.ledger_lines()
            assert s.report == p.report

    def test_single_config_grid_matches_direct_run(self, flat_market):
        cfg = self.grid_configs()[0]
        record = run_grid([cfg], flat_market, jobs=4)[0]
        direct = run_backtest(cfg, flat_market)
        assert record.result.equity.tobytes() == direct.equity.tobytes()

    def test_benchmark_sharpe_attached(self, trending_market):
        record = run_grid(self.grid_configs()[:1], trending_market)[0]
        assert record.benchmark_daily_sharpe is not None
        assert record.report.psr is not None

    def test_failure_is_isolated_per_run(self, flat_market):
        record = _run_one(self.grid_configs()[0], None, None)
        assert record.error is not None and "Error" in record.error
        assert record.result is None and record.report is None

    def test_dataset_calendar_mismatch_is_reported(self, flat_market):
        data = dataclasses.replace(flat_market,
                                   calendar=flat_market.calendar[:5])
        records = run_grid(self.grid_configs()[:2], data, jobs=1)
        assert all(r.error is not None for r in records)
        assert "calendar" in records[0].error

    def test_empty_grid_rejected(self, flat_market):
        with pytest.raises(ValueError):
            run_grid([], flat_market)
        with pytest.raises(ValueError):
            run_grid(self.grid_configs(), flat_market, jobs=0)
