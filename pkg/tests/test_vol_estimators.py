import math

import numpy as np
import pytest

from putwriter.market_data import SynthSpec, synthesize_market
from putwriter.vol_estimators import (annualize, bars_required, c2c_variance,
                                      estimate_sigma, gk_variance,
                                      overnight_variance, rs_variance,
                                      yz_weight, yz_variance)

# Frozen hand evaluations
C2C_UP_DOWN = 0.018168060748665487   # closes [100, 110, 100], two returns
GK_ONE_DAY = 0.00982672327557351     # O=100 H=110 L=95 C=105
YZ_WEIGHT_T2 = 0.0783410138248848    # 0.34 / (1.34 + 3)
SIGMA_1PCT_DAILY = 0.15874507866387544  # sqrt(0.0001 * 252)


def random_bars(rng, n):
    """OHLC bars from a random walk with intraday range."""
    closes = 100.0 * np.exp(np.cumsum(rng.normal(0.0, 0.02, size=n)))
    opens = np.empty(n)
    opens[0] = 100.0
    opens[1:] = closes[:-1] * np.exp(rng.normal(0.0, 0.005, size=n - 1))
    highs = np.maximum(opens, closes) * np.exp(np.abs(rng.normal(0, 0.008, n)))
    lows = np.minimum(opens, closes) * np.exp(-np.abs(rng.normal(0, 0.008, n)))
    return opens, highs, lows, closes


def two_pass_variance(values):
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values) / (len(values) - 1)


class TestCloseToClose:
    def test_constant_closes(self):
        assert c2c_variance(np.full(10, 100.0), 5) == 0.0

    def test_up_then_down_hand_case(self):
        got = c2c_variance(np.array([100.0, 110.0, 100.0]), 2)
        direct = two_pass_variance([math.log(1.1), math.log(100.0 / 110.0)])
        assert got == pytest.approx(direct, rel=1e-15)
        assert got == pytest.approx(C2C_UP_DOWN, rel=1e-12)

    def test_matches_two_pass_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            closes = 100.0 * np.exp(np.cumsum(rng.normal(0, 0.02, size=40)))
            t = int(rng.integers(2, 30))
            rets = [math.log(closes[i] / closes[i - 1])
                    for i in range(len(closes) - t, len(closes))]
            assert c2c_variance(closes, t) == pytest.approx(
                two_pass_variance(rets), rel=1e-14)

    def test_insufficient_history(self):
        with pytest.raises(ValueError):
            c2c_variance(np.array([100.0, 101.0]), 2)


class TestGarmanKlass:
    def test_flat_days(self):
        flat = np.full(5, 100.0)
        assert gk_variance(flat, flat, flat, flat, 3) == 0.0

    def test_single_day_hand_case(self):
        got = gk_variance(np.array([100.0]), np.array([110.0]),
                          np.array([95.0]), np.array([105.0]), 1)
        assert got == pytest.approx(GK_ONE_DAY, rel=1e-12)
        assert got == pytest.approx(0.009826, abs=1e-6)

    def test_matches_direct_formula_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            o, h, l, c = random_bars(rng, 30)
            t = int(rng.integers(1, 30))
            terms = [0.5 * math.log(h[i] / l[i]) ** 2
                     - (2.0 * math.log(2.0) - 1.0) * math.log(c[i] / o[i]) ** 2
                     for i in range(30 - t, 30)]
            assert gk_variance(o, h, l, c, t) == pytest.approx(
                sum(terms) / t, rel=1e-12, abs=1e-18)


class TestRogersSatchell:
    def test_flat_days(self):
        flat = np.full(4, 50.0)
        assert rs_variance(flat, flat, flat, flat, 2) == 0.0

    def test_open_equals_close_terms_nonnegative(self):
        o = np.array([100.0, 100.0])
        h = np.array([104.0, 102.0])
        l = np.array([97.0, 99.0])
        c = o.copy()
        per_day = [math.log(h[i] / c[i]) * math.log(h[i] / o[i])
                   + math.log(l[i] / c[i]) * math.log(l[i] / o[i])
                   for i in range(2)]
        assert all(t >= 0.0 for t in per_day)
        assert rs_variance(o, h, l, c, 2) == pytest.approx(
            sum(per_day) / 2.0, rel=1e-14)

    def test_matches_direct_formula_oracle(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            o, h, l, c = random_bars(rng, 25)
            t = int(rng.integers(1, 25))
            terms = [math.log(h[i] / c[i]) * math.log(h[i] / o[i])
                     + math.log(l[i] / c[i]) * math.log(l[i] / o[i])
                     for i in range(25 - t, 25)]
            assert rs_variance(o, h, l, c, t) == pytest.approx(
                sum(terms) / t, rel=1e-12, abs=1e-18)


class TestOvernight:
    def test_gapless_market(self):
        closes = 100.0 * np.exp(np.cumsum(np.full(6, 0.01)))
        opens = np.empty(6)
        opens[0] = 100.0
        opens[1:] = closes[:-1]
        assert overnight_variance(opens, closes, 4) == 0.0

    def test_alternating_gaps_match_two_pass(self):
        closes = np.full(7, 100.0)
        gaps = np.array([0.01, -0.01, 0.01, -0.01, 0.01, -0.01])
        opens = np.empty(7)
        opens[0] = 100.0
        opens[1:] = closes[:-1] * np.exp(gaps)
        got = overnight_variance(opens, closes, 6)
        assert got == pytest.approx(two_pass_variance(list(gaps)), rel=1e-12)

    def test_two_day_hand_case(self):
        opens = np.array([100.0, 102.0, 99.0])
        closes = np.array([101.0, 100.0, 100.0])
        rets = [math.log(102.0 / 101.0), math.log(99.0 / 100.0)]
        assert overnight_variance(opens, closes, 2) == pytest.approx(
            two_pass_variance(rets), rel=1e-14)


class TestYangZhang:
    def test_constant_market(self):
        flat = np.full(8, 200.0)
        assert yz_variance(flat, flat, flat, flat, 5) == 0.0

    def test_weight_hand_case(self):
        assert yz_weight(2) == pytest.approx(YZ_WEIGHT_T2, rel=1e-12)
        assert yz_weight(2) == pytest.approx(0.07834, abs=1e-5)

    def test_decomposition_identity_exact(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            o, h, l, c = random_bars(rng, 30)
            t = int(rng.integers(2, 29))
            k = yz_weight(t)
            combo = (overnight_variance(o, c, t) + k * c2c_variance(c, t)
                     + (1.0 - k) * rs_variance(o, h, l, c, t))
            assert yz_variance(o, h, l, c, t) == combo


class TestAnnualize:
    def test_zero(self):
        est = annualize(0.0)
        assert est.sigma == 0.0 and not est.clamped

    def test_one_percent_daily(self):
        est = annualize(0.0001)
        assert est.sigma == pytest.approx(SIGMA_1PCT_DAILY, rel=1e-12)
        assert est.sigma == pytest.approx(0.1587, abs=1e-4)

    def test_negative_noise_clamps_with_flag(self):
        est = annualize(-1e-18)
        assert est.sigma == 0.0
        assert est.clamped


class TestProperties:
    def test_scale_invariance(self):
        rng = np.random.default_rng(47)
        o, h, l, c = random_bars(rng, 20)
        for k in (2.0, 1.7, 0.003):
            for t in (2, 5, 10):
                assert gk_variance(k * o, k * h, k * l, k * c, t) == \
                    pytest.approx(gk_variance(o, h, l, c, t), rel=1e-10)
                assert rs_variance(k * o, k * h, k * l, k * c, t) == \
                    pytest.approx(rs_variance(o, h, l, c, t), rel=1e-10)
                assert c2c_variance(k * c, t) == pytest.approx(
                    c2c_variance(c, t), rel=1e-10)
                assert yz_variance(k * o, k * h, k * l, k * c, t) == \
                    pytest.approx(yz_variance(o, h, l, c, t), rel=1e-10)

    def test_convergence_on_synthetic_market(self):
        spec = SynthSpec(n_days=10_000, minutes_per_day=1170, sigma=0.2,
                         drift=0.05, include_options=False)
        d = synthesize_market(spec, seed=123).daily_bars
        for kind in ("c2c", "gk", "yz"):
            est = estimate_sigma(kind, d.open, d.high, d.low, d.close,
                                 memory=len(d) - 1)
            assert abs(est.sigma - 0.2) / 0.2 < 0.05

    def test_estimate_sigma_dispatch_and_bars_required(self):
        rng = np.random.default_rng(50)
        o, h, l, c = random_bars(rng, 30)
        assert estimate_sigma("gk", o, h, l, c, 10).variance == \
            gk_variance(o, h, l, c, 10)
        assert estimate_sigma("c2c", o, h, l, c, 10).variance == \
            c2c_variance(c, 10)
        assert estimate_sigma("yz", o, h, l, c, 10).variance == \
            yz_variance(o, h, l, c, 10)
        assert bars_required("gk", 10) == 10
        assert bars_required("c2c", 10) == 11
        assert bars_required("yz", 10) == 11
        with pytest.raises(ValueError):
            estimate_sigma("parkinson", o, h, l, c, 10)
