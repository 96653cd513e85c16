import datetime as dt

import numpy as np
import pytest

from modelmarket.panels import AlignedPanel, AlignedRecord
from modelmarket.scoring import (
    Source,
    brier,
    calibration,
    daily_mean,
    dominance,
    frequency,
    overall_mean,
    panel_forecasts,
    synthetic,
)


def _panel(rows):
    return AlignedPanel(tuple(
        AlignedRecord(dt.date(2020, 11, day), state, pm, pk, r)
        for day, state, pm, pk, r in rows
    ))


class TestBrier:
    def test_perfect_forecast(self):
        assert brier(1.0, 1) == 0.0

    def test_maximal_uncertainty(self):
        assert brier(0.5, 0) == 0.25

    def test_wisconsin_eve_forecast(self):
        # (0.97 - 1)^2 computed by hand
        assert brier(0.97, 1) == pytest.approx(0.0009, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            p = rng.uniform()
            r = int(rng.integers(2))
            assert brier(p, r) == pytest.approx(brier(1.0 - p, 1 - r), abs=1e-15)

    def test_domain(self):
        with pytest.raises(ValueError):
            brier(1.2, 1)
        with pytest.raises(ValueError):
            brier(0.5, 2)


class TestDailyMean:
    def test_constant_forecast(self):
        panel = _panel([(d, "A", 0.6, 0.6, 1) for d in (1, 2, 3)])
        series = daily_mean(panel, Source.MODEL)
        assert series.means == pytest.approx((0.16, 0.16, 0.16))

    def test_two_state_average(self):
        # scores 0.01 and 0.49 average to 0.25
        panel = _panel([(1, "A", 0.9, 0.9, 1), (1, "B", 0.3, 0.3, 1)])
        series = daily_mean(panel, Source.MODEL)
        assert series.means[0] == pytest.approx(0.25)

    def test_hybrid_averages_probability_first(self):
        panel = _panel([(1, "A", 0.9, 0.1, 1)])
        series = daily_mean(panel, Source.HYBRID)
        assert series.means[0] == pytest.approx(brier(0.5, 1))

    def test_state_permutation_invariance(self):
        a = _panel([(1, "A", 0.9, 0.5, 1), (1, "B", 0.3, 0.4, 0)])
        b = _panel([(1, "B", 0.3, 0.4, 0), (1, "A", 0.9, 0.5, 1)])
        assert daily_mean(a, Source.MODEL).means == daily_mean(b, Source.MODEL).means

    def test_empty_panel_errors(self):
        with pytest.raises(ValueError):
            daily_mean(AlignedPanel(()), Source.MODEL)


class TestOverallMean:
    def test_small_fixture(self, small_panel):
        expected = np.mean([
            brier(rec.p_model, rec.r) for rec in small_panel.records
        ])
        assert overall_mean(small_panel, Source.MODEL) == pytest.approx(expected)

    def test_date_permutation_invariance(self):
        a = _panel([(1, "A", 0.9, 0.5, 1), (2, "A", 0.3, 0.4, 1)])
        b = _panel([(1, "A", 0.3, 0.4, 1), (2, "A", 0.9, 0.5, 1)])
        assert overall_mean(a, Source.MODEL) == pytest.approx(
            overall_mean(b, Source.MODEL))


class TestSynthetic:
    def test_simple_average(self):
        panel = _panel([(1, "A", 0.4, 0.6, 1)])
        assert synthetic(panel).entries[0].p == pytest.approx(0.5)

    def test_idempotent_on_agreement(self):
        panel = _panel([(1, "A", 0.37, 0.37, 1)])
        assert synthetic(panel).entries[0].p == pytest.approx(0.37)

    def test_florida_style_average(self):
        # 0.78 was the model's Florida call; paired with 0.62 the mean is 0.70
        panel = _panel([(1, "FL", 0.78, 0.62, 0)])
        assert synthetic(panel).entries[0].p == pytest.approx(0.70)

    def test_weight_parameter(self):
        panel = _panel([(1, "A", 1.0, 0.0, 1)])
        assert synthetic(panel, hybrid_weight=0.25).entries[0].p == pytest.approx(0.25)


class TestCalibration:
    def test_single_bin_half_realized(self):
        forecasts = [(0.5, 1)] * 50 + [(0.5, 0)] * 50
        curve = calibration(forecasts, bin_width=0.05)
        assert len(curve.bins) == 1
        assert curve.bins[0].realized_freq == pytest.approx(0.5)
        assert curve.total == 100

    def test_lone_extreme_forecast(self):
        curve = calibration([(0.99, 1)], bin_width=0.05)
        (b,) = curve.bins
        assert b.realized_freq == 1.0
        assert b.lo == pytest.approx(0.95)

    def test_counts_sum_to_total(self):
        rng = np.random.default_rng(11)
        forecasts = [(float(p), int(rng.uniform() < p)) for p in rng.uniform(size=500)]
        curve = calibration(forecasts, bin_width=0.1)
        assert curve.total == 500

    def test_monte_carlo_consistency(self):
        # r drawn with probability p: realized frequency must track the bin
        # mean forecast within 3-sigma binomial noise
        rng = np.random.default_rng(3)
        ps = rng.uniform(size=20000)
        rs = (rng.uniform(size=ps.size) < ps).astype(int)
        curve = calibration(list(zip(ps.tolist(), rs.tolist())), bin_width=0.05)
        for b in curve.bins:
            sigma = np.sqrt(b.mean_forecast * (1 - b.mean_forecast) / b.count)
            assert abs(b.realized_freq - b.mean_forecast) <= 3 * sigma + 1e-9

    def test_bad_bin_width(self):
        with pytest.raises(ValueError):
            calibration([(0.5, 1)], bin_width=0.3)

    def test_no_forecasts(self):
        with pytest.raises(ValueError):
            calibration([], bin_width=0.05)


class TestFrequency:
    def test_single_record(self):
        panel = _panel([(1, "A", 0.42, 0.5, 1)])
        report = frequency(panel, Source.MODEL, bin_width=0.01)
        (b,) = report.bins
        assert b.count == 1
        assert b.distinct_states == 1
        assert b.lo == pytest.approx(0.42)

    def test_distinct_states_bounded(self, small_panel):
        report = frequency(small_panel, Source.MARKET, bin_width=0.01)
        assert all(b.distinct_states <= small_panel.n_states for b in report.bins)
        assert sum(b.count for b in report.bins) == len(small_panel.records)

    def test_peak(self):
        panel = _panel([
            (1, "A", 0.54, 0.5, 1), (1, "B", 0.54, 0.5, 1), (2, "A", 0.54, 0.5, 1),
            (2, "B", 0.9, 0.5, 1),
        ])
        report = frequency(panel, Source.MODEL, bin_width=0.01)
        peak = report.peak()
        assert peak.lo == pytest.approx(0.54)
        assert peak.distinct_states == 2
        assert peak.count == 3


class TestDominance:
    def test_no_dominance_when_sources_agree(self):
        panel = _panel([(1, "A", 0.7, 0.7, 1), (2, "A", 0.4, 0.4, 0)])
        report = dominance(panel)
        assert report.count == 0
        assert report.trailing_streak == 0

    def test_constructed_two_state_fixture(self, dominance_panel):
        model = daily_mean(dominance_panel, Source.MODEL)
        market = daily_mean(dominance_panel, Source.MARKET)
        hybrid = daily_mean(dominance_panel, Source.HYBRID)
        # direct computation: date 1 means are 0.41 / 0.41 / 0.25
        assert model.means[0] == pytest.approx(0.41)
        assert market.means[0] == pytest.approx(0.41)
        assert hybrid.means[0] == pytest.approx(0.25)
        report = dominance(dominance_panel)
        assert report.dominated[0]
        assert not report.dominated[1]  # sources agree on date 2
        assert report.count == 1

    def test_trailing_streak(self):
        panel = _panel([
            (1, "A", 0.7, 0.7, 1), (1, "B", 0.4, 0.4, 0),
            (2, "A", 0.9, 0.1, 1), (2, "B", 0.1, 0.9, 1),
            (3, "A", 0.9, 0.1, 1), (3, "B", 0.1, 0.9, 1),
        ])
        report = dominance(panel)
        assert report.count == 2
        assert report.trailing_streak == 2


class TestBetweenness:
    def test_per_record_hybrid_betweenness(self):
        # on any single record the hybrid score lies between the component
        # scores, because both errors share a sign
        rng = np.random.default_rng(99)
        n = 100_000
        pm = rng.uniform(size=n)
        pk = rng.uniform(size=n)
        r = rng.integers(0, 2, size=n)
        s_model = (pm - r) ** 2
        s_market = (pk - r) ** 2
        s_hybrid = ((pm + pk) / 2 - r) ** 2
        lo = np.minimum(s_model, s_market)
        hi = np.maximum(s_model, s_market)
        assert np.all(s_hybrid >= lo - 1e-12)
        assert np.all(s_hybrid <= hi + 1e-12)

    def test_matches_scoring_functions(self, small_panel):
        h = panel_forecasts(small_panel, Source.HYBRID)
        m = panel_forecasts(small_panel, Source.MODEL)
        k = panel_forecasts(small_panel, Source.MARKET)
        for (ph, r), (pm, _), (pk, _) in zip(h, m, k):
            s = brier(ph, r)
            assert min(brier(pm, r), brier(pk, r)) - 1e-12 <= s
            assert s <= max(brier(pm, r), brier(pk, r)) + 1e-12
