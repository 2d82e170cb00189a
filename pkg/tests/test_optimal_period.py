import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gwdrought.anomaly import accumulate
from gwdrought.chrono_grid import MonthIndex, MonthlySeries, TimeAxis
from gwdrought.optimal_period import (
    CorrelationProfile,
    DegenerateCorrelationError,
    InsufficientHistoryError,
    WindowScheme,
    autocorrelation,
    corr_p_value,
    correlation_profile,
    expanding_median_r,
    full_series_r,
    optimal_period,
    pearson_r,
)
from gwdrought.oracles import pearson_direct, t_two_sided_p
from gwdrought.synth import counter_normal, gen_ar1, gen_precip

from conftest import make_series


class TestPearson:
    def test_examples(self):
        x = np.arange(10.0)
        assert pearson_r(x, 2 * x + 1) == pytest.approx(1.0)
        assert pearson_r(x, -x) == pytest.approx(-1.0)
        assert pearson_r([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateCorrelationError, match="degenerate correlation"):
            pearson_r([1.0, 2.0], [2.0, 1.0])
        with pytest.raises(DegenerateCorrelationError):
            pearson_r([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_pairwise_complete(self):
        assert pearson_r([1, 2, np.nan, 4, 5], [2, 4, 100, 8, 10.5]) == pytest.approx(
            pearson_r([1, 2, 4, 5], [2, 4, 8, 10.5]))

    @given(st.integers(5, 300), st.integers(0, 2 ** 32), st.floats(0.01, 100), st.floats(-100, 100))
    def test_affine_invariance(self, n, seed, a, b):
        x = counter_normal(seed, n, 1)
        y = x + counter_normal(seed, n, 2)
        r = pearson_r(x, y)
        assert pearson_r(a * x + b, y) == pytest.approx(r, abs=1e-9)
        assert pearson_r(-a * x + b, y) == pytest.approx(-r, abs=1e-9)

    @given(st.integers(3, 2000), st.integers(0, 2 ** 32))
    def test_matches_high_precision(self, n, seed):
        x = counter_normal(seed, n, 3) * 4 + 1
        y = 0.3 * x + counter_normal(seed, n, 4)
        assert abs(pearson_r(x, y) - pearson_direct(x, y)) <= 1e-12 * abs(pearson_direct(x, y)) + 1e-15


class TestPValue:
    def test_examples(self):
        assert corr_p_value(0.0, 30) == pytest.approx(1.0)
        # df = 2 has the closed form p = 1 - t / sqrt(2 + t^2) = 1 - r
        assert corr_p_value(0.8, 4) == pytest.approx(0.2, abs=1e-12)
        assert corr_p_value(1.0, 10) == 0.0
        assert corr_p_value(-1.0, 10) == 0.0
        assert corr_p_value(0.999999, 50) < 1e-12

    def test_against_quadrature(self):
        for r, n in [(0.3, 20), (-0.6, 7), (0.05, 180), (0.9, 45)]:
            assert corr_p_value(r, n) == pytest.approx(t_two_sided_p(r, n), abs=1e-6)

    @given(st.floats(0.01, 0.98), st.floats(0.01, 0.98), st.integers(4, 500))
    def test_monotone_in_r(self, a, b, n):
        lo, hi = sorted((a, b))
        assert corr_p_value(hi, n) <= corr_p_value(lo, n)
        assert corr_p_value(-hi, n) == pytest.approx(corr_p_value(hi, n))

    @given(st.floats(0.05, 0.95), st.integers(4, 400), st.integers(1, 100))
    def test_monotone_in_n(self, r, n, dn):
        assert corr_p_value(r, n + dn) <= corr_p_value(r, n)


class TestExpanding:
    def test_window_counts(self):
        x = counter_normal(1, 180)
        assert expanding_median_r(x, x + counter_normal(2, 180), WindowScheme.grace()).n_windows == 121
        y = counter_normal(3, 84)
        assert expanding_median_r(y, y + counter_normal(4, 84), WindowScheme.well()).n_windows == 45

    @given(st.integers(60, 260), st.integers(0, 1000))
    def test_count_formula(self, n, seed):
        x = counter_normal(seed, n, 1)
        res = expanding_median_r(x, x + counter_normal(seed, n, 2), WindowScheme(60))
        assert res.n_windows == n - 60 + 1

    def test_identity(self):
        x = counter_normal(5, 100)
        res = expanding_median_r(x, x, WindowScheme(60))
        np.testing.assert_allclose(res.window_r, 1.0)
        assert res.median_r == pytest.approx(1.0)

    def test_window_values_match_direct(self):
        x = counter_normal(6, 90)
        y = 0.5 * x + counter_normal(7, 90)
        res = expanding_median_r(x, y, WindowScheme(60))
        direct = [pearson_direct(x[:e], y[:e]) for e in range(60, 91)]
        np.testing.assert_allclose(res.window_r, direct, rtol=1e-10)
        assert res.median_r == pytest.approx(np.median(direct), rel=1e-10)

    def test_well_mode_counts_samples(self):
        # 4 observations a year among 12 months; windows count paired samples
        n = 21 * 12
        x = counter_normal(8, n)
        y = x + counter_normal(9, n)
        y[np.isin(np.arange(n) % 12, (0, 4, 7, 10), invert=True)] = np.nan
        res = expanding_median_r(x, y, WindowScheme.well())
        assert res.n_windows == 84 - 40 + 1

    def test_too_short(self):
        with pytest.raises(ValueError):
            expanding_median_r(np.arange(10.0), np.arange(10.0), WindowScheme(60))

    def test_step(self):
        x = counter_normal(10, 100)
        res = expanding_median_r(x, x + counter_normal(11, 100), WindowScheme(60, 7))
        assert res.n_windows == len(range(60, 101, 7)) + 1


def _pair(k_true, noise=0.0, seed=0, K=24, n_target=120):
    p_axis = TimeAxis(MonthIndex(1990, 1), n_target + K + 12)
    precip = gen_precip(p_axis, seed)
    acc = accumulate(precip, k_true)
    start = p_axis[K + 12]
    tgt = acc.window(start, p_axis.end)
    tgt = tgt.with_values(tgt.values + noise * counter_normal(seed, tgt.axis.length, 99))
    return tgt, precip


class TestProfile:
    def test_exact_construction(self):
        tgt, precip = _pair(7)
        prof = correlation_profile(tgt, precip, K=24, w=WindowScheme(60))
        assert prof.median_r[prof.entry(7)] == pytest.approx(1.0)
        assert optimal_period(prof).k_star == 7

    def test_k1(self):
        tgt, precip = _pair(1)
        prof = correlation_profile(tgt, precip, K=1, w=WindowScheme(60))
        assert prof.K == 1 and prof.ks.tolist() == [1]

    def test_insufficient_history(self):
        tgt, precip = _pair(3)
        with pytest.raises(InsufficientHistoryError) as err:
            correlation_profile(tgt, precip, K=60, w=WindowScheme(60))
        assert err.value.required_start == tgt.axis.start.shift(-59)
        assert str(err.value.required_start) in str(err.value)

    def test_composed_equality(self):
        tgt, precip = _pair(5, noise=1.0, seed=3)
        prof = correlation_profile(tgt, precip, K=12, w=WindowScheme(60))
        for k in (1, 5, 12):
            acc = accumulate(precip, k).window(tgt.axis.start, tgt.axis.end)
            direct = expanding_median_r(acc.values, tgt.values, WindowScheme(60))
            assert prof.median_r[prof.entry(k)] == pytest.approx(direct.median_r, abs=1e-12)
            assert prof.median_p[prof.entry(k)] == pytest.approx(direct.median_p, rel=1e-6, abs=1e-300)

    def test_white_noise_target(self):
        _, precip = _pair(3)
        tgt = make_series(counter_normal(77, 120), start=(precip.axis[36].year, precip.axis[36].month))
        prof = correlation_profile(tgt, precip, K=24, w=WindowScheme(60))
        assert np.all(np.abs(prof.median_r) < 0.35)
        assert np.mean(prof.median_p > 0.05) > 0.5

    @given(st.floats(0.01, 100), st.floats(-50, 50), st.floats(0.1, 10), st.integers(0, 50))
    def test_affine_invariance_of_k_star(self, a, b, c, seed):
        tgt, precip = _pair(9, noise=2.0, seed=seed)
        base = optimal_period(correlation_profile(tgt, precip, 24, WindowScheme(60)))
        moved = optimal_period(correlation_profile(
            tgt.with_values(c * tgt.values - 3), precip.with_values(a * precip.values + b), 24, WindowScheme(60)))
        assert moved.k_star == base.k_star


def _profile(r, p):
    r, p = np.asarray(r, float), np.asarray(p, float)
    return CorrelationProfile(np.arange(1, r.size + 1), r, p, [np.array([v, v]) for v in r])


class TestOptimalPeriod:
    def test_unique_max(self):
        r = np.linspace(0.1, 0.5, 24)
        r[17] = 0.9
        res = optimal_period(_profile(r, np.full(24, 0.01)))
        assert res.k_star == 18 and res.status == "ok"

    def test_ties_to_smallest(self):
        assert optimal_period(_profile([0.5, 0.7, 0.7], [0.01] * 3)).k_star == 2

    def test_significance_filter(self):
        res = optimal_period(_profile([0.5, 0.9], [0.01, 0.2]))
        assert res.k_star == 1 and res.best_k == 2

    def test_all_negative(self):
        res = optimal_period(_profile([-0.5, -0.2], [0.01, 0.01]))
        assert res.k_star is None and res.status == "none" and res.best_k == 2

    def test_full_series(self):
        tgt, precip = _pair(7)
        res = full_series_r(tgt, precip, K=24)
        assert res.k_star == 7 and res.median_r == pytest.approx(1.0)
        with pytest.raises(DegenerateCorrelationError):
            full_series_r(tgt.with_values(np.ones(tgt.axis.length)), precip, K=3)


class TestAutocorrelation:
    def test_lag0_and_white_noise(self):
        acf = autocorrelation(make_series(counter_normal(12, 180)), 24)
        assert acf[0] == 1.0
        assert abs(acf[12]) < 0.2

    def test_ar1(self):
        acf = autocorrelation(gen_ar1(5000, 0.9, 1.0, seed=4), 3)
        assert acf[1] == pytest.approx(0.9, abs=0.02)

    def test_short_lags_missing(self):
        acf = autocorrelation(make_series(counter_normal(1, 6)), 10)
        assert np.isnan(acf[6:]).all()


@given(arrays(float, st.integers(3, 50), elements=st.floats(-1e3, 1e3)),
       arrays(float, st.integers(3, 50), elements=st.floats(-1e3, 1e3)))
def test_pearson_bounded(x, y):
    n = min(x.size, y.size)
    try:
        r = pearson_r(x[:n], y[:n])
    except DegenerateCorrelationError:
        return
    assert -1.0 <= r <= 1.0
