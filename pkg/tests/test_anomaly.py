import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gwdrought.anomaly import (
    DegenerateSeriesError,
    StationRecord,
    accumulate,
    grace_gwsa,
    monthly_climatology,
    remove_climatology,
    standardize,
    well_field,
    well_gwsa,
)
from gwdrought.chrono_grid import Grid2D, GriddedSeries, GridError, MonthIndex, TimeAxis
from gwdrought.oracles import rolling_sum

from conftest import make_series

finite = st.floats(-1e4, 1e4, allow_nan=False)


class TestClimatology:
    def test_january_mean(self):
        x = np.arange(24, dtype=float)
        x[0], x[12] = 5.0, 7.0
        s = make_series(x)
        c = monthly_climatology(s)
        assert c[1] == 6.0
        anom = remove_climatology(s, c)
        assert (anom.values[0], anom.values[12]) == (-1.0, 1.0)

    def test_twelve_months_is_series(self):
        s = make_series(np.arange(12.0) * 3)
        np.testing.assert_array_equal(monthly_climatology(s).means, s.values)

    def test_constant_removes_to_zero(self):
        s = make_series(np.full(36, 4.2))
        np.testing.assert_array_equal(remove_climatology(s, monthly_climatology(s)).values, 0.0)

    def test_missing_stays_missing(self):
        x = np.arange(24.0)
        x[5] = np.nan
        out = remove_climatology(make_series(x), monthly_climatology(make_series(x)))
        assert np.isnan(out.values[5]) and not np.isnan(out.values[17])

    def test_baseline_outside_axis(self):
        s = make_series(np.arange(24.0))
        with pytest.raises(ValueError):
            monthly_climatology(s, (MonthIndex(1999, 1), MonthIndex(2000, 12)))

    @given(arrays(float, st.integers(12, 60), elements=finite))
    def test_removed_climatology_is_zero(self, x):
        s = make_series(x)
        c = monthly_climatology(make_series(remove_climatology(s, monthly_climatology(s)).values))
        scale = max(1.0, np.abs(x).max())
        assert np.all(np.abs(c.means) <= 1e-9 * scale)


class TestStandardize:
    def test_pair(self):
        np.testing.assert_allclose(standardize(make_series([-1.0, 1.0])).values, [-2 ** -0.5, 2 ** -0.5])

    def test_degenerate(self):
        with pytest.raises(DegenerateSeriesError, match="degenerate series"):
            standardize(make_series([3.0, 3.0, 3.0]))

    @given(arrays(float, st.integers(3, 200), elements=finite))
    def test_moments_and_idempotence(self, x):
        if np.ptp(x) <= 1e-6 * max(1.0, np.abs(x).max()):
            return
        z = standardize(make_series(x)).values
        assert abs(z.mean()) < 1e-9
        assert abs(z.std(ddof=1) - 1) < 1e-9
        np.testing.assert_allclose(standardize(make_series(z)).values, z, atol=1e-9)


class TestAccumulate:
    def test_examples(self):
        out = accumulate(make_series([10.0, 20, 30, 40]), 3).values
        assert np.isnan(out[:2]).all() and list(out[2:]) == [60.0, 90.0]
        s = make_series([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(accumulate(s, 1).values, s.values)

    def test_missing_in_window(self):
        out = accumulate(make_series([1.0, np.nan, 3.0, 4.0, 5.0]), 2).values
        assert np.isnan(out[:3]).all() and out[3] == 7.0

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            accumulate(make_series([1.0, 2.0]), 3)
        with pytest.raises(ValueError):
            accumulate(make_series([1.0, 2.0]), 0)

    @given(arrays(float, st.integers(1, 240), elements=st.floats(0, 500)), st.data())
    def test_matches_rolling_sum_oracle(self, x, data):
        k = data.draw(st.integers(1, x.size))
        np.testing.assert_allclose(accumulate(make_series(x), k).values, rolling_sum(x, k), rtol=1e-12, atol=1e-9)

    @given(arrays(float, 60, elements=finite), arrays(float, 60, elements=finite),
           st.floats(-10, 10), st.floats(-10, 10), st.integers(1, 60))
    def test_linear(self, x1, x2, a, b, k):
        lhs = accumulate(make_series(a * x1 + b * x2), k).values
        rhs = a * accumulate(make_series(x1), k).values + b * accumulate(make_series(x2), k).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-6 * (1 + np.abs(rhs[~np.isnan(rhs)]).max(initial=0)))


def _gridded(values):
    values = np.asarray(values, dtype=float)
    return GriddedSeries(Grid2D(0.5, 0.5, 1.0, 1.0, 1, 1), TimeAxis(MonthIndex(2002, 1), values.size),
                         values.reshape(-1, 1, 1))


class TestGraceGwsa:
    def test_ensemble_mean(self):
        out = grace_gwsa(_gridded([100.0]), [_gridded([20.0]), _gridded([40.0])])
        assert out.values[0, 0, 0] == 70.0

    def test_zero_sws_and_missing(self):
        out = grace_gwsa(_gridded([1.0, np.nan]), [_gridded([0.0, 0.0])])
        assert out.values[0, 0, 0] == 1.0 and np.isnan(out.values[1, 0, 0])

    def test_mismatch(self):
        with pytest.raises(GridError):
            grace_gwsa(_gridded([1.0, 2.0]), [_gridded([1.0])])

    @given(arrays(float, 12, elements=finite), arrays(float, 12, elements=finite))
    def test_single_member_is_subtraction(self, t, s):
        np.testing.assert_array_equal(grace_gwsa(_gridded(t), [_gridded(s)]).values[:, 0, 0], t - s)


def _station(levels, sy=0.12, months=(1, 5, 8, 11), first_year=2000, lat=0.5, lon=0.5, sid="W"):
    obs = []
    it = iter(levels)
    for y in range(first_year, first_year + 10):
        for m in months:
            try:
                obs.append((MonthIndex(y, m), float(next(it))))
            except StopIteration:
                return StationRecord(sid, lat, lon, sy, tuple(obs))
    return StationRecord(sid, lat, lon, sy, tuple(obs))


class TestWell:
    def test_unit_conversion(self):
        # January levels 10 and 12 -> climatology 11; anomaly +1 m -> -120 mm at Sy 0.12
        st_ = StationRecord("A", 0.5, 0.5, 0.12, ((MonthIndex(2000, 1), 10.0), (MonthIndex(2001, 1), 12.0)))
        g = well_gwsa(st_)
        assert g.value_at(MonthIndex(2001, 1)) == pytest.approx(-120.0)
        st2 = StationRecord("B", 0.5, 0.5, 0.10, ((MonthIndex(2000, 1), 10.5), (MonthIndex(2001, 1), 11.5)))
        assert well_gwsa(st2).value_at(MonthIndex(2000, 1)) == pytest.approx(50.0)

    def test_zero_anomaly(self):
        g = well_gwsa(_station([5.0] * 8))
        obs = g.values[~np.isnan(g.values)]
        np.testing.assert_array_equal(obs, 0.0)

    def test_invalid_station(self):
        with pytest.raises(ValueError):
            StationRecord("A", 0, 0, 1.2, ((MonthIndex(2000, 1), 1.0),))
        with pytest.raises(ValueError):
            StationRecord("A", 0, 0, 0.1, ((MonthIndex(2000, 5), 1.0), (MonthIndex(2000, 1), 1.0)))

    @given(arrays(float, 12, elements=st.floats(1, 50)), st.integers(0, 11), st.floats(0.01, 5))
    def test_deeper_water_means_less_storage(self, levels, i, bump):
        base = well_gwsa(_station(levels))
        deeper = levels.copy()
        deeper[i] += bump
        after = well_gwsa(_station(deeper))
        m = _station(levels).observations[i][0]
        assert after.value_at(m) < base.value_at(m)

    def test_field(self):
        grid = Grid2D(0.5, 0.5, 1.0, 1.0, 1, 2)
        a = _station([1.0, 2.0, 3.0, 4.0, 2.0, 3.0, 4.0, 5.0], sid="a")
        f = well_field([a], grid)
        np.testing.assert_array_equal(f.values[:, 0, 0], well_gwsa(a).values)
        assert np.isnan(f.values[:, 0, 1]).all()
        # two wells with mirrored anomalies cancel
        b = _station([3.0, 2.0, 1.0, 0.0, 2.0, 1.0, 0.0, -1.0], sid="b", lat=0.4)
        f2 = well_field([a, b], grid)
        obs = f2.values[:, 0, 0]
        np.testing.assert_allclose(obs[~np.isnan(obs)], 0.0, atol=1e-9)
