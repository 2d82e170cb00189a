import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gwdrought.chrono_grid import Grid2D, GriddedSeries, MonthIndex, RegionMask, TimeAxis, UnknownRegionError
from gwdrought.drought import (
    areal_extent,
    detect_events,
    drought_mask,
    fill_gaps_linear,
    most_widespread,
    period_change,
)
from gwdrought.oracles import linear_fill, maximal_negative_runs

from conftest import make_series

signs = arrays(float, st.integers(1, 120), elements=st.sampled_from([-2.0, -1.0, 0.0, 1.0]))


class TestFill:
    def test_examples(self):
        assert fill_gaps_linear(make_series([1, np.nan, 3])).values.tolist() == [1, 2, 3]
        assert fill_gaps_linear(make_series([0, np.nan, np.nan, 6])).values.tolist() == [0, 2, 4, 6]
        out = fill_gaps_linear(make_series([np.nan, 1, 2])).values
        assert np.isnan(out[0]) and out[1:].tolist() == [1, 2]

    def test_too_few(self):
        with pytest.raises(ValueError):
            fill_gaps_linear(make_series([np.nan, 1.0, np.nan]))

    @given(arrays(float, st.integers(2, 100), elements=st.floats(-100, 100)), st.data())
    def test_known_values_unchanged_and_oracle(self, x, data):
        gaps = np.array(data.draw(st.lists(st.booleans(), min_size=x.size, max_size=x.size)))
        x = np.where(gaps, np.nan, x)
        if np.count_nonzero(~np.isnan(x)) < 2:
            return
        out = fill_gaps_linear(make_series(x)).values
        ok = ~np.isnan(x)
        assert np.array_equal(out[ok], x[ok])
        np.testing.assert_allclose(out, linear_fill(x), rtol=1e-12, atol=1e-12)


class TestDetect:
    def test_boundary(self):
        cat = detect_events(make_series([-1.0, -1, -1]))
        assert len(cat.events) == 1
        e = cat.events[0]
        assert e.duration == 3 and e.persistent

    def test_runs_of_two(self):
        assert detect_events(make_series([-1.0, -1, 1, -1, -1])).events == ()

    def test_zero_breaks_run(self):
        assert detect_events(make_series([-1.0, -1, 0, -1, -1, -1])).events[0].start == MonthIndex(2000, 4)

    def test_documented_event(self):
        axis = TimeAxis.spanning(MonthIndex(2002, 1), MonthIndex(2016, 12))
        x = np.ones(axis.length)
        x[axis.range_slice(MonthIndex(2004, 2), MonthIndex(2005, 10))] = -1.0
        cat = detect_events(make_series(x, start=(2002, 1)))
        (e,) = cat.events
        assert (str(e.start), str(e.end), e.duration) == ("2004-02", "2005-10", 21)
        assert not e.persistent

    def test_inclusive_and_exclusive_counts(self):
        axis = TimeAxis.spanning(MonthIndex(2002, 1), MonthIndex(2016, 12))
        x = np.ones(axis.length)
        x[axis.index_of(MonthIndex(2012, 4)):] = -5.0
        x[-3] = -9.0
        (e,) = detect_events(make_series(x, start=(2002, 1))).events
        assert (e.duration, e.duration_exclusive) == (57, 56)
        assert e.persistent and e.peak_departure == -9.0 and e.peak_month == MonthIndex(2016, 10)

    def test_extremes(self):
        cat = detect_events(make_series([1.0, 5.0, -7.0, 2.0]))
        assert cat.wettest == (5.0, MonthIndex(2000, 2))
        assert cat.driest == (-7.0, MonthIndex(2000, 3))

    def test_longest_ties(self):
        cat = detect_events(make_series([-1.0] * 4 + [1.0] + [-1.0] * 4 + [1.0, -1, -1, -1]))
        assert [e.duration for e in cat.longest()] == [4, 4]

    @given(signs, st.integers(1, 5))
    def test_oracle(self, x, min_run):
        cat = detect_events(make_series(x), min_run)
        got = [(e.start.ordinal - MonthIndex(2000, 1).ordinal, e.end.ordinal - MonthIndex(2000, 1).ordinal)
               for e in cat.events]
        assert got == maximal_negative_runs(x, min_run)

    @given(signs)
    def test_event_invariants(self, x):
        cat = detect_events(make_series(x))
        prev_end = -2
        for e in cat.events:
            a = e.start.ordinal - MonthIndex(2000, 1).ordinal
            b = e.end.ordinal - MonthIndex(2000, 1).ordinal
            assert np.all(x[a:b + 1] < 0)
            assert a == 0 or x[a - 1] >= 0
            assert b == x.size - 1 or x[b + 1] >= 0
            assert a > prev_end + 1
            assert e.peak_departure <= 0 and e.start <= e.peak_month <= e.end
            prev_end = b


def _field(cells):
    cells = np.asarray(cells, dtype=float)
    grid = Grid2D(0.5, 0.5, 1.0, 1.0, cells.shape[1], cells.shape[2])
    return GriddedSeries(grid, TimeAxis(MonthIndex(2000, 1), cells.shape[0]), cells)


class TestExtent:
    def test_mask_matches_detector(self):
        x = np.array([1.0, -1, -1, -1, 2, -1, -1])
        m = drought_mask(_field(x.reshape(-1, 1, 1)))
        assert m.values[:, 0, 0].tolist() == [False, True, True, True, False, False, False]

    def test_single_drought_cell(self):
        vals = np.ones((5, 2, 2))
        vals[1:4, 1, 0] = -1
        m = drought_mask(_field(vals))
        expected = np.zeros((2, 2), bool)
        expected[1, 0] = True
        assert np.array_equal(m.values.any(axis=0), expected)

    def test_percentages(self):
        vals = np.ones((4, 1, 2))
        vals[:3, 0, 0] = -1
        f = _field(vals)
        region = RegionMask(f.grid, np.array([["R", "R"]], dtype=object))
        ext = areal_extent(drought_mask(f), region, "R")
        assert ext.values.tolist() == [50.0, 50.0, 50.0, 0.0]
        assert most_widespread(ext) == (MonthIndex(2000, 1), 50.0)
        vals[:3, 0, 1] = -1
        ext = areal_extent(drought_mask(_field(vals)), region, "R")
        assert ext.values[0] == 100.0
        with pytest.raises(UnknownRegionError):
            areal_extent(drought_mask(f), region, "X")

    @given(arrays(float, (12, 2, 3), elements=st.sampled_from([-1.0, 1.0])))
    def test_bounds(self, vals):
        f = _field(vals)
        region = RegionMask(f.grid, np.full((2, 3), "R", dtype=object))
        mask = drought_mask(f)
        ext = areal_extent(mask, region, "R").values
        assert np.all((ext >= 0) & (ext <= 100))
        if not mask.values.any():
            assert np.all(ext == 0)


class TestPeriodChange:
    def _s(self, early, late):
        x = np.concatenate([np.full(36, early), np.zeros(108), np.full(36, late)])
        return make_series(x, start=(2002, 1))

    def test_examples(self):
        early, late = (MonthIndex(2002, 1), MonthIndex(2004, 12)), (MonthIndex(2014, 1), MonthIndex(2016, 12))
        assert period_change(self._s(50, 50), early, late) == 0.0
        assert period_change(self._s(50, 25), early, late) == -50.0
        assert period_change(self._s(-50, -75), early, late) == -50.0
        with pytest.raises(ValueError, match="undefined baseline"):
            period_change(self._s(0, 3), early, late)
