import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gwdrought.chrono_grid import (
    CategoricalGrid,
    Grid2D,
    GriddedSeries,
    GridError,
    MonthIndex,
    RegionMask,
    TimeAxis,
    UnknownRegionError,
    block_mean_resample,
    majority_resample,
    months_between,
    nearest_cell,
    parse_month_range,
    regional_mean,
)

months = st.builds(MonthIndex, st.integers(1900, 2100), st.integers(1, 12))


class TestMonthIndex:
    def test_parse_forms(self):
        assert MonthIndex.parse("2012-04") == MonthIndex(2012, 4)
        assert MonthIndex.parse("04/2012") == MonthIndex(2012, 4)
        assert str(MonthIndex(2016, 12)) == "2016-12"

    def test_invalid_month(self):
        with pytest.raises(ValueError):
            MonthIndex(2000, 13)
        with pytest.raises(ValueError):
            MonthIndex.parse("2000/13/1")

    def test_months_between_examples(self):
        a, b = MonthIndex(2012, 4), MonthIndex(2016, 12)
        assert months_between(a, a) == 0
        assert months_between(a, b) == 56
        assert months_between(b, a) == -56

    def test_shift_and_order(self):
        assert MonthIndex(2002, 1).shift(-1) == MonthIndex(2001, 12)
        assert MonthIndex(2001, 12) < MonthIndex(2002, 1)

    @given(months, months, months)
    def test_months_between_antisymmetric_additive(self, a, b, c):
        assert months_between(a, b) == -months_between(b, a)
        assert months_between(a, b) + months_between(b, c) == months_between(a, c)

    @given(months, st.integers(-3000, 3000))
    def test_shift_roundtrip(self, a, k):
        assert months_between(a, a.shift(k)) == k
        assert MonthIndex.from_ordinal(a.ordinal) == a

    def test_parse_range(self):
        assert parse_month_range("2002-01:2016-12") == (MonthIndex(2002, 1), MonthIndex(2016, 12))


class TestTimeAxis:
    def test_bijection(self):
        ax = TimeAxis.spanning(MonthIndex(2002, 1), MonthIndex(2016, 12))
        assert len(ax) == 180
        assert ax[0] == MonthIndex(2002, 1) and ax.end == MonthIndex(2016, 12)
        for i in (0, 17, 179):
            assert ax.index_of(ax[i]) == i
        assert not ax.contains(MonthIndex(2017, 1))
        with pytest.raises(IndexError):
            ax.index_of(MonthIndex(2001, 12))

    def test_range_slice(self):
        ax = TimeAxis(MonthIndex(2000, 1), 24)
        sl = ax.range_slice(MonthIndex(2000, 3), MonthIndex(2000, 5))
        assert (sl.start, sl.stop) == (2, 5)


def _field(values, grid):
    values = np.asarray(values, dtype=float)
    return GriddedSeries(grid, TimeAxis(MonthIndex(2000, 1), values.shape[0]), values)


class TestRegionalMean:
    grid = Grid2D(0.0, 0.0, 1.0, 1.0, 1, 2)

    def test_constant_field(self):
        mask = RegionMask(self.grid, np.array([["A", "A"]], dtype=object))
        s = regional_mean(_field(np.full((3, 1, 2), 5.0), self.grid), mask, "A")
        np.testing.assert_array_equal(s.values, 5.0)

    def test_two_cells_equal_weights(self):
        mask = RegionMask(self.grid, np.array([["A", "A"]], dtype=object))
        s = regional_mean(_field([[[2.0, 4.0]]], self.grid), mask, "A", weighted=False)
        assert s.values[0] == 3.0

    def test_all_missing_month(self):
        mask = RegionMask(self.grid, np.array([["A", "A"]], dtype=object))
        s = regional_mean(_field([[[np.nan, np.nan]], [[1.0, np.nan]]], self.grid), mask, "A")
        assert np.isnan(s.values[0]) and s.values[1] == 1.0

    def test_unknown_region(self):
        mask = RegionMask(self.grid, np.array([["A", ""]], dtype=object))
        with pytest.raises(UnknownRegionError, match="unknown region"):
            regional_mean(_field(np.zeros((1, 1, 2)), self.grid), mask, "B")

    def test_cos_weighting(self):
        g = Grid2D(0.0, 0.0, 60.0, 1.0, 2, 1)
        mask = RegionMask(g, np.array([["A"], ["A"]], dtype=object))
        s = regional_mean(_field([[[0.0], [3.0]]], g), mask, "A")
        # weights 1 and cos(60) = 0.5
        assert s.values[0] == pytest.approx(1.0)

    @given(st.floats(-1e6, 1e6), st.booleans(), st.integers(1, 4), st.integers(1, 4))
    def test_constant_any_weights(self, c, weighted, nlat, nlon):
        g = Grid2D(-10.0, 60.0, 2.0, 2.0, nlat, nlon)
        mask = RegionMask(g, np.full((nlat, nlon), "R", dtype=object))
        s = regional_mean(_field(np.full((2, nlat, nlon), c), g), mask, "R", weighted)
        np.testing.assert_allclose(s.values, c, rtol=1e-12, atol=1e-300)


class TestNearestCell:
    def test_documented_point(self):
        g = Grid2D(8.5, 68.5, 1.0, 1.0, 3, 3)
        assert nearest_cell(g, 9.4, 68.6) == (1, 0)

    def test_tie_goes_low(self):
        g = Grid2D(0.5, 0.5, 1.0, 1.0, 2, 2)
        assert nearest_cell(g, 1.0, 1.0) == (0, 0)

    def test_outside(self):
        g = Grid2D(0.5, 0.5, 1.0, 1.0, 2, 2)
        with pytest.raises(GridError, match="outside grid"):
            nearest_cell(g, 5.0, 0.5)

    @given(st.integers(1, 6), st.integers(1, 6), st.floats(0.1, 2.0))
    def test_centers_map_to_themselves(self, nlat, nlon, d):
        g = Grid2D(-3.0, 70.0, d, d, nlat, nlon)
        for i in range(nlat):
            for j in range(nlon):
                assert nearest_cell(g, *g.center(i, j)) == (i, j)


class TestResampling:
    fine = Grid2D(0.25, 0.25, 0.5, 0.5, 2, 2)
    coarse = Grid2D(0.5, 0.5, 1.0, 1.0, 1, 1)

    def test_majority(self):
        assert majority_resample(CategoricalGrid(self.fine, np.full((2, 2), 7)), self.coarse).classes[0, 0] == 7
        assert majority_resample(CategoricalGrid(self.fine, [[1, 1], [2, 1]]), self.coarse).classes[0, 0] == 1
        assert majority_resample(CategoricalGrid(self.fine, [[2, 1], [1, 2]]), self.coarse).classes[0, 0] == 1

    def test_non_integer_ratio(self):
        with pytest.raises(GridError):
            majority_resample(CategoricalGrid(self.fine, np.ones((2, 2))), Grid2D(0.375, 0.375, 0.75, 0.75, 1, 1))

    @given(st.lists(st.integers(0, 3), min_size=16, max_size=16), st.randoms(use_true_random=False))
    def test_majority_permutation_invariant(self, classes, rnd):
        fine = Grid2D(0.125, 0.125, 0.25, 0.25, 4, 4)
        coarse = Grid2D(0.5, 0.5, 1.0, 1.0, 1, 1)
        a = majority_resample(CategoricalGrid(fine, np.reshape(classes, (4, 4))), coarse).classes[0, 0]
        shuffled = list(classes)
        rnd.shuffle(shuffled)
        b = majority_resample(CategoricalGrid(fine, np.reshape(shuffled, (4, 4))), coarse).classes[0, 0]
        assert a == b

    def test_block_mean(self):
        f = _field([[[0.2, 0.4], [0.9, 0.9]]], self.fine)
        mask = CategoricalGrid(self.fine, [[1, 1], [0, 0]])
        assert block_mean_resample(f, self.coarse, mask).values[0, 0, 0] == pytest.approx(0.3)
        none = CategoricalGrid(self.fine, np.zeros((2, 2)))
        assert np.isnan(block_mean_resample(f, self.coarse, none).values[0, 0, 0])

    def test_block_mean_gate(self):
        f = _field(np.full((1, 2, 2), 0.6), self.fine)
        mask = CategoricalGrid(self.fine, [[1, 1], [0, 0]])
        assert np.isnan(block_mean_resample(f, self.coarse, mask, min_fraction=0.5).values[0, 0, 0])
        mask3 = CategoricalGrid(self.fine, [[1, 1], [1, 0]])
        assert block_mean_resample(f, self.coarse, mask3, min_fraction=0.5).values[0, 0, 0] == pytest.approx(0.6)

    @given(st.floats(-100, 100))
    def test_block_mean_constant(self, c):
        f = _field(np.full((2, 2, 2), c), self.fine)
        out = block_mean_resample(f, self.coarse, CategoricalGrid(self.fine, np.ones((2, 2))))
        np.testing.assert_allclose(out.values, c, atol=1e-12)
