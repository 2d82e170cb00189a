"""NDVI preparation and irrigation-stratified analysis."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .anomaly import accumulate
from .chrono_grid import (
    CategoricalGrid,
    Grid2D,
    GriddedSeries,
    MonthIndex,
    MonthlySeries,
    RegionMask,
    TimeAxis,
    regional_mean,
)
from .drought import fill_gaps_linear
from .optimal_period import InsufficientHistoryError, WindowScheme, expanding_median_r


def week_midpoint(year: int, week: int) -> dt.date:
    """Thursday of ISO week (`year`, `week`), the middle day of that week."""
    if not 1 <= week <= 53:
        raise ValueError(f"week {week} outside 1..53")
    return dt.date.fromisocalendar(year, week, 4)


@dataclass(frozen=True, eq=False)
class WeeklySeries:
    """Consecutive ISO weeks starting at (start_year, start_week); NaN = missing."""

    start_year: int
    start_week: int
    values: np.ndarray

    def __post_init__(self):
        week_midpoint(self.start_year, self.start_week)
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def midpoints(self) -> list[dt.date]:
        d0 = week_midpoint(self.start_year, self.start_week)
        return [d0 + dt.timedelta(weeks=i) for i in range(self.values.size)]


def _month_means(months: np.ndarray, values: np.ndarray) -> tuple[TimeAxis, np.ndarray]:
    """Mean of `values` grouped by month ordinal; values may carry trailing cell axes."""
    lo, hi = int(months.min()), int(months.max())
    axis = TimeAxis(MonthIndex.from_ordinal(lo), hi - lo + 1)
    pos = months - lo
    ok = ~np.isnan(values)
    total = np.zeros((axis.length,) + values.shape[1:])
    count = np.zeros((axis.length,) + values.shape[1:])
    np.add.at(total, pos, np.where(ok, values, 0.0))
    np.add.at(count, pos, ok)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(count > 0, total / np.maximum(count, 1), np.nan)
    return axis, out


def weekly_to_monthly(w: WeeklySeries) -> MonthlySeries:
    """Monthly mean of the weeks whose midpoint falls in each month, interior gaps filled linearly."""
    mids = w.midpoints()
    months = np.array([d.year * 12 + d.month - 1 for d in mids])
    axis, means = _month_means(months, w.values)
    s = MonthlySeries(axis, means, "NDVI")
    return fill_gaps_linear(s)


def weekly_grid_to_monthly(grid: Grid2D, weeks: list[tuple[int, int]], values: np.ndarray) -> GriddedSeries:
    """Gridded version of :func:`weekly_to_monthly`.

    `weeks` lists (year, week) for each leading slice of `values`
    (shape weeks x nlat x nlon). Cells with fewer than two months of data are
    left as they are.
    """
    mids = [week_midpoint(y, k) for y, k in weeks]
    months = np.array([d.year * 12 + d.month - 1 for d in mids])
    axis, means = _month_means(months, np.asarray(values, dtype=float))
    for i in range(grid.nlat):
        for j in range(grid.nlon):
            col = MonthlySeries(axis, means[:, i, j])
            if np.count_nonzero(~np.isnan(col.values)) >= 2:
                means[:, i, j] = fill_gaps_linear(col).values
    return GriddedSeries(grid, axis, means, "NDVI")


@dataclass(frozen=True, eq=False)
class IrrigationFraction:
    grid: Grid2D
    gw_irrigated_fraction: np.ndarray
    total_equipped_fraction: np.ndarray | None = None

    def __post_init__(self):
        for name in ("gw_irrigated_fraction", "total_equipped_fraction"):
            a = getattr(self, name)
            if a is None:
                continue
            a = np.asarray(a, dtype=float)
            if a.shape != self.grid.shape:
                raise ValueError(f"{name} shape does not match grid")
            if np.any((a < 0) | (a > 100)):
                raise ValueError(f"{name} must be within 0..100 percent")
            object.__setattr__(self, name, a)


def irrigation_masks(f: IrrigationFraction, gw_threshold: float = 60.0,
                     rainfed_threshold: float = 20.0) -> tuple[CategoricalGrid, CategoricalGrid]:
    """Groundwater-irrigated (> gw_threshold) and non-irrigated (< rainfed_threshold) strata.

    Each returned grid has class 1 for members and 0 otherwise. Without a total
    equipped fraction the groundwater fraction stands in for it.
    """
    for t in (gw_threshold, rainfed_threshold):
        if not 0 < t < 100:
            raise ValueError("thresholds must be within (0, 100)")
    gw = f.gw_irrigated_fraction
    total = f.total_equipped_fraction if f.total_equipped_fraction is not None else gw
    with np.errstate(invalid="ignore"):
        gw_cls = np.where(gw > gw_threshold, 1, 0)
        non_cls = np.where(total < rainfed_threshold, 1, 0)
    return CategoricalGrid(f.grid, gw_cls), CategoricalGrid(f.grid, non_cls)


@dataclass(frozen=True)
class Season:
    label: str
    months: tuple[int, ...]


KHARIF = Season("Kharif", (6, 7, 8, 9))
RABI = Season("Rabi", (10, 11, 12, 1, 2, 3))


@dataclass(frozen=True, eq=False)
class SeasonalSeries:
    season: Season
    years: np.ndarray
    values: np.ndarray


def season_months(season: Season, year: int, year_convention: str = "start") -> list[MonthIndex]:
    """Calendar months of one season-year.

    ``"start"`` labels a season crossing the new year by the year it starts in
    (Rabi 2005 = Oct 2005..Mar 2006); ``"end"`` labels it by the year it ends in.
    """
    if year_convention not in ("start", "end"):
        raise ValueError(f"unknown year convention {year_convention!r}")
    first = season.months[0]
    wraps = any(m < first for m in season.months)
    base = year - 1 if (wraps and year_convention == "end") else year
    return [MonthIndex(base + (1 if m < first else 0), m) for m in season.months]


def seasonal_mean(s: MonthlySeries, season: Season, year_convention: str = "start") -> SeasonalSeries:
    """Per season-year mean; NaN if any member month is missing.

    Only season-years lying entirely inside the series axis are returned.
    """
    years, vals = [], []
    y0 = s.axis.start.year - 1
    for y in range(y0, s.axis.end.year + 2):
        months = season_months(season, y, year_convention)
        if not all(s.axis.contains(m) for m in months):
            continue
        x = np.array([s.value_at(m) for m in months])
        years.append(y)
        vals.append(np.nan if np.isnan(x).any() else x.mean())
    return SeasonalSeries(season, np.array(years, dtype=int), np.array(vals, dtype=float))


def ndvi_gwsa_coupling(ndvi: MonthlySeries, gwsa: MonthlySeries, k: int = 12,
                       w: WindowScheme = WindowScheme()):
    """Expanding-window median correlation of GWSA with k-month accumulated NDVI anomaly."""
    need = gwsa.axis.start.shift(-(k - 1))
    if ndvi.axis.start > need:
        raise InsufficientHistoryError(need, ndvi.axis.start)
    acc = accumulate(ndvi, k)
    last = min(acc.axis.end, gwsa.axis.end)
    x = acc.window(gwsa.axis.start, last).values
    y = gwsa.window(gwsa.axis.start, last).values
    return expanding_median_r(x, y, w)


def accumulated_on(ndvi: MonthlySeries, target: MonthlySeries, k: int) -> MonthlySeries:
    """k-month accumulation of `ndvi` restricted to the months of `target`."""
    need = target.axis.start.shift(-(k - 1))
    if ndvi.axis.start > need:
        raise InsufficientHistoryError(need, ndvi.axis.start)
    return accumulate(ndvi, k).window(target.axis.start, target.axis.end)


def _stratum_region(region_mask: RegionMask, region: str, stratum: CategoricalGrid) -> RegionMask | None:
    sel = (region_mask.membership == region) & (stratum.classes == 1)
    if not sel.any():
        return None
    return RegionMask(region_mask.grid, np.where(sel, region, ""), region_mask.weights)


def irrigated_vs_rainfed_ndvi(ndvi: GriddedSeries, masks: tuple[CategoricalGrid, CategoricalGrid],
                              region_mask: RegionMask, region: str, season: Season,
                              year_convention: str = "start", weighted: bool = True):
    """Seasonal-mean regional NDVI over groundwater-irrigated and non-irrigated cells.

    Returns ``(irrigated, rainfed)``; a stratum with no cells in the region gives
    an all-NaN series.
    """
    region_mask.members(region)
    out = []
    for stratum in masks:
        rm = _stratum_region(region_mask, region, stratum)
        if rm is None:
            s = MonthlySeries(ndvi.axis, np.full(ndvi.axis.length, np.nan), ndvi.units)
        else:
            s = regional_mean(ndvi, rm, region, weighted)
        out.append(seasonal_mean(s, season, year_convention))
    return out[0], out[1]
