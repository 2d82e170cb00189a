"""Climatology removal, standardization, accumulation and GWSA construction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chrono_grid import (
    GriddedSeries,
    Grid2D,
    GridError,
    MonthIndex,
    MonthlySeries,
    TimeAxis,
    nearest_cell,
)

__all__ = [
    "Climatology",
    "DegenerateSeriesError",
    "MonthlySeries",
    "StationRecord",
    "accumulate",
    "grace_gwsa",
    "monthly_climatology",
    "remove_climatology",
    "standardize",
    "well_field",
    "well_gwsa",
]


class DegenerateSeriesError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Climatology:
    means: np.ndarray  # index 0 = January
    baseline: tuple[MonthIndex, MonthIndex]

    def __post_init__(self):
        m = np.asarray(self.means, dtype=float)
        if m.shape != (12,):
            raise ValueError("climatology needs 12 entries")
        object.__setattr__(self, "means", m)

    def __getitem__(self, calendar_month: int) -> float:
        return float(self.means[calendar_month - 1])


@dataclass(frozen=True)
class StationRecord:
    id: str
    lat: float
    lon: float
    specific_yield: float
    observations: tuple = field(default_factory=tuple)  # ((MonthIndex, level_m_bgl), ...)

    def __post_init__(self):
        if not 0 < self.specific_yield < 1:
            raise ValueError(f"well {self.id}: specific yield must be in (0, 1)")
        obs = tuple(self.observations)
        for (a, _), (b, _) in zip(obs, obs[1:]):
            if not a < b:
                raise ValueError(f"well {self.id}: observation months must be strictly increasing")
        object.__setattr__(self, "observations", obs)

    def level_series(self) -> MonthlySeries:
        """Depth to water on a continuous monthly axis, NaN where not observed."""
        if not self.observations:
            raise ValueError(f"well {self.id} has no observations")
        axis = TimeAxis.spanning(self.observations[0][0], self.observations[-1][0])
        v = np.full(axis.length, np.nan)
        for m, level in self.observations:
            v[axis.index_of(m)] = level
        return MonthlySeries(axis, v, "m bgl")


def _baseline_slice(s: MonthlySeries, baseline) -> slice:
    first, last = baseline
    if last < first or not (s.axis.contains(first) and s.axis.contains(last)):
        raise ValueError(f"baseline {first}..{last} is outside series axis {s.axis.start}..{s.axis.end}")
    return s.axis.range_slice(first, last)


def monthly_climatology(s: MonthlySeries, baseline=None) -> Climatology:
    """Per-calendar-month mean of the non-missing samples inside `baseline`.

    `baseline` is an inclusive ``(first, last)`` pair of MonthIndex; the whole
    axis is used when omitted.
    """
    if baseline is None:
        baseline = (s.axis.start, s.axis.end)
    sl = _baseline_slice(s, baseline)
    vals = s.values[sl]
    cal = s.axis.calendar_months()[sl]
    means = np.full(12, np.nan)
    for m in range(1, 13):
        x = vals[(cal == m) & ~np.isnan(vals)]
        if x.size:
            means[m - 1] = x.mean()
    return Climatology(means, tuple(baseline))


def remove_climatology(s: MonthlySeries, c: Climatology) -> MonthlySeries:
    return s.with_values(s.values - c.means[s.axis.calendar_months() - 1])


def standardize(s: MonthlySeries) -> MonthlySeries:
    """Z-score over the non-missing values using the sample (n-1) standard deviation."""
    x = s.values
    ok = ~np.isnan(x)
    if ok.sum() < 2:
        raise DegenerateSeriesError("degenerate series: fewer than 2 values")
    mean = x[ok].mean()
    sd = x[ok].std(ddof=1)
    if not sd > 0 or sd <= 1e-13 * np.abs(x[ok]).max():
        raise DegenerateSeriesError("degenerate series: zero variance")
    return s.with_values((x - mean) / sd, units="1")


def accumulate(s: MonthlySeries, k: int) -> MonthlySeries:
    """Trailing k-month sum ending at each month.

    The first k-1 months, and any window touching a missing month, are NaN.
    """
    n = s.axis.length
    if not 1 <= k <= n:
        raise ValueError(f"accumulation length k={k} outside 1..{n}")
    out = np.full(n, np.nan)
    if k == 1:
        out[:] = s.values
    else:
        out[k - 1:] = np.lib.stride_tricks.sliding_window_view(s.values, k).sum(axis=1)
    return s.with_values(out)


def _check_same_frame(a: GriddedSeries, b: GriddedSeries):
    if not a.grid.same_as(b.grid):
        raise GridError("gridded inputs are on different grids")
    if a.axis != b.axis:
        raise GridError(f"gridded inputs have different time axes ({a.axis} vs {b.axis})")


def grace_gwsa(twsa: GriddedSeries, sws: list[GriddedSeries]) -> GriddedSeries:
    """Groundwater storage anomaly as TWSA minus the ensemble-mean surface storage.

    The ensemble mean skips missing members; a cell-month is missing when TWSA
    is missing or every member is.
    """
    if not sws:
        raise ValueError("at least one surface water storage field is required")
    for member in sws:
        _check_same_frame(twsa, member)
    stack = np.stack([m.values for m in sws])
    ok = ~np.isnan(stack)
    count = ok.sum(axis=0)
    total = np.where(ok, stack, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        ens = np.where(count > 0, total / np.maximum(count, 1), np.nan)
    return twsa.with_values(twsa.values - ens)


def well_gwsa(st: StationRecord, baseline=None) -> MonthlySeries:
    """Storage anomaly (mm) of one well from its depth-to-water record.

    The level anomaly against the well's own calendar-month climatology is
    converted with the specific yield; deeper water means less storage, so the
    sign is flipped.
    """
    levels = st.level_series()
    if baseline is not None:
        first, last = baseline
        first = max(first, levels.axis.start)
        last = min(last, levels.axis.end)
        baseline = (first, last)
    clim = monthly_climatology(levels, baseline)
    anom = remove_climatology(levels, clim)
    return anom.with_values(-anom.values * 1000.0 * st.specific_yield, units="mm")


def well_field(stations: list[StationRecord], grid: Grid2D, baseline=None) -> GriddedSeries:
    """Grid of cell-mean well GWSA, each well assigned to its nearest cell.

    The returned axis is monthly; months without observations are NaN, so only
    the observed calendar months carry data.
    """
    if not stations:
        raise ValueError("at least one station is required")
    series = [well_gwsa(st, baseline) for st in stations]
    first = min(s.axis.start for s in series)
    last = max(s.axis.end for s in series)
    axis = TimeAxis.spanning(first, last)
    total = np.zeros((axis.length,) + grid.shape)
    count = np.zeros((axis.length,) + grid.shape, dtype=np.int64)
    for st, s in zip(stations, series):
        i, j = nearest_cell(grid, st.lat, st.lon)
        sl = axis.range_slice(s.axis.start, s.axis.end)
        ok = ~np.isnan(s.values)
        total[sl, i, j] += np.where(ok, s.values, 0.0)
        count[sl, i, j] += ok
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.where(count > 0, total / np.maximum(count, 1), np.nan)
    return GriddedSeries(grid, axis, vals, "mm")
