"""Groundwater drought events: runs of below-normal storage anomaly."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chrono_grid import (
    GriddedSeries,
    GridError,
    MonthIndex,
    MonthlySeries,
    RegionMask,
    months_between,
)


@dataclass(frozen=True)
class DroughtEvent:
    start: MonthIndex
    end: MonthIndex
    peak_departure: float
    peak_month: MonthIndex
    persistent: bool = False

    @property
    def duration(self) -> int:
        """Months in the event, counting both ends."""
        return months_between(self.start, self.end) + 1

    @property
    def duration_exclusive(self) -> int:
        return months_between(self.start, self.end)


@dataclass(frozen=True)
class DroughtCatalog:
    series_id: str
    events: tuple = field(default_factory=tuple)
    wettest: tuple | None = None  # (value, MonthIndex)
    driest: tuple | None = None

    @property
    def latest(self) -> DroughtEvent | None:
        return self.events[-1] if self.events else None

    def longest(self) -> list[DroughtEvent]:
        """All events sharing the maximum duration, in time order."""
        if not self.events:
            return []
        d = max(e.duration for e in self.events)
        return [e for e in self.events if e.duration == d]


def fill_gaps_linear(s: MonthlySeries) -> MonthlySeries:
    """Linearly interpolate interior missing months; leading and trailing gaps stay missing."""
    x = s.values
    ok = ~np.isnan(x)
    if ok.sum() < 2:
        raise ValueError("gap filling needs at least 2 non-missing values")
    idx = np.flatnonzero(ok)
    out = x.copy()
    gaps = np.flatnonzero(~ok)
    gaps = gaps[(gaps > idx[0]) & (gaps < idx[-1])]
    out[gaps] = np.interp(gaps, idx, x[idx])
    return s.with_values(out)


def negative_runs(x: np.ndarray) -> list[tuple[int, int]]:
    """(start, stop) index pairs of maximal runs of strictly negative values, stop exclusive."""
    neg = np.concatenate(([False], np.asarray(x) < 0, [False]))
    d = np.diff(neg.astype(np.int8))
    starts = np.flatnonzero(d == 1)
    stops = np.flatnonzero(d == -1)
    return list(zip(starts.tolist(), stops.tolist()))


def detect_events(anom: MonthlySeries, min_run: int = 3, series_id: str = "") -> DroughtCatalog:
    """Catalog drought events in a gap-filled anomaly series.

    An event is a maximal run of at least `min_run` strictly negative months.
    Missing months end a run.
    """
    if min_run < 1:
        raise ValueError("min_run must be >= 1")
    x = anom.values
    n = x.size
    events = []
    for a, b in negative_runs(x):
        if b - a < min_run:
            continue
        k = a + int(np.argmin(x[a:b]))
        events.append(
            DroughtEvent(
                anom.axis[a], anom.axis[b - 1], float(x[k]), anom.axis[k], persistent=(b == n)
            )
        )
    wettest = driest = None
    if (~np.isnan(x)).any():
        i, j = int(np.nanargmax(x)), int(np.nanargmin(x))
        wettest = (float(x[i]), anom.axis[i])
        driest = (float(x[j]), anom.axis[j])
    return DroughtCatalog(series_id, tuple(events), wettest, driest)


def drought_mask(field: GriddedSeries, min_run: int = 3) -> GriddedSeries:
    """Per cell, True in every month that belongs to a drought event."""
    x = field.values.astype(float)
    out = np.zeros(x.shape, dtype=bool)
    for i in range(field.grid.nlat):
        for j in range(field.grid.nlon):
            for a, b in negative_runs(x[:, i, j]):
                if b - a >= min_run:
                    out[a:b, i, j] = True
    return GriddedSeries(field.grid, field.axis, out, "flag")


def areal_extent(mask: GriddedSeries, region: RegionMask, label: str, weighted: bool = True) -> MonthlySeries:
    """Percent of the region's (weighted) area in drought each month."""
    if not mask.grid.same_as(region.grid):
        raise GridError("drought mask and region mask are on different grids")
    sel = region.members(label)
    w = region.cell_weights(weighted)[sel]
    total = w.sum()
    flags = mask.values[:, sel].astype(float)
    if total <= 0:
        pct = np.zeros(mask.axis.length)
    else:
        pct = 100.0 * (flags @ w) / total
    return MonthlySeries(mask.axis, np.clip(pct, 0.0, 100.0), "%")


def most_widespread(extent: MonthlySeries) -> tuple[MonthIndex, float]:
    """Earliest month with the largest areal extent."""
    i = int(np.nanargmax(extent.values))
    return extent.axis[i], float(extent.values[i])


def _range_mean(s: MonthlySeries, rng) -> float:
    first, last = max(rng[0], s.axis.start), min(rng[1], s.axis.end)
    if last < first:
        raise ValueError(f"no data in {rng[0]}..{rng[1]}")
    x = s.values[s.axis.range_slice(first, last)]
    x = x[~np.isnan(x)]
    if x.size == 0:
        raise ValueError(f"no data in {first}..{last}")
    return float(x.mean())


def period_change(s: MonthlySeries, early, late) -> float:
    """Percent change of the late-period mean relative to |early-period mean|."""
    e = _range_mean(s, early)
    l_ = _range_mean(s, late)
    if e == 0:
        raise ValueError("undefined baseline: early-period mean is zero")
    return 100.0 * (l_ - e) / abs(e)
