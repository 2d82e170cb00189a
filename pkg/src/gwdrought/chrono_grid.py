"""Monthly time axis, regular lat/lon grids, regions and spatial aggregation.

Missing values are NaN throughout and are never imputed here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import total_ordering

import numpy as np


class GridError(ValueError):
    """Raised for incompatible or malformed grid geometry."""


class UnknownRegionError(KeyError):
    pass


@total_ordering
@dataclass(frozen=True)
class MonthIndex:
    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month must be in 1..12, got {self.month}")

    @property
    def ordinal(self) -> int:
        return self.year * 12 + self.month - 1

    @classmethod
    def from_ordinal(cls, n: int) -> "MonthIndex":
        y, m = divmod(int(n), 12)
        return cls(y, m + 1)

    @classmethod
    def parse(cls, text: str) -> "MonthIndex":
        """Parse ``YYYY-MM`` (also accepts ``MM/YYYY``)."""
        text = text.strip()
        if "/" in text:
            m, y = text.split("/")
        else:
            y, m = text.split("-")
        return cls(int(y), int(m))

    def shift(self, months: int) -> "MonthIndex":
        return MonthIndex.from_ordinal(self.ordinal + months)

    def __lt__(self, other):
        if not isinstance(other, MonthIndex):
            return NotImplemented
        return self.ordinal < other.ordinal

    def __str__(self):
        return f"{self.year:04d}-{self.month:02d}"


def months_between(a: MonthIndex, b: MonthIndex) -> int:
    """Signed number of whole months from `a` to `b`."""
    return b.ordinal - a.ordinal


MonthRange = tuple  # (MonthIndex, MonthIndex), both ends inclusive


def parse_month_range(text: str) -> tuple[MonthIndex, MonthIndex]:
    a, b = text.split(":")
    return MonthIndex.parse(a), MonthIndex.parse(b)


@dataclass(frozen=True)
class TimeAxis:
    start: MonthIndex
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("time axis needs at least one month")

    @classmethod
    def spanning(cls, first: MonthIndex, last: MonthIndex) -> "TimeAxis":
        return cls(first, months_between(first, last) + 1)

    @property
    def end(self) -> MonthIndex:
        return self.start.shift(self.length - 1)

    def __len__(self):
        return self.length

    def __getitem__(self, i: int) -> MonthIndex:
        if i < 0:
            i += self.length
        if not 0 <= i < self.length:
            raise IndexError(i)
        return self.start.shift(i)

    def __iter__(self):
        for i in range(self.length):
            yield self.start.shift(i)

    def index_of(self, m: MonthIndex) -> int:
        i = months_between(self.start, m)
        if not 0 <= i < self.length:
            raise IndexError(f"{m} is outside axis {self.start}..{self.end}")
        return i

    def contains(self, m: MonthIndex) -> bool:
        return 0 <= months_between(self.start, m) < self.length

    def calendar_months(self) -> np.ndarray:
        """Calendar month (1..12) of every step."""
        return (self.start.ordinal + np.arange(self.length)) % 12 + 1

    def years(self) -> np.ndarray:
        return (self.start.ordinal + np.arange(self.length)) // 12

    def range_slice(self, first: MonthIndex, last: MonthIndex) -> slice:
        return slice(self.index_of(first), self.index_of(last) + 1)


@dataclass(frozen=True, eq=False)
class MonthlySeries:
    """One variable on a monthly axis; NaN marks a missing month."""

    axis: TimeAxis
    values: np.ndarray
    units: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.shape[0] != self.axis.length:
            raise ValueError(
                f"values length {v.shape} does not match axis length {self.axis.length}"
            )
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.axis.length

    def with_values(self, values, units: str | None = None) -> "MonthlySeries":
        return MonthlySeries(self.axis, values, self.units if units is None else units)

    def window(self, first: MonthIndex, last: MonthIndex) -> "MonthlySeries":
        sl = self.axis.range_slice(first, last)
        return MonthlySeries(TimeAxis.spanning(first, last), self.values[sl].copy(), self.units)

    def value_at(self, m: MonthIndex) -> float:
        return float(self.values[self.axis.index_of(m)])

    def months(self) -> list[MonthIndex]:
        return list(self.axis)


def align(*series: MonthlySeries) -> tuple[TimeAxis, list[np.ndarray]]:
    """Restrict series to their common months."""
    first = max(s.axis.start for s in series)
    last = min(s.axis.end for s in series)
    if last < first:
        raise ValueError("series do not overlap in time")
    axis = TimeAxis.spanning(first, last)
    return axis, [s.values[s.axis.range_slice(first, last)] for s in series]


@dataclass(frozen=True)
class Grid2D:
    lat0: float
    lon0: float
    dlat: float
    dlon: float
    nlat: int
    nlon: int

    def __post_init__(self):
        if not (self.dlat > 0 and self.dlon > 0):
            raise GridError("grid spacing must be positive")
        if self.nlat < 1 or self.nlon < 1:
            raise GridError("grid needs at least one cell")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nlat, self.nlon)

    def lats(self) -> np.ndarray:
        return self.lat0 + np.arange(self.nlat) * self.dlat

    def lons(self) -> np.ndarray:
        return self.lon0 + np.arange(self.nlon) * self.dlon

    def center(self, i: int, j: int) -> tuple[float, float]:
        return (self.lat0 + i * self.dlat, self.lon0 + j * self.dlon)

    def same_as(self, other: "Grid2D", tol: float = 1e-9) -> bool:
        return (
            self.shape == other.shape
            and abs(self.lat0 - other.lat0) <= tol
            and abs(self.lon0 - other.lon0) <= tol
            and abs(self.dlat - other.dlat) <= tol
            and abs(self.dlon - other.dlon) <= tol
        )

    def cos_weights(self) -> np.ndarray:
        w = np.cos(np.deg2rad(self.lats()))
        return np.repeat(w[:, None], self.nlon, axis=1)


@dataclass(frozen=True, eq=False)
class GriddedSeries:
    grid: Grid2D
    axis: TimeAxis
    values: np.ndarray
    units: str = ""

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.dtype != bool:
            v = v.astype(float, copy=False)
        if v.shape != (self.axis.length, self.grid.nlat, self.grid.nlon):
            raise ValueError(
                f"values shape {v.shape} != {(self.axis.length,) + self.grid.shape}"
            )
        object.__setattr__(self, "values", v)

    def cell(self, i: int, j: int) -> MonthlySeries:
        return MonthlySeries(self.axis, self.values[:, i, j].astype(float), self.units)

    def with_values(self, values, units: str | None = None) -> "GriddedSeries":
        return GriddedSeries(self.grid, self.axis, values, self.units if units is None else units)

    def window(self, first: MonthIndex, last: MonthIndex) -> "GriddedSeries":
        sl = self.axis.range_slice(first, last)
        return GriddedSeries(self.grid, TimeAxis.spanning(first, last), self.values[sl].copy(), self.units)


@dataclass(frozen=True, eq=False)
class RegionMask:
    """Region label per cell (empty string = no region) and optional area weights."""

    grid: Grid2D
    membership: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        m = np.asarray(self.membership, dtype=object)
        if m.shape != self.grid.shape:
            raise ValueError("membership shape does not match grid")
        object.__setattr__(self, "membership", m)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != self.grid.shape:
                raise ValueError("weights shape does not match grid")
            if np.any(w < 0):
                raise ValueError("weights must be non-negative")
            object.__setattr__(self, "weights", w)

    def labels(self) -> list[str]:
        return sorted({str(x) for x in self.membership.ravel() if x not in ("", None)})

    def members(self, region: str) -> np.ndarray:
        sel = self.membership == region
        if not sel.any():
            raise UnknownRegionError(f"unknown region: {region!r}")
        return sel

    def cell_weights(self, weighted: bool = True) -> np.ndarray:
        if not weighted:
            return np.ones(self.grid.shape)
        if self.weights is not None:
            return self.weights
        return self.grid.cos_weights()


@dataclass(frozen=True, eq=False)
class CategoricalGrid:
    grid: Grid2D
    classes: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.classes)
        if c.shape != self.grid.shape:
            raise ValueError("classes shape does not match grid")
        object.__setattr__(self, "classes", c.astype(np.int64))


def _weighted_mean(values: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted mean over the trailing (cell) axis, skipping NaN; NaN if nothing valid."""
    ok = ~np.isnan(values)
    ww = np.where(ok, w, 0.0)
    num = (np.where(ok, values, 0.0) * ww).sum(axis=-1)
    den = ww.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / den
    return np.where(den > 0, out, np.nan)


def regional_mean(f: GriddedSeries, m: RegionMask, region: str, weighted: bool = True) -> MonthlySeries:
    """Area-weighted mean over the member cells of `region` for every month.

    Weights are the mask's own weights when present, otherwise cos(latitude);
    ``weighted=False`` gives the plain cell mean.
    """
    if not f.grid.same_as(m.grid):
        raise GridError("field and region mask are on different grids")
    sel = m.members(region)
    w = m.cell_weights(weighted)[sel]
    vals = f.values[:, sel].astype(float)
    return MonthlySeries(f.axis, _weighted_mean(vals, w), f.units)


def nearest_cell(g: Grid2D, lat: float, lon: float) -> tuple[int, int]:
    """Index of the cell center nearest to (lat, lon) in degree space.

    Ties go to the lower row, then the lower column.
    """
    half_lat, half_lon = g.dlat / 2, g.dlon / 2
    lats, lons = g.lats(), g.lons()
    if not (lats[0] - half_lat <= lat <= lats[-1] + half_lat and lons[0] - half_lon <= lon <= lons[-1] + half_lon):
        raise GridError(f"point ({lat}, {lon}) is outside grid")
    # planar distance is separable, and argmin keeps the first (lowest) index on ties
    return int(np.argmin(np.abs(lats - lat))), int(np.argmin(np.abs(lons - lon)))


def _refinement(fine: Grid2D, coarse: Grid2D) -> tuple[int, int, int, int]:
    """Row/column offsets and refinement ratios mapping coarse cells onto fine cells."""
    out = []
    for c0, cd, cn, f0, fd, fn in (
        (coarse.lat0, coarse.dlat, coarse.nlat, fine.lat0, fine.dlat, fine.nlat),
        (coarse.lon0, coarse.dlon, coarse.nlon, fine.lon0, fine.dlon, fine.nlon),
    ):
        ratio = cd / fd
        r = int(round(ratio))
        if r < 1 or abs(ratio - r) > 1e-6:
            raise GridError(f"non-integer refinement ratio {ratio:g}")
        edge = c0 - cd / 2 + fd / 2
        off = (edge - f0) / fd
        o = int(round(off))
        if abs(off - o) > 1e-6:
            raise GridError("coarse cell edges do not coincide with fine cell edges")
        if o < 0 or o + cn * r > fn:
            raise GridError("coarse grid extends beyond fine grid")
        out.append((o, r))
    (oi, ri), (oj, rj) = out
    return oi, oj, ri, rj


def _blocks(a: np.ndarray, fine: Grid2D, coarse: Grid2D) -> np.ndarray:
    """View trailing (lat, lon) axes as (nlat, nlon, ri*rj) coarse blocks."""
    oi, oj, ri, rj = _refinement(fine, coarse)
    sub = a[..., oi:oi + coarse.nlat * ri, oj:oj + coarse.nlon * rj]
    lead = sub.shape[:-2]
    sub = sub.reshape(lead + (coarse.nlat, ri, coarse.nlon, rj))
    sub = np.moveaxis(sub, -3, -2)
    return sub.reshape(lead + (coarse.nlat, coarse.nlon, ri * rj))


def majority_resample(fine: CategoricalGrid, coarse: Grid2D) -> CategoricalGrid:
    """Modal fine class inside each coarse cell; ties go to the smallest label."""
    blocks = _blocks(fine.classes, fine.grid, coarse)
    out = np.empty(coarse.shape, dtype=np.int64)
    for i in range(coarse.nlat):
        for j in range(coarse.nlon):
            labels, counts = np.unique(blocks[i, j], return_counts=True)
            out[i, j] = labels[np.argmax(counts)]
    return CategoricalGrid(coarse, out)


def block_mean_resample(
    fine: GriddedSeries,
    coarse: Grid2D,
    mask: CategoricalGrid | None = None,
    keep_class: int = 1,
    min_fraction: float | None = None,
) -> GriddedSeries:
    """Mean of the non-missing fine values falling in each coarse cell.

    With `mask`, only fine cells whose class equals `keep_class` contribute.
    `min_fraction` optionally requires the kept cells to cover more than that
    fraction of the coarse cell, otherwise the cell is missing.
    """
    if mask is not None and not mask.grid.same_as(fine.grid):
        raise GridError("mask is not on the fine grid")
    vals = _blocks(fine.values.astype(float), fine.grid, coarse)
    if mask is None:
        keep = np.ones(vals.shape[1:], dtype=bool)
    else:
        keep = _blocks(mask.classes == keep_class, fine.grid, coarse)
    ok = ~np.isnan(vals) & keep[None]
    total = np.where(ok, vals, 0.0).sum(axis=-1)
    count = ok.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(count > 0, total / np.maximum(count, 1), np.nan)
    if min_fraction is not None:
        frac = keep.mean(axis=-1)
        out = np.where((frac > min_fraction)[None], out, np.nan)
    return GriddedSeries(coarse, fine.axis, out, fine.units)

