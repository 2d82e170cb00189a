"""Readers and writers for the long-form CSV formats used by the command line tool.

Missing values are written as empty fields. Floats are written with ``repr`` so
that a round trip is exact and repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .anomaly import StationRecord
from .chrono_grid import (
    CategoricalGrid,
    Grid2D,
    GriddedSeries,
    MonthIndex,
    MonthlySeries,
    RegionMask,
    TimeAxis,
)
from .vegetation import IrrigationFraction

GRIDDED_HEADER = ["year", "month", "lat", "lon", "value"]
SERIES_HEADER = ["year", "month", "value"]
REGION_HEADER = ["lat", "lon", "region"]
CLASS_HEADER = ["lat", "lon", "class"]
STATION_HEADER = ["well_id", "lat", "lon", "specific_yield", "year", "month", "level_m_bgl"]
WEEKLY_HEADER = ["year", "week", "lat", "lon", "value"]
IRRIGATION_HEADER = ["lat", "lon", "gw_fraction", "total_equipped_fraction"]


class FormatError(ValueError):
    def __init__(self, path, row: int | None, message: str):
        self.path = str(path)
        self.row = row
        where = f"{path}" if row is None else f"{path}, row {row}"
        super().__init__(f"{where}: {message}")


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def write_rows(path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return path


def _rows(path, header: list[str]):
    """Yield (row_number, dict) for each data row after checking the header."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = [h.strip() for h in next(reader)]
        except StopIteration:
            raise FormatError(path, 1, "empty file") from None
        missing = [h for h in header if h not in got]
        if missing:
            raise FormatError(path, 1, f"header lacks column(s) {', '.join(missing)}")
        pos = {h: got.index(h) for h in got}
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != len(got):
                raise FormatError(path, lineno, f"expected {len(got)} fields, found {len(raw)}")
            yield lineno, {h: raw[i].strip() for h, i in pos.items()}


def _num(path, lineno, rec, key, kind=float, allow_empty=False):
    text = rec[key]
    if text == "":
        if allow_empty:
            return math.nan
        raise FormatError(path, lineno, f"empty {key}")
    try:
        return kind(text)
    except ValueError:
        raise FormatError(path, lineno, f"bad {key} value {text!r}") from None


def _month(path, lineno, rec) -> MonthIndex:
    y = _num(path, lineno, rec, "year", int)
    m = _num(path, lineno, rec, "month", int)
    if not 1 <= m <= 12:
        raise FormatError(path, lineno, f"month {m} outside 1..12")
    return MonthIndex(y, m)


def _lattice(values: np.ndarray, step: float | None):
    u = np.unique(values)
    if step is None:
        step = float(np.min(np.diff(u))) if u.size > 1 else None
    return u, step


def infer_grid(lats, lons, path="<grid>") -> Grid2D:
    """Regular grid spanning the given cell centers; spacing is the smallest gap."""
    ul, dlat = _lattice(np.asarray(lats, dtype=float), None)
    uo, dlon = _lattice(np.asarray(lons, dtype=float), None)
    dlat = dlat or dlon or 1.0
    dlon = dlon or dlat
    for u, d, name in ((ul, dlat, "latitude"), (uo, dlon, "longitude")):
        steps = (u - u[0]) / d
        if np.max(np.abs(steps - np.round(steps))) > 1e-6:
            raise FormatError(path, None, f"{name} values are not on a regular grid")
    nlat = int(round((ul[-1] - ul[0]) / dlat)) + 1
    nlon = int(round((uo[-1] - uo[0]) / dlon)) + 1
    return Grid2D(float(ul[0]), float(uo[0]), dlat, dlon, nlat, nlon)


def _cell_index(grid: Grid2D, lat: float, lon: float, path, lineno) -> tuple[int, int]:
    fi = (lat - grid.lat0) / grid.dlat
    fj = (lon - grid.lon0) / grid.dlon
    i, j = int(round(fi)), int(round(fj))
    if abs(fi - i) > 1e-6 or abs(fj - j) > 1e-6 or not (0 <= i < grid.nlat and 0 <= j < grid.nlon):
        raise FormatError(path, lineno, f"({lat}, {lon}) is not a cell center of the grid")
    return i, j


def read_gridded(path, grid: Grid2D | None = None, units: str = "") -> GriddedSeries:
    recs = []
    for lineno, rec in _rows(path, GRIDDED_HEADER):
        recs.append((
            lineno,
            _month(path, lineno, rec),
            _num(path, lineno, rec, "lat"),
            _num(path, lineno, rec, "lon"),
            _num(path, lineno, rec, "value", allow_empty=True),
        ))
    if not recs:
        raise FormatError(path, None, "no data rows")
    if grid is None:
        grid = infer_grid([r[2] for r in recs], [r[3] for r in recs], path)
    first = min(r[1] for r in recs)
    last = max(r[1] for r in recs)
    axis = TimeAxis.spanning(first, last)
    vals = np.full((axis.length,) + grid.shape, np.nan)
    for lineno, m, lat, lon, v in recs:
        i, j = _cell_index(grid, lat, lon, path, lineno)
        vals[axis.index_of(m), i, j] = v
    return GriddedSeries(grid, axis, vals, units)


def write_gridded(path, g: GriddedSeries) -> Path:
    lats, lons = g.grid.lats(), g.grid.lons()

    def rows():
        for t, m in enumerate(g.axis):
            for i, lat in enumerate(lats):
                for j, lon in enumerate(lons):
                    yield (m.year, m.month, float(lat), float(lon), g.values[t, i, j])

    return write_rows(path, GRIDDED_HEADER, rows())


def read_series(path, units: str = "") -> MonthlySeries:
    recs = [(_month(path, n, r), _num(path, n, r, "value", allow_empty=True)) for n, r in _rows(path, SERIES_HEADER)]
    if not recs:
        raise FormatError(path, None, "no data rows")
    axis = TimeAxis.spanning(min(m for m, _ in recs), max(m for m, _ in recs))
    v = np.full(axis.length, np.nan)
    for m, x in recs:
        v[axis.index_of(m)] = x
    return MonthlySeries(axis, v, units)


def write_series(path, s: MonthlySeries) -> Path:
    return write_rows(path, SERIES_HEADER, ((m.year, m.month, v) for m, v in zip(s.axis, s.values)))


def read_regions(path, grid: Grid2D | None = None) -> RegionMask:
    recs = []
    has_weight = False
    for lineno, rec in _rows(path, REGION_HEADER):
        w = math.nan
        if "weight" in rec:
            has_weight = True
            w = _num(path, lineno, rec, "weight")
        recs.append((lineno, _num(path, lineno, rec, "lat"), _num(path, lineno, rec, "lon"), rec["region"], w))
    if not recs:
        raise FormatError(path, None, "no data rows")
    if grid is None:
        grid = infer_grid([r[1] for r in recs], [r[2] for r in recs], path)
    member = np.full(grid.shape, "", dtype=object)
    weights = np.zeros(grid.shape) if has_weight else None
    for lineno, lat, lon, region, w in recs:
        i, j = _cell_index(grid, lat, lon, path, lineno)
        member[i, j] = region
        if has_weight:
            weights[i, j] = w
    return RegionMask(grid, member, weights)


def write_regions(path, m: RegionMask) -> Path:
    lats, lons = m.grid.lats(), m.grid.lons()
    rows = (
        (float(lats[i]), float(lons[j]), str(m.membership[i, j]))
        for i in range(m.grid.nlat) for j in range(m.grid.nlon)
    )
    return write_rows(path, REGION_HEADER, rows)


def read_categorical(path, grid: Grid2D | None = None) -> CategoricalGrid:
    recs = [(n, _num(path, n, r, "lat"), _num(path, n, r, "lon"), _num(path, n, r, "class", int))
            for n, r in _rows(path, CLASS_HEADER)]
    if not recs:
        raise FormatError(path, None, "no data rows")
    if grid is None:
        grid = infer_grid([r[1] for r in recs], [r[2] for r in recs], path)
    classes = np.zeros(grid.shape, dtype=np.int64)
    for lineno, lat, lon, c in recs:
        classes[_cell_index(grid, lat, lon, path, lineno)] = c
    return CategoricalGrid(grid, classes)


def write_categorical(path, c: CategoricalGrid) -> Path:
    lats, lons = c.grid.lats(), c.grid.lons()
    rows = (
        (float(lats[i]), float(lons[j]), int(c.classes[i, j]))
        for i in range(c.grid.nlat) for j in range(c.grid.nlon)
    )
    return write_rows(path, CLASS_HEADER, rows)


def read_stations(path) -> list[StationRecord]:
    wells: dict[str, dict] = {}
    for lineno, rec in _rows(path, STATION_HEADER):
        wid = rec["well_id"]
        if not wid:
            raise FormatError(path, lineno, "empty well_id")
        lat = _num(path, lineno, rec, "lat")
        lon = _num(path, lineno, rec, "lon")
        sy = _num(path, lineno, rec, "specific_yield")
        if not 0 < sy < 1:
            raise FormatError(path, lineno, f"specific yield {sy} outside (0, 1)")
        m = _month(path, lineno, rec)
        level = _num(path, lineno, rec, "level_m_bgl", allow_empty=True)
        w = wells.setdefault(wid, {"lat": lat, "lon": lon, "sy": sy, "obs": {}})
        if m in w["obs"]:
            raise FormatError(path, lineno, f"duplicate observation for {wid} in {m}")
        if not math.isnan(level):
            w["obs"][m] = level
    out = []
    for wid, w in wells.items():
        obs = tuple(sorted(w["obs"].items()))
        if obs:
            out.append(StationRecord(wid, w["lat"], w["lon"], w["sy"], obs))
    return out


def write_stations(path, stations: list[StationRecord]) -> Path:
    rows = (
        (st.id, st.lat, st.lon, st.specific_yield, m.year, m.month, level)
        for st in stations for m, level in st.observations
    )
    return write_rows(path, STATION_HEADER, rows)


def read_weekly(path, grid: Grid2D | None = None):
    """Weekly gridded values; returns (grid, [(year, week), ...], values weeks x nlat x nlon)."""
    recs = []
    for lineno, rec in _rows(path, WEEKLY_HEADER):
        wk = _num(path, lineno, rec, "week", int)
        if not 1 <= wk <= 53:
            raise FormatError(path, lineno, f"week {wk} outside 1..53")
        recs.append((lineno, (_num(path, lineno, rec, "year", int), wk), _num(path, lineno, rec, "lat"),
                     _num(path, lineno, rec, "lon"), _num(path, lineno, rec, "value", allow_empty=True)))
    if not recs:
        raise FormatError(path, None, "no data rows")
    if grid is None:
        grid = infer_grid([r[2] for r in recs], [r[3] for r in recs], path)
    weeks = sorted({r[1] for r in recs})
    pos = {w: k for k, w in enumerate(weeks)}
    vals = np.full((len(weeks),) + grid.shape, np.nan)
    for lineno, wk, lat, lon, v in recs:
        i, j = _cell_index(grid, lat, lon, path, lineno)
        vals[pos[wk], i, j] = v
    return grid, weeks, vals


def write_weekly(path, grid: Grid2D, weeks, values) -> Path:
    lats, lons = grid.lats(), grid.lons()

    def rows():
        for k, (y, w) in enumerate(weeks):
            for i, lat in enumerate(lats):
                for j, lon in enumerate(lons):
                    yield (y, w, float(lat), float(lon), values[k, i, j])

    return write_rows(path, WEEKLY_HEADER, rows())


def read_irrigation(path, grid: Grid2D | None = None) -> IrrigationFraction:
    recs = []
    for lineno, rec in _rows(path, IRRIGATION_HEADER):
        recs.append((lineno, _num(path, lineno, rec, "lat"), _num(path, lineno, rec, "lon"),
                     _num(path, lineno, rec, "gw_fraction", allow_empty=True),
                     _num(path, lineno, rec, "total_equipped_fraction", allow_empty=True)))
    if not recs:
        raise FormatError(path, None, "no data rows")
    if grid is None:
        grid = infer_grid([r[1] for r in recs], [r[2] for r in recs], path)
    gw = np.full(grid.shape, np.nan)
    total = np.full(grid.shape, np.nan)
    for lineno, lat, lon, g, t in recs:
        for v, name in ((g, "gw_fraction"), (t, "total_equipped_fraction")):
            if not math.isnan(v) and not 0 <= v <= 100:
                raise FormatError(path, lineno, f"{name} {v} outside 0..100")
        i, j = _cell_index(grid, lat, lon, path, lineno)
        gw[i, j], total[i, j] = g, t
    return IrrigationFraction(grid, gw, total)


def write_irrigation(path, f: IrrigationFraction) -> Path:
    lats, lons = f.grid.lats(), f.grid.lons()
    total = f.total_equipped_fraction if f.total_equipped_fraction is not None else np.full(f.grid.shape, np.nan)
    rows = (
        (float(lats[i]), float(lons[j]), f.gw_irrigated_fraction[i, j], total[i, j])
        for i in range(f.grid.nlat) for j in range(f.grid.nlon)
    )
    return write_rows(path, IRRIGATION_HEADER, rows)


PROFILE_HEADER = ["k", "median_r", "median_p", "n_windows", "r_sd"]
EVENT_HEADER = ["series_id", "start", "end", "duration_inclusive", "duration_exclusive",
                "peak_departure_mm", "peak_month", "persistent"]
EXTENT_HEADER = ["year", "month", "percent"]
SEASONAL_HEADER = ["season_year", "stratum", "value"]


def write_profile(path, profile) -> Path:
    sd = profile.r_sd()
    rows = zip(profile.ks.tolist(), profile.median_r, profile.median_p, profile.n_windows.tolist(), sd)
    return write_rows(path, PROFILE_HEADER, rows)


def write_events(path, catalogs) -> Path:
    """Events of every catalog, sorted by start month then series id."""
    events = sorted(
        ((e.start, cat.series_id, e) for cat in catalogs for e in cat.events),
        key=lambda t: (t[0].ordinal, t[1]),
    )
    rows = (
        (sid, str(e.start), str(e.end), e.duration, e.duration_exclusive, e.peak_departure,
         str(e.peak_month), "true" if e.persistent else "false")
        for _, sid, e in events
    )
    return write_rows(path, EVENT_HEADER, rows)


def write_extent(path, s: MonthlySeries) -> Path:
    return write_rows(path, EXTENT_HEADER, ((m.year, m.month, v) for m, v in zip(s.axis, s.values)))


def write_seasonal(path, pairs: dict) -> Path:
    """`pairs` maps stratum label -> SeasonalSeries; rows run year by year, strata in dict order."""
    years = sorted({int(y) for s in pairs.values() for y in s.years})
    lookup = {name: dict(zip(s.years.tolist(), s.values.tolist())) for name, s in pairs.items()}
    rows = ((y, name, lookup[name].get(y, math.nan)) for y in years for name in pairs)
    return write_rows(path, SEASONAL_HEADER, rows)


def read_table(path) -> list[dict]:
    """Rows of any CSV as dicts of strings."""
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
