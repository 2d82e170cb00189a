"""``gwdrought`` command line tool.

Every subcommand reads a flat ``key = value`` config file, applies ``--set``
overrides and the global flags, calls the library, and writes CSV/JSON files
under the output directory. Exit codes: 0 success, 2 missing input, 3 format
error, 4 insufficient data, 5 missing upstream output.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import csvio, reference
from .anomaly import (
    accumulate,
    grace_gwsa,
    monthly_climatology,
    remove_climatology,
    standardize,
    well_field,
)
from .attribution import RegressionDesign, period_label, subperiod_compare
from .chrono_grid import (
    GriddedSeries,
    GridError,
    MonthIndex,
    MonthlySeries,
    RegionMask,
    TimeAxis,
    block_mean_resample,
    nearest_cell,
    parse_month_range,
    regional_mean,
)
from .drought import areal_extent, detect_events, drought_mask, fill_gaps_linear, most_widespread, period_change
from .optimal_period import (
    InsufficientHistoryError,
    WindowScheme,
    autocorrelation,
    corr_p_value,
    correlation_profile,
    full_series_profile,
    optimal_period,
    pearson_r,
)
from .vegetation import (
    KHARIF,
    RABI,
    IrrigationFraction,
    irrigated_vs_rainfed_ndvi,
    irrigation_masks,
    ndvi_gwsa_coupling,
    weekly_grid_to_monthly,
)

logger = logging.getLogger("gwdrought")

EXIT_OK = 0
EXIT_MISSING_INPUT = 2
EXIT_FORMAT = 3
EXIT_INSUFFICIENT = 4
EXIT_UPSTREAM = 5
EXIT_ORACLE = 1

DEFAULTS = {
    "precip": "",
    "twsa": "",
    "sws": "",
    "wells": "",
    "ndvi": "",
    "irrigation": "",
    "regions": "",
    "routes": "grace",
    "baseline": "2002-01:2016-12",
    "K": "180",
    "alpha": "0.05",
    "runs": "1000",
    "seed": "0",
    "threads": "1",
    "out": "out",
    "weighted": "true",
    "grace_window": "60",
    "well_window": "40",
    "per_cell": "false",
    "min_run": "3",
    "early": "2002-01:2004-12",
    "late": "2014-01:2016-12",
    "gw_threshold": "60",
    "rainfed_threshold": "20",
    "ndvi_gate": "",
    "year_convention": "start",
    "ndvi_k": "4,12,24",
    "periods": "2002-01:2016-12,2002-01:2012-12",
    "max_lag": "24",
}

INPUT_KEYS = ("precip", "twsa", "sws", "wells", "ndvi", "irrigation", "regions")
# keys that change speed or location only; left out of the manifest so it stays reproducible
_RUNTIME_KEYS = ("threads", "out")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise csvio.FormatError(source, lineno, f"expected key = value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise csvio.FormatError(source, lineno, f"unknown config key {key!r}")
        out[key] = value
    return out


def _months(text: str, key: str):
    try:
        return parse_month_range(text)
    except ValueError as exc:
        raise CliError(EXIT_FORMAT, f"config {key}: {exc}") from None


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path
    out: Path
    baseline: tuple
    K: int = 180
    alpha: float = 0.05
    runs: int = 1000
    seed: int = 0
    threads: int = 1
    routes: tuple = ("grace",)
    weighted: bool = True
    grace_window: int = 60
    well_window: int = 40
    per_cell: bool = False
    min_run: int = 3
    early: tuple = ()
    late: tuple = ()
    gw_threshold: float = 60.0
    rainfed_threshold: float = 20.0
    ndvi_gate: float | None = None
    year_convention: str = "start"
    ndvi_k: tuple = (4, 12, 24)
    periods: tuple = ()
    max_lag: int = 24
    inputs: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, values: dict, base_dir: Path = Path(".")) -> "RunConfig":
        raw = dict(DEFAULTS)
        raw.update(values)

        def num(key, kind):
            try:
                return kind(raw[key])
            except ValueError:
                raise CliError(EXIT_FORMAT, f"config {key}: bad value {raw[key]!r}") from None

        def flag(key):
            v = raw[key].lower()
            if v not in ("true", "false", "1", "0", "yes", "no"):
                raise CliError(EXIT_FORMAT, f"config {key}: expected true/false, got {raw[key]!r}")
            return v in ("true", "1", "yes")

        routes = tuple(r.strip() for r in raw["routes"].split(",") if r.strip())
        if not routes or any(r not in ("grace", "well") for r in routes):
            raise CliError(EXIT_FORMAT, f"config routes: expected grace and/or well, got {raw['routes']!r}")
        cfg = cls(
            raw=raw,
            base_dir=base_dir,
            out=(base_dir / raw["out"]) if not Path(raw["out"]).is_absolute() else Path(raw["out"]),
            baseline=_months(raw["baseline"], "baseline"),
            K=num("K", int),
            alpha=num("alpha", float),
            runs=num("runs", int),
            seed=num("seed", int),
            threads=num("threads", int),
            routes=routes,
            weighted=flag("weighted"),
            grace_window=num("grace_window", int),
            well_window=num("well_window", int),
            per_cell=flag("per_cell"),
            min_run=num("min_run", int),
            early=_months(raw["early"], "early"),
            late=_months(raw["late"], "late"),
            gw_threshold=num("gw_threshold", float),
            rainfed_threshold=num("rainfed_threshold", float),
            ndvi_gate=num("ndvi_gate", float) if raw["ndvi_gate"] else None,
            year_convention=raw["year_convention"],
            ndvi_k=tuple(int(k) for k in raw["ndvi_k"].split(",") if k.strip()),
            periods=tuple(_months(p.strip(), "periods") for p in raw["periods"].split(",") if p.strip()),
            max_lag=num("max_lag", int),
        )
        if cfg.K < 1:
            raise CliError(EXIT_FORMAT, "config K must be >= 1")
        if not 0 < cfg.alpha < 1:
            raise CliError(EXIT_FORMAT, "config alpha must be within (0, 1)")
        if cfg.runs < 1 or cfg.threads < 1:
            raise CliError(EXIT_FORMAT, "config runs and threads must be >= 1")
        if cfg.year_convention not in ("start", "end"):
            raise CliError(EXIT_FORMAT, "config year_convention must be start or end")
        for key in INPUT_KEYS:
            paths = [p.strip() for p in raw[key].split(",") if p.strip()]
            cfg.inputs[key] = [p if Path(p).is_absolute() else base_dir / p for p in map(Path, paths)]
        return cfg

    def input(self, key: str) -> Path:
        return self.inputs_list(key)[0]

    def inputs_list(self, key: str) -> list[Path]:
        paths = self.inputs.get(key) or []
        if not paths:
            raise CliError(EXIT_MISSING_INPUT, f"missing input: no {key!r} path configured")
        for p in paths:
            if not p.is_file():
                raise CliError(EXIT_MISSING_INPUT, f"missing input: {key} file {p} not found")
        return paths

    def params(self) -> dict:
        return {k: v for k, v in sorted(self.raw.items()) if k not in _RUNTIME_KEYS}


def load_config(path: str | None, overrides: dict) -> RunConfig:
    values = {}
    base = Path(".")
    if path:
        p = Path(path)
        if not p.is_file():
            raise CliError(EXIT_MISSING_INPUT, f"missing input: config file {p} not found")
        values = parse_config_text(p.read_text(), str(p))
        base = p.parent
    for key in overrides:
        if key not in DEFAULTS:
            raise CliError(EXIT_FORMAT, f"unknown config key {key!r}")
    values.update(overrides)
    return RunConfig.from_mapping(values, base)


# ----------------------------------------------------------------------------
# helpers


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", label)


def _clip(rng: tuple, axis: TimeAxis) -> tuple:
    first, last = max(rng[0], axis.start), min(rng[1], axis.end)
    if last < first:
        raise CliError(EXIT_INSUFFICIENT, f"range {rng[0]}..{rng[1]} does not overlap {axis.start}..{axis.end}")
    return first, last


def _deseason(s: MonthlySeries, baseline: tuple) -> MonthlySeries:
    return remove_climatology(s, monthly_climatology(s, _clip(baseline, s.axis)))


def _deseason_field(g: GriddedSeries, baseline: tuple) -> GriddedSeries:
    vals = np.full(g.values.shape, np.nan)
    for i in range(g.grid.nlat):
        for j in range(g.grid.nlon):
            vals[:, i, j] = _deseason(g.cell(i, j), baseline).values
    return g.with_values(vals)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, MonthIndex):
        return str(x)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return None if math.isnan(x) or math.isinf(x) else float(x)
    return x


def write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2) + "\n")
    return path


def _upstream(path: Path, command: str) -> Path:
    if not path.is_file():
        raise CliError(EXIT_UPSTREAM, f"missing upstream output {path}: run `gwdrought {command}` first")
    return path


def _read_json(path: Path, command: str):
    return json.loads(_upstream(path, command).read_text())


def _series(path: Path, command: str) -> MonthlySeries:
    return csvio.read_series(_upstream(path, command))


def _window_scheme(cfg: RunConfig, route: str) -> WindowScheme:
    if route == "well":
        return WindowScheme(cfg.well_window, 1, "seasonal-4-per-year")
    return WindowScheme(cfg.grace_window, 1, "monthly")


def _regions(cfg: RunConfig) -> RegionMask:
    return csvio.read_regions(cfg.input("regions"))


def _region_labels(cfg: RunConfig) -> list[str]:
    return _regions(cfg).labels()


# ----------------------------------------------------------------------------
# anomaly


def gwsa_fields(cfg: RunConfig, regions: RegionMask) -> dict:
    """De-seasonalized GWSA field per requested route."""
    out = {}
    if "grace" in cfg.routes:
        twsa = csvio.read_gridded(cfg.input("twsa"), regions.grid)
        sws = [csvio.read_gridded(p, regions.grid) for p in cfg.inputs_list("sws")]
        out["grace"] = _deseason_field(grace_gwsa(twsa, sws), cfg.baseline)
    if "well" in cfg.routes:
        stations = csvio.read_stations(cfg.input("wells"))
        out["well"] = well_field(stations, regions.grid, cfg.baseline)
    return out


def cmd_anomaly(cfg: RunConfig) -> list[Path]:
    regions = _regions(cfg)
    precip = csvio.read_gridded(cfg.input("precip"), regions.grid, "mm")
    fields = gwsa_fields(cfg, regions)
    out = cfg.out / "anomaly"
    written = []
    for label in regions.labels():
        p = regional_mean(precip, regions, label, cfg.weighted)
        written.append(csvio.write_series(out / f"precip_{_slug(label)}.csv", _deseason(p, cfg.baseline)))
    for route, g in fields.items():
        written.append(csvio.write_gridded(out / f"gwsa_{route}.csv", g))
        for label in regions.labels():
            s = regional_mean(g, regions, label, cfg.weighted)
            written.append(csvio.write_series(out / f"gwsa_{route}_{_slug(label)}.csv", s))
    return written


# ----------------------------------------------------------------------------
# optimal period


def _result_record(region: str, route: str, res, r_sd: float) -> dict:
    return {
        "region": region,
        "route": route,
        "k_star": res.k_star,
        "median_r": res.median_r,
        "median_p": res.median_p,
        "r_sd": r_sd,
        "method": res.method,
        "status": res.status,
        "best_k": res.best_k,
        "best_r": res.best_r,
        "best_p": res.best_p,
    }


def _cell_optimum(args):
    target, precip, K, w, alpha = args
    if np.count_nonzero(~np.isnan(target.values)) < w.initial_window:
        return None
    return optimal_period(correlation_profile(target, precip, K, w), alpha)


def cmd_optimal_period(cfg: RunConfig) -> list[Path]:
    labels = _region_labels(cfg)
    src = cfg.out / "anomaly"
    out = cfg.out / "optimal_period"
    written, records = [], []
    for route in cfg.routes:
        w = _window_scheme(cfg, route)
        for label in labels:
            target = _series(src / f"gwsa_{route}_{_slug(label)}.csv", "anomaly")
            precip = _series(src / f"precip_{_slug(label)}.csv", "anomaly")
            prof = correlation_profile(target, precip, cfg.K, w)
            full = full_series_profile(target, precip, cfg.K)
            written.append(csvio.write_profile(out / f"profile_{route}_{_slug(label)}.csv", prof))
            written.append(csvio.write_profile(out / f"profile_full_{route}_{_slug(label)}.csv", full))
            for p in (prof, full):
                res = optimal_period(p, cfg.alpha)
                sd = res.r_spread if res.significant else math.nan
                if p.method == "full":
                    sd = math.nan
                records.append(_result_record(label, route, res, sd))
    written.append(write_json(out / "optimal_period.json", {"K": cfg.K, "alpha": cfg.alpha, "results": records}))
    if cfg.per_cell and "grace" in cfg.routes:
        written.append(_per_cell(cfg, out))
    return written


def _per_cell(cfg: RunConfig, out: Path) -> Path:
    g = csvio.read_gridded(_upstream(cfg.out / "anomaly" / "gwsa_grace.csv", "anomaly"))
    precip = csvio.read_gridded(cfg.input("precip"), g.grid, "mm")
    w = _window_scheme(cfg, "grace")
    cells = [(i, j) for i in range(g.grid.nlat) for j in range(g.grid.nlon)]
    jobs = [
        (g.cell(i, j), _deseason(precip.cell(i, j), cfg.baseline), cfg.K, w, cfg.alpha)
        for i, j in cells
    ]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            results = list(ex.map(_cell_optimum, jobs))
    else:
        results = [_cell_optimum(j) for j in jobs]
    rows = []
    for (i, j), res in zip(cells, results):
        lat, lon = g.grid.center(i, j)
        if res is None:
            rows.append((lat, lon, "", math.nan, math.nan, math.nan, "none"))
        else:
            k = "" if res.k_star is None else str(res.k_star)
            rows.append((lat, lon, k, res.median_r, res.median_p, res.r_spread, res.status))
    return csvio.write_rows(out / "cells_grace.csv",
                            ["lat", "lon", "k_star", "median_r", "median_p", "r_sd", "status"], rows)


def optimal_k(cfg: RunConfig, route: str = "grace") -> dict:
    """Region -> k_star from the optimal-period output (median method)."""
    data = _read_json(cfg.out / "optimal_period" / "optimal_period.json", "optimal-period")
    return {
        r["region"]: r["k_star"]
        for r in data["results"]
        if r["route"] == route and r["method"] == "median"
    }


# ----------------------------------------------------------------------------
# drought


def precip_drought_series(precip_anom: MonthlySeries, k: int, target_axis: TimeAxis) -> MonthlySeries:
    """Standardized k-month precipitation anomaly over the span of the GWSA record."""
    acc = accumulate(precip_anom, k)
    first, last = _clip((target_axis.start, target_axis.end), acc.axis)
    return standardize(acc.window(first, last))


def _event_dict(e) -> dict | None:
    if e is None:
        return None
    return {
        "start": e.start, "end": e.end, "duration_inclusive": e.duration,
        "duration_exclusive": e.duration_exclusive, "peak_departure": e.peak_departure,
        "peak_month": e.peak_month, "persistent": e.persistent,
    }


def _catalog_summary(cat) -> dict:
    ext = lambda t: None if t is None else {"value": t[0], "month": t[1]}  # noqa: E731
    return {
        "series_id": cat.series_id,
        "n_events": len(cat.events),
        "latest": _event_dict(cat.latest),
        "longest": [_event_dict(e) for e in cat.longest()],
        "wettest": ext(cat.wettest),
        "driest": ext(cat.driest),
    }


def _fill_field(g: GriddedSeries) -> GriddedSeries:
    vals = g.values.copy()
    for i in range(g.grid.nlat):
        for j in range(g.grid.nlon):
            col = g.cell(i, j)
            if np.count_nonzero(~np.isnan(col.values)) >= 2:
                vals[:, i, j] = fill_gaps_linear(col).values
    return g.with_values(vals)


def cmd_drought(cfg: RunConfig) -> list[Path]:
    regions = _regions(cfg)
    labels = regions.labels()
    src = cfg.out / "anomaly"
    out = cfg.out / "drought"
    written, catalogs, changes, widespread = [], [], [], []
    for route in cfg.routes:
        for label in labels:
            s = _series(src / f"gwsa_{route}_{_slug(label)}.csv", "anomaly")
            catalogs.append(detect_events(fill_gaps_linear(s), cfg.min_run, f"gwsa_{route}_{label}"))
            try:
                pct = period_change(s, cfg.early, cfg.late)
            except ValueError as exc:
                logger.warning("period change for %s/%s: %s", route, label, exc)
                pct = math.nan
            changes.append((f"gwsa_{route}_{label}", f"{cfg.early[0]}:{cfg.early[1]}",
                            f"{cfg.late[0]}:{cfg.late[1]}", pct))
        g = csvio.read_gridded(_upstream(src / f"gwsa_{route}.csv", "anomaly"), regions.grid)
        mask = drought_mask(_fill_field(g), cfg.min_run)
        for label in labels:
            ext = areal_extent(mask, regions, label, cfg.weighted)
            written.append(csvio.write_extent(out / f"extent_{route}_{_slug(label)}.csv", ext))
            month, pct = most_widespread(ext)
            widespread.append({"route": route, "region": label, "month": month, "percent": pct})
    opt_path = cfg.out / "optimal_period" / "optimal_period.json"
    if "grace" in cfg.routes and opt_path.is_file():
        ks = optimal_k(cfg, "grace")
        for label in labels:
            k = ks.get(label)
            if k is None:
                continue
            target = _series(src / f"gwsa_grace_{_slug(label)}.csv", "anomaly")
            pa = _series(src / f"precip_{_slug(label)}.csv", "anomaly")
            z = precip_drought_series(pa, k, target.axis)
            catalogs.append(detect_events(z, cfg.min_run, f"precip_k{k}_{label}"))
    written.append(csvio.write_events(out / "events.csv", catalogs))
    written.append(csvio.write_rows(out / "period_change.csv",
                                    ["series_id", "early", "late", "percent_change"], changes))
    written.append(write_json(out / "summary.json", {
        "min_run": cfg.min_run,
        "catalogs": [_catalog_summary(c) for c in catalogs],
        "most_widespread": widespread,
    }))
    return written


# ----------------------------------------------------------------------------
# NDVI


def fine_regions(regions: RegionMask, fine) -> RegionMask:
    """Region label of each fine cell, taken from the coarse cell containing its center."""
    member = np.full(fine.shape, "", dtype=object)
    for i, lat in enumerate(fine.lats()):
        for j, lon in enumerate(fine.lons()):
            try:
                ci, cj = nearest_cell(regions.grid, float(lat), float(lon))
            except GridError:
                continue
            member[i, j] = regions.membership[ci, cj]
    return RegionMask(fine, member)


def cmd_ndvi_prep(cfg: RunConfig) -> list[Path]:
    regions = _regions(cfg)
    grid, weeks, vals = csvio.read_weekly(cfg.input("ndvi"))
    irr = csvio.read_irrigation(cfg.input("irrigation"), grid)
    monthly = weekly_grid_to_monthly(grid, weeks, vals)
    gw_mask, rainfed_mask = irrigation_masks(irr, cfg.gw_threshold, cfg.rainfed_threshold)
    out = cfg.out / "ndvi"
    written = [csvio.write_gridded(out / "ndvi_monthly.csv", monthly)]
    coarse = block_mean_resample(monthly, regions.grid, gw_mask, 1, cfg.ndvi_gate)
    written.append(csvio.write_gridded(out / "ndvi_gw_irrigated.csv", coarse))
    fr = fine_regions(regions, grid)
    present = set(fr.labels())
    for label in regions.labels():
        s = regional_mean(coarse, regions, label, cfg.weighted)
        written.append(csvio.write_series(out / f"ndvi_{_slug(label)}.csv", s))
        for season in (KHARIF, RABI):
            if label in present:
                irr_s, rf_s = irrigated_vs_rainfed_ndvi(monthly, (gw_mask, rainfed_mask), fr, label, season,
                                                        cfg.year_convention, cfg.weighted)
                pairs = {"gw_irrigated": irr_s, "non_irrigated": rf_s}
            else:
                pairs = {}
            written.append(csvio.write_seasonal(out / f"seasonal_{_slug(label)}_{season.label.lower()}.csv", pairs))
    return written


# ----------------------------------------------------------------------------
# attribution


def attribution_inputs(cfg: RunConfig, label: str):
    src = cfg.out / "anomaly"
    gwsa = _series(src / f"gwsa_grace_{_slug(label)}.csv", "anomaly")
    precip = _series(src / f"precip_{_slug(label)}.csv", "anomaly")
    ndvi = _series(cfg.out / "ndvi" / f"ndvi_{_slug(label)}.csv", "ndvi-prep")
    ndvi_anom = _deseason(ndvi, cfg.baseline) if (~np.isnan(ndvi.values)).any() else ndvi
    return gwsa, precip, ndvi_anom


def cmd_attribute(cfg: RunConfig) -> list[Path]:
    labels = _region_labels(cfg)
    ks = optimal_k(cfg, "grace")
    out = cfg.out / "attribute"
    results, coupling = [], []
    for label in labels:
        gwsa, precip, ndvi = attribution_inputs(cfg, label)
        k_star = ks.get(label)
        for nk in cfg.ndvi_k:
            row = {"region": label, "ndvi_k": nk}
            try:
                res = ndvi_gwsa_coupling(ndvi, gwsa, nk, _window_scheme(cfg, "grace"))
                acc = accumulate(ndvi, nk).window(gwsa.axis.start, gwsa.axis.end)
                ok = ~np.isnan(acc.values) & ~np.isnan(gwsa.values)
                full_r = pearson_r(acc.values[ok], gwsa.values[ok])
                row.update(median_r=res.median_r, median_p=res.median_p, r_sd=res.r_sd,
                           full_r=full_r, full_p=corr_p_value(full_r, int(ok.sum())), error=None)
            except ValueError as exc:
                row.update(median_r=math.nan, median_p=math.nan, r_sd=math.nan,
                           full_r=math.nan, full_p=math.nan, error=str(exc))
            coupling.append(row)
            if k_star is None:
                for period in cfg.periods:
                    results.append({"region": label, "ndvi_k": nk, "period": period_label(period),
                                    "error": "no significant optimal period"})
                continue
            preds = {"PPT": accumulate(precip, k_star), "NDVI": accumulate(ndvi, nk)}

            def build(period, preds=preds):
                return RegressionDesign.from_series(gwsa, preds, period)

            for o in subperiod_compare(build, list(cfg.periods), cfg.runs, cfg.alpha, cfg.seed, cfg.threads):
                rec = {"region": label, "ndvi_k": nk, "ppt_k": k_star}
                if o.result is None:
                    rec.update(period=period_label(o.period), error=o.error)
                else:
                    rec.update(o.result.to_dict(period_label(o.period)))
                results.append(rec)
    return [
        write_json(out / "attribution.json", {"results": results}),
        write_json(out / "ndvi_coupling.json", {"results": coupling}),
    ]


# ----------------------------------------------------------------------------
# report


TABLE_S1 = ["route", "region", "method", "k_star", "median_r", "median_p", "r_sd", "status"]
TABLE_S2 = ["series_id", "latest_start", "latest_end", "latest_duration_inclusive",
            "latest_duration_exclusive", "latest_persistent", "longest_events",
            "longest_duration_inclusive", "wettest_mm", "wettest_month", "driest_mm", "driest_month"]
TABLE_S3 = ["region", "ndvi_k", "median_r", "median_p", "full_r", "full_p", "r_sd"]
TABLE_S4 = ["period", "ndvi_k", "region", "predictor", "share", "ci_low", "ci_high", "model_r2"]


def _n(x):
    return math.nan if x is None else x


def _table_s2_rows(summary: dict):
    for c in summary["catalogs"]:
        latest = c["latest"] or {}
        longest = c["longest"]
        yield (
            c["series_id"], latest.get("start", ""), latest.get("end", ""),
            latest.get("duration_inclusive", ""), latest.get("duration_exclusive", ""),
            "" if not latest else ("true" if latest["persistent"] else "false"),
            ";".join(f"{e['start']}:{e['end']}" for e in longest),
            longest[0]["duration_inclusive"] if longest else "",
            _n((c["wettest"] or {}).get("value")), (c["wettest"] or {}).get("month", ""),
            _n((c["driest"] or {}).get("value")), (c["driest"] or {}).get("month", ""),
        )


def _standardized_or_nan(s: MonthlySeries) -> np.ndarray:
    try:
        return standardize(s).values
    except ValueError:
        return np.full(s.axis.length, np.nan)


def cmd_report(cfg: RunConfig) -> list[Path]:
    labels = _region_labels(cfg)
    opt = _read_json(cfg.out / "optimal_period" / "optimal_period.json", "optimal-period")
    summary = _read_json(cfg.out / "drought" / "summary.json", "drought")
    attr = _read_json(cfg.out / "attribute" / "attribution.json", "attribute")
    coup = _read_json(cfg.out / "attribute" / "ndvi_coupling.json", "attribute")
    out = cfg.out / "report"
    written = []

    written.append(csvio.write_rows(out / "table_s1.csv", TABLE_S1, (
        (r["route"], r["region"], r["method"], "" if r["k_star"] is None else str(r["k_star"]),
         _n(r["median_r"]), _n(r["median_p"]), _n(r["r_sd"]), r["status"])
        for r in opt["results"]
    )))
    written.append(csvio.write_rows(out / "table_s2.csv", TABLE_S2, _table_s2_rows(summary)))
    written.append(csvio.write_rows(out / "table_s3.csv", TABLE_S3, (
        (r["region"], r["ndvi_k"], _n(r["median_r"]), _n(r["median_p"]), _n(r["full_r"]),
         _n(r["full_p"]), _n(r["r_sd"]))
        for r in coup["results"]
    )))
    s4 = []
    for r in attr["results"]:
        for p in r.get("predictors", []):
            s4.append((r["period"], r["ndvi_k"], r["region"], p["name"], _n(p["share"]),
                       _n(p["ci_low"]), _n(p["ci_high"]), _n(r["model_r2"])))
    written.append(csvio.write_rows(out / "table_s4.csv", TABLE_S4, s4))
    written.append(csvio.write_rows(out / "reference_values.csv", ["table", "key", "quantity", "value"],
                                    reference.reference_rows()))

    ks = {(r["route"], r["region"]): r["k_star"] for r in opt["results"] if r["method"] == "median"}
    for route in cfg.routes:
        for label in labels:
            slug = _slug(label)
            for kind in ("profile", "profile_full"):
                src = _upstream(cfg.out / "optimal_period" / f"{kind}_{route}_{slug}.csv", "optimal-period")
                written.append(_copy(src, out / f"figS1_{kind}_{route}_{slug}.csv"))
            src = _upstream(cfg.out / "drought" / f"extent_{route}_{slug}.csv", "drought")
            written.append(_copy(src, out / f"fig3_extent_{route}_{slug}.csv"))
            gwsa = _series(cfg.out / "anomaly" / f"gwsa_{route}_{slug}.csv", "anomaly")
            if route == "grace":
                written.append(_fig1(cfg, label, gwsa, ks.get((route, label)), out))
                acf = autocorrelation(MonthlySeries(gwsa.axis, _standardized_or_nan(gwsa)), cfg.max_lag)
                written.append(csvio.write_rows(out / f"figS2_autocorr_{slug}.csv", ["lag", "r"],
                                                enumerate(acf.tolist())))
    for label in labels:
        for season in ("kharif", "rabi"):
            name = f"seasonal_{_slug(label)}_{season}.csv"
            src = _upstream(cfg.out / "ndvi" / name, "ndvi-prep")
            written.append(_copy(src, out / f"figS5_{name}"))
    written.append(write_manifest(cfg))
    return written


def _fig1(cfg: RunConfig, label: str, gwsa: MonthlySeries, k: int | None, out: Path) -> Path:
    g = _standardized_or_nan(gwsa)
    p = np.full(gwsa.axis.length, np.nan)
    if k is not None:
        pa = _series(cfg.out / "anomaly" / f"precip_{_slug(label)}.csv", "anomaly")
        z = precip_drought_series(pa, k, gwsa.axis)
        sl = gwsa.axis.range_slice(z.axis.start, z.axis.end)
        p[sl] = z.values
    rows = ((m.year, m.month, a, b) for m, a, b in zip(gwsa.axis, g, p))
    return csvio.write_rows(out / f"fig1_standardized_{_slug(label)}.csv",
                            ["year", "month", "gwsa_std", "precip_std"], rows)


def _copy(src: Path, dst: Path) -> Path:
    dst.parent.mkdir(parents=True, exist_ok=True)
    dst.write_bytes(src.read_bytes())
    return dst


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(cfg: RunConfig) -> Path:
    """Checksums of every file under the output directory; written after everything else."""
    path = cfg.out / "report" / "manifest.json"
    files = []
    for p in sorted(cfg.out.rglob("*")):
        if not p.is_file() or p == path:
            continue
        rel = p.relative_to(cfg.out).as_posix()
        files.append({"path": rel, "command": rel.split("/")[0].replace("_", "-"),
                      "bytes": p.stat().st_size, "sha256": _sha256(p)})
    return write_json(path, {"params": cfg.params(), "files": files})


# ----------------------------------------------------------------------------
# synth and oracle


def cmd_synth(cfg: RunConfig) -> list[Path]:
    from .synth import build_scenario

    sc = build_scenario(cfg.seed)
    out = cfg.out
    written = [
        csvio.write_gridded(out / "precip.csv", sc.precip),
        csvio.write_gridded(out / "twsa.csv", sc.twsa),
    ]
    for i, s in enumerate(sc.sws, start=1):
        written.append(csvio.write_gridded(out / f"sws_{i}.csv", s))
    written += [
        csvio.write_stations(out / "wells.csv", sc.stations),
        csvio.write_weekly(out / "ndvi_weekly.csv", sc.fine_grid, sc.ndvi_weeks, sc.ndvi_weekly),
        csvio.write_irrigation(out / "irrigation.csv", IrrigationFraction(sc.fine_grid, sc.gw_fraction, sc.total_equipped)),
        csvio.write_regions(out / "regions.csv", sc.regions),
        csvio.write_categorical(out / "lulc.csv", sc.lulc),
        csvio.write_gridded(out / "gwsa_truth.csv", sc.gwsa),
        write_json(out / "truth.json", dict(sc.truth, label=sc.label)),
    ]
    sws = ",".join(f"sws_{i}.csv" for i in range(1, len(sc.sws) + 1))
    config = (
        f"# synthetic scenario {sc.label}, seed {cfg.seed}\n"
        "precip = precip.csv\n"
        "twsa = twsa.csv\n"
        f"sws = {sws}\n"
        "wells = wells.csv\n"
        "ndvi = ndvi_weekly.csv\n"
        "irrigation = irrigation.csv\n"
        "regions = regions.csv\n"
        "routes = grace,well\n"
        f"seed = {cfg.seed}\n"
        "out = results\n"
    )
    cfg_path = out / "config.txt"
    cfg_path.write_text(config)
    written.append(cfg_path)
    return written


def cmd_oracle(cfg: RunConfig) -> list[Path]:
    from .oracles import oracle_suite

    report = oracle_suite(cfg.seed)
    path = write_json(cfg.out / "oracle" / "oracle_report.json", report.to_dict())
    for e in report.entries:
        print(f"{'PASS' if e.passed else 'FAIL'} {e.op}: max dev {e.max_dev:.3g} (tol {e.tol:g}, seed {e.seed}, {e.cases} cases)")
    if not report.passed:
        names = ", ".join(f"{e.op} (seed {e.seed})" for e in report.failures())
        raise CliError(EXIT_ORACLE, f"oracle failures: {names}")
    return [path]


COMMANDS = {
    "anomaly": cmd_anomaly,
    "optimal-period": cmd_optimal_period,
    "drought": cmd_drought,
    "attribute": cmd_attribute,
    "ndvi-prep": cmd_ndvi_prep,
    "synth": cmd_synth,
    "oracle": cmd_oracle,
    "report": cmd_report,
}


def _key_value(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument("--threads", type=int, help="worker threads; affects speed only")
    common.add_argument("--set", dest="overrides", action="append", type=_key_value, default=[],
                        metavar="KEY=VALUE", help="override one config key")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="gwdrought", description="Groundwater drought analysis toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "anomaly": "GWSA (GRACE and/or well route) and precipitation anomalies",
        "optimal-period": "precipitation accumulation profiles and optimal periods",
        "drought": "drought events, areal extent and period change",
        "attribute": "relative importance of precipitation and NDVI on GWSA",
        "ndvi-prep": "monthly NDVI, irrigation strata and seasonal means",
        "synth": "write the bundled synthetic scenario and a ready config",
        "oracle": "check production kernels against brute-force oracles",
        "report": "plot-ready tables and figures plus a manifest",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = dict(args.overrides)
    for key in ("seed", "threads"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = str(value)
    if args.out is not None:
        # a flag path is relative to the working directory, a config path to the config file
        overrides["out"] = str(Path(args.out).resolve())
    try:
        cfg = load_config(args.config, overrides)
        written = COMMANDS[args.command](cfg)
    except CliError as exc:
        print(f"gwdrought {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except csvio.FormatError as exc:
        print(f"gwdrought {args.command}: format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except GridError as exc:
        print(f"gwdrought {args.command}: format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except InsufficientHistoryError as exc:
        print(f"gwdrought {args.command}: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except (ValueError, KeyError) as exc:
        print(f"gwdrought {args.command}: insufficient data: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    for p in written:
        logger.info("wrote %s", p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
