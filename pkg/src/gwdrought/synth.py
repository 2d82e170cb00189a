"""Seeded synthetic series and scenarios for exercising the pipeline without real data.

Random numbers come from the Philox-4x64 counter-based generator keyed by
``(seed, stream)``. A uniform is ``((raw >> 11) + 0.5) / 2**53`` for each raw
64-bit word, and normal deviate i is the Box-Muller cosine branch of uniforms
2i and 2i+1, so every value depends only on (seed, stream, index).
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .anomaly import StationRecord, accumulate, monthly_climatology, remove_climatology, standardize
from .chrono_grid import (
    CategoricalGrid,
    Grid2D,
    GriddedSeries,
    MonthIndex,
    MonthlySeries,
    RegionMask,
    TimeAxis,
)

_TWO_POW_M53 = 2.0 ** -53


def counter_uniform(seed: int, n: int, stream: int = 0) -> np.ndarray:
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    raw = np.random.Philox(key=key).random_raw(n)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_POW_M53


def counter_normal(seed: int, n: int, stream: int = 0) -> np.ndarray:
    u = counter_uniform(seed, 2 * n, stream)
    return np.sqrt(-2.0 * np.log(u[0::2])) * np.cos(2.0 * np.pi * u[1::2])


def gen_ar1(n: int, phi: float, sd: float, seed: int, start: MonthIndex = MonthIndex(2000, 1),
            x0: float = 0.0, stream: int = 0) -> MonthlySeries:
    """AR(1) series x_t = phi * x_{t-1} + e_t with e_t ~ N(0, sd); x_{-1} = x0."""
    if abs(phi) >= 1:
        raise ValueError("|phi| must be < 1")
    e = sd * counter_normal(seed, n, stream)
    x = np.empty(n)
    prev = x0
    for t in range(n):
        prev = phi * prev + e[t]
        x[t] = prev
    return MonthlySeries(TimeAxis(start, n), x)


@dataclass(frozen=True)
class BucketModelConfig:
    recharge_coeff: float = 0.3
    pumping: object = 0.0  # mm/month, scalar or one value per month
    decay: float = 0.05
    init_storage: float = 0.0
    noise_sd: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.recharge_coeff <= 1:
            raise ValueError("recharge_coeff must be within [0, 1]")
        if not 0 <= self.decay < 1:
            raise ValueError("decay must be within [0, 1)")
        if np.any(np.asarray(self.pumping, dtype=float) < 0):
            raise ValueError("pumping must be non-negative")


def pumping_ramp(n: int, start: int, rate: float) -> np.ndarray:
    """Zero before month `start`, then growing by `rate` mm/month each month."""
    t = np.arange(n)
    return np.where(t >= start, rate * (t - start + 1), 0.0)


def gen_bucket(cfg: BucketModelConfig, precip: MonthlySeries) -> MonthlySeries:
    """Single linear reservoir; returns storage minus its monthly climatology.

    Storage at the end of month t is
    (1 - decay) * S_{t-1} + recharge_coeff * P_t - pump_t + noise_t.
    """
    n = precip.axis.length
    pump = np.broadcast_to(np.asarray(cfg.pumping, dtype=float), (n,))
    noise = cfg.noise_sd * counter_normal(cfg.seed, n, stream=7)
    p = np.nan_to_num(precip.values)
    s = np.empty(n)
    prev = cfg.init_storage
    for t in range(n):
        prev = (1.0 - cfg.decay) * prev + cfg.recharge_coeff * p[t] - pump[t] + noise[t]
        s[t] = prev
    storage = MonthlySeries(precip.axis, s, "mm")
    return remove_climatology(storage, monthly_climatology(storage))


def gen_lagged_target(precip: MonthlySeries, k_true: int, noise_sd: float = 0.0, seed: int = 0) -> MonthlySeries:
    """Standardized k_true-month accumulation of `precip` plus N(0, noise_sd) noise."""
    if precip.axis.length <= k_true:
        raise ValueError("precipitation series must be longer than k_true")
    z = standardize(accumulate(precip, k_true))
    noise = noise_sd * counter_normal(seed, precip.axis.length, stream=11)
    return z.with_values(z.values + noise)


def gen_precip(axis: TimeAxis, seed: int, stream: int = 0, wet: float = 200.0, dry: float = 15.0,
               cv: float = 0.4) -> MonthlySeries:
    """Monsoonal monthly precipitation (mm): wet June-September, multiplicative lognormal noise."""
    cal = axis.calendar_months()
    clim = np.where((cal >= 6) & (cal <= 9), wet, dry)
    z = counter_normal(seed, axis.length, stream)
    return MonthlySeries(axis, clim * np.exp(cv * z - cv * cv / 2), "mm")


# ----------------------------------------------------------------------------
# bundled scenario

REGIONS = ("SI", "NCI", "NWI")  # one grid row each, south to north
K_TRUE = {"SI": 18, "NCI": 105, "NWI": 153}

PRECIP_START = MonthIndex(1980, 1)
GRACE_START = MonthIndex(2002, 1)
WELL_START = MonthIndex(1996, 1)
END = MonthIndex(2016, 12)
NDVI_START = MonthIndex(1999, 1)
PUMPING_START = MonthIndex(2012, 1)
WELL_MONTHS = (1, 5, 8, 11)


@dataclass
class SyntheticScenario:
    label: str
    grid: Grid2D
    fine_grid: Grid2D
    regions: RegionMask
    precip: GriddedSeries
    gwsa: GriddedSeries
    twsa: GriddedSeries
    sws: list
    ndvi_weeks: list  # (year, week) per slice of ndvi_weekly
    ndvi_weekly: np.ndarray  # weeks x fine nlat x fine nlon
    ndvi: MonthlySeries  # regional NDVI of the groundwater-irrigated NWI cells
    gw_fraction: np.ndarray
    total_equipped: np.ndarray
    lulc: CategoricalGrid
    stations: list
    truth: dict = field(default_factory=dict)


def _cell_noise(seed: int, n: int, stream: int, sd: float) -> np.ndarray:
    return sd * counter_normal(seed, n, stream)


def build_scenario(seed: int = 42, label: str = "india3") -> SyntheticScenario:
    """Three-region 3x4 one-degree scenario.

    Storage in each region follows precipitation accumulated over that region's
    K_TRUE months; NWI additionally loses storage to pumping that ramps up from
    2012 while groundwater-irrigated NDVI there greens in step with it.
    """
    grid = Grid2D(10.5, 72.5, 1.0, 1.0, 3, 4)
    fine = Grid2D(10.25, 72.25, 0.5, 0.5, 6, 8)
    membership = np.array([[r] * grid.nlon for r in REGIONS], dtype=object)
    regions = RegionMask(grid, membership)

    p_axis = TimeAxis.spanning(PRECIP_START, END)
    g_axis = TimeAxis.spanning(GRACE_START, END)
    n_p = p_axis.length

    precip = np.empty((n_p,) + grid.shape)
    for r, name in enumerate(REGIONS):
        shared = counter_normal(seed, n_p, stream=100 + r)
        for j in range(grid.nlon):
            own = counter_normal(seed, n_p, stream=200 + r * 10 + j)
            z = 0.9 * shared + np.sqrt(1 - 0.81) * own
            cal = p_axis.calendar_months()
            clim = np.where((cal >= 6) & (cal <= 9), 180.0 + 40 * r, 12.0 + 3 * r)
            precip[:, r, j] = clim * np.exp(0.4 * z - 0.08)
    precip_g = GriddedSeries(grid, p_axis, precip, "mm")

    pump_idx = g_axis.index_of(PUMPING_START)
    depletion = pumping_ramp(g_axis.length, pump_idx, 3.0)

    # storage signal on the full precipitation axis, needed for wells back to 1996
    storage_full = np.full((n_p,) + grid.shape, np.nan)
    for r, name in enumerate(REGIONS):
        for j in range(grid.nlon):
            cell = precip_g.cell(r, j)
            anom = remove_climatology(cell, monthly_climatology(cell))
            tgt = gen_lagged_target(anom, K_TRUE[name], noise_sd=0.05, seed=seed * 1000 + r * 10 + j)
            storage_full[:, r, j] = 60.0 * tgt.values
    sl = p_axis.range_slice(GRACE_START, END)
    gwsa = storage_full[sl].copy()
    nwi = REGIONS.index("NWI")
    gwsa[:, nwi, :] -= depletion[:, None]
    storage_full[sl, nwi, :] -= depletion[:, None]
    gwsa_g = GriddedSeries(grid, g_axis, gwsa, "mm")

    sws = []
    cal_g = g_axis.calendar_months()
    for m, amp in enumerate((50.0, 65.0)):
        season = amp * np.sin(2 * np.pi * (cal_g - 4) / 12.0)
        vals = np.empty((g_axis.length,) + grid.shape)
        for i in range(grid.nlat):
            for j in range(grid.nlon):
                vals[:, i, j] = season + _cell_noise(seed, g_axis.length, 300 + m * 100 + i * 10 + j, 8.0)
        sws.append(GriddedSeries(grid, g_axis, vals, "mm"))
    sws_mean = np.mean([s.values for s in sws], axis=0)
    twsa_g = GriddedSeries(grid, g_axis, gwsa + sws_mean, "mm")

    # irrigation: within each 2x2 block, fine cell (0,0) and (1,1) gw-irrigated, (0,1) rainfed, (1,0) mixed
    gw_frac = np.empty(fine.shape)
    total = np.empty(fine.shape)
    for fi in range(fine.nlat):
        for fj in range(fine.nlon):
            kind = (fi % 2, fj % 2)
            if kind in ((0, 0), (1, 1)):
                gw_frac[fi, fj], total[fi, fj] = 80.0, 95.0
            elif kind == (0, 1):
                gw_frac[fi, fj], total[fi, fj] = 5.0, 10.0
            else:
                gw_frac[fi, fj], total[fi, fj] = 40.0, 60.0
    lulc = CategoricalGrid(fine, np.where(total >= 10.0, 2, 1))

    # NDVI, weekly on the fine grid
    last_day = dt.date(END.year, END.month, 28)
    d = dt.date.fromisocalendar(NDVI_START.year, 1, 4)
    mids = []
    while d <= last_day:
        mids.append(d)
        d += dt.timedelta(weeks=1)
    weeks = [tuple(m.isocalendar()[:2]) for m in mids]
    wk_month = np.array([d.month for d in mids])
    wk_ord = np.array([d.year * 12 + d.month - 1 for d in mids])
    pump_start_ord = PUMPING_START.ordinal
    greening = np.clip((wk_ord - pump_start_ord + 1) / 60.0, 0.0, None) * 0.25
    kharif = ((wk_month >= 6) & (wk_month <= 9)).astype(float)
    rabi = ((wk_month >= 11) | (wk_month <= 2)).astype(float)
    ndvi_w = np.empty((len(weeks),) + fine.shape)
    for fi in range(fine.nlat):
        region = REGIONS[fi // 2]
        for fj in range(fine.nlon):
            irrigated = gw_frac[fi, fj] > 60
            base = 0.25 + 0.2 * kharif + (0.2 if irrigated else 0.03) * rabi
            if irrigated and region == "NWI":
                base = base + greening
            noise = _cell_noise(seed, len(weeks), 1000 + fi * 20 + fj, 0.02)
            ndvi_w[:, fi, fj] = np.clip(base + noise, -1.0, 1.0)

    # wells: one per coarse cell in columns 0 and 2, observed four times a year
    stations = []
    w_first = p_axis.index_of(WELL_START)
    for r, name in enumerate(REGIONS):
        for j in (0, 2):
            sy = (0.12, 0.08, 0.15)[r]
            lat, lon = grid.center(r, j)
            lat, lon = lat + 0.1, lon - 0.2
            noise = _cell_noise(seed, n_p, 2000 + r * 10 + j, 0.02)
            obs = []
            for t in range(w_first, n_p):
                m = p_axis[t]
                if m.month not in WELL_MONTHS:
                    continue
                season_depth = 1.5 * np.cos(2 * np.pi * (m.month - 5) / 12.0)
                level = 12.0 + season_depth - storage_full[t, r, j] / (1000.0 * sy) + noise[t]
                obs.append((m, float(level)))
            stations.append(StationRecord(f"W{name}{j}", lat, lon, sy, tuple(obs)))

    ndvi_monthly = _irrigated_ndvi_series(weeks, ndvi_w, gw_frac, rows=(4, 5))
    truth = {
        "k_true": dict(K_TRUE),
        "pumping_start": str(PUMPING_START),
        "pumping_region": "NWI",
        "expect_persistent_terminal_event": ["NWI"],
        "grace_axis": [str(GRACE_START), str(END)],
        "precip_axis": [str(PRECIP_START), str(END)],
        "well_axis": [str(WELL_START), str(END)],
        "seed": seed,
    }
    return SyntheticScenario(
        label, grid, fine, regions, precip_g, gwsa_g, twsa_g, sws, weeks, ndvi_w,
        ndvi_monthly, gw_frac, total, lulc, stations, truth,
    )


def _irrigated_ndvi_series(weeks, ndvi_w, gw_frac, rows) -> MonthlySeries:
    from .vegetation import weekly_grid_to_monthly

    g = Grid2D(0.0, 0.0, 1.0, 1.0, ndvi_w.shape[1], ndvi_w.shape[2])
    monthly = weekly_grid_to_monthly(g, weeks, ndvi_w)
    sel = np.zeros(gw_frac.shape, dtype=bool)
    sel[list(rows), :] = True
    sel &= gw_frac > 60
    return MonthlySeries(monthly.axis, monthly.values[:, sel].mean(axis=1), "NDVI")
