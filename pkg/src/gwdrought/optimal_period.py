"""Expanding-window median correlation and the optimal precipitation accumulation period.

For every accumulation length k the accumulated precipitation is correlated
with the storage anomaly over a growing sequence of prefix windows; the median
r (and median p) across windows characterizes k, and the optimal period is
the k with the largest significant positive median r.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .anomaly import accumulate
from .chrono_grid import MonthIndex, MonthlySeries

logger = logging.getLogger(__name__)

# relative variance below which a series counts as constant
_DEGENERATE_RTOL = 1e-20
_CUMSUM_RTOL = 1e-12


class DegenerateCorrelationError(ValueError):
    pass


class InsufficientHistoryError(ValueError):
    """Precipitation does not reach far enough back for the longest accumulation."""

    def __init__(self, required_start: MonthIndex, have_start: MonthIndex):
        self.required_start = required_start
        self.have_start = have_start
        super().__init__(
            f"insufficient history: series must start by {required_start} (starts {have_start})"
        )


@dataclass(frozen=True)
class WindowScheme:
    initial_window: int = 60
    step: int = 1
    mode: str = "monthly"  # or "seasonal-4-per-year"

    def __post_init__(self):
        if self.initial_window < 3:
            raise ValueError("initial window must hold at least 3 samples")
        if self.step < 1:
            raise ValueError("window step must be >= 1")
        if self.mode not in ("monthly", "seasonal-4-per-year"):
            raise ValueError(f"unknown window mode {self.mode!r}")

    @classmethod
    def grace(cls) -> "WindowScheme":
        return cls(60, 1, "monthly")

    @classmethod
    def well(cls) -> "WindowScheme":
        return cls(40, 1, "seasonal-4-per-year")

    def window_ends(self, n: int) -> np.ndarray:
        if n < self.initial_window:
            raise ValueError(f"{n} samples is fewer than the initial window of {self.initial_window}")
        ends = list(range(self.initial_window, n + 1, self.step))
        if ends[-1] != n:
            ends.append(n)
        return np.asarray(ends)


@dataclass(frozen=True, eq=False)
class ExpandingResult:
    median_r: float
    median_p: float
    window_r: np.ndarray
    window_p: np.ndarray

    @property
    def n_windows(self) -> int:
        return int(self.window_r.size)

    @property
    def r_sd(self) -> float:
        if self.window_r.size < 2:
            return float("nan")
        return float(np.std(self.window_r, ddof=1))


@dataclass(frozen=True, eq=False)
class CorrelationProfile:
    ks: np.ndarray
    median_r: np.ndarray
    median_p: np.ndarray
    window_r: list = field(repr=False)
    method: str = "median"

    @property
    def K(self) -> int:
        return int(self.ks[-1])

    @property
    def n_windows(self) -> np.ndarray:
        return np.array([w.size for w in self.window_r])

    def r_sd(self) -> np.ndarray:
        return np.array([np.std(w, ddof=1) if w.size > 1 else np.nan for w in self.window_r])

    def entry(self, k: int) -> int:
        return int(np.searchsorted(self.ks, k))


@dataclass(frozen=True)
class OptimalPeriodResult:
    k_star: int | None
    median_r: float
    median_p: float
    r_spread: float
    method: str = "median"
    # unconstrained argmax, kept as a diagnostic when nothing is significant
    best_k: int | None = None
    best_r: float = float("nan")
    best_p: float = float("nan")

    @property
    def significant(self) -> bool:
        return self.k_star is not None

    @property
    def status(self) -> str:
        return "ok" if self.significant else "none"


def _pairs(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"series lengths differ: {x.shape} vs {y.shape}")
    ok = ~(np.isnan(x) | np.isnan(y))
    return x[ok], y[ok]


def _as_array(s) -> np.ndarray:
    return s.values if isinstance(s, MonthlySeries) else np.asarray(s, dtype=float)


def pearson_r(x, y) -> float:
    """Sample Pearson correlation over pairwise-complete samples."""
    x, y = _pairs(_as_array(x), _as_array(y))
    n = x.size
    if n < 3:
        raise DegenerateCorrelationError(f"degenerate correlation: only {n} paired samples")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = xc @ xc
    syy = yc @ yc
    if sxx <= _DEGENERATE_RTOL * n * np.max(np.abs(x)) ** 2 or syy <= _DEGENERATE_RTOL * n * np.max(np.abs(y)) ** 2:
        raise DegenerateCorrelationError("degenerate correlation: zero variance")
    r = (xc @ yc) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def corr_p_value(r, n):
    """Two-sided p-value of r under the Student-t null with n-2 degrees of freedom.

    Works elementwise on arrays; |r| = 1 gives p = 0.
    """
    r = np.asarray(r, dtype=float)
    n = np.asarray(n, dtype=float)
    if np.any(n < 3):
        raise ValueError("p-value needs n >= 3")
    df = n - 2
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.abs(r) * np.sqrt(df / (1.0 - r * r))
    p = np.where(np.abs(r) >= 1.0, 0.0, 2.0 * stats.t.sf(t, df))
    p = np.where(np.isnan(r), np.nan, p)
    return float(p) if p.ndim == 0 else p


def _expanding_corr(X: np.ndarray, y: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """Prefix-window correlations of every row of X with y.

    Returns an array (rows, windows); NaN marks a window with zero variance.
    """
    X = np.atleast_2d(X)
    xc = X - X.mean(axis=1, keepdims=True)
    yc = y - y.mean()
    idx = ends - 1
    sx = np.cumsum(xc, axis=1)[:, idx]
    sy = np.cumsum(yc)[idx]
    sxx = np.cumsum(xc * xc, axis=1)[:, idx]
    syy = np.cumsum(yc * yc)[idx]
    sxy = np.cumsum(xc * yc, axis=1)[:, idx]
    m = ends.astype(float)
    vx = sxx - sx * sx / m
    vy = syy - sy * sy / m
    cov = sxy - sx * sy / m
    # a constant window leaves only rounding noise in vx relative to sxx
    bad = (vx <= _CUMSUM_RTOL * sxx) | (vy <= _CUMSUM_RTOL * syy)[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        r = cov / np.sqrt(vx * vy)
    r = np.clip(r, -1.0, 1.0)
    r[bad] = np.nan
    return r


def _summarize(r_row: np.ndarray, ends: np.ndarray) -> ExpandingResult:
    ok = ~np.isnan(r_row)
    if not ok.any():
        raise DegenerateCorrelationError("degenerate correlation: no computable window")
    r = r_row[ok]
    p = corr_p_value(r, ends[ok])
    return ExpandingResult(float(np.median(r)), float(np.median(p)), r, np.asarray(p))


def expanding_median_r(x, y, w: WindowScheme = WindowScheme()) -> ExpandingResult:
    """Median correlation over growing prefix windows of the paired samples.

    Missing months are dropped first, so windows count paired samples (this is
    what makes four-observations-per-year well records work with the same code).
    The first window holds ``w.initial_window`` samples and each later window
    adds ``w.step`` more, ending with the full record.
    """
    x, y = _pairs(_as_array(x), _as_array(y))
    ends = w.window_ends(x.size)
    return _summarize(_expanding_corr(x[None, :], y, ends)[0], ends)


def required_precip_start(target: MonthlySeries, K: int) -> MonthIndex:
    return target.axis.start.shift(-(K - 1))


def _accumulation_matrix(target: MonthlySeries, precip: MonthlySeries, ks) -> np.ndarray:
    need = required_precip_start(target, max(ks))
    if precip.axis.start > need:
        raise InsufficientHistoryError(need, precip.axis.start)
    if precip.axis.end < target.axis.end:
        raise ValueError(f"precipitation ends {precip.axis.end}, before target end {target.axis.end}")
    sl = precip.axis.range_slice(target.axis.start, target.axis.end)
    return np.stack([accumulate(precip, k).values[sl] for k in ks])


def _profile_rows(A: np.ndarray, y: np.ndarray, w: WindowScheme) -> list[ExpandingResult]:
    valid = ~np.isnan(A) & ~np.isnan(y)[None, :]
    if (valid == valid[0]).all():
        cols = valid[0]
        Xv, yv = A[:, cols], y[cols]
        ends = w.window_ends(yv.size)
        R = _expanding_corr(Xv, yv, ends)
        return [_summarize(row, ends) for row in R]
    # rows disagree on which months are missing: fall back to one row at a time
    return [expanding_median_r(row, y, w) for row in A]


def correlation_profile(target: MonthlySeries, precip: MonthlySeries, K: int = 180,
                        w: WindowScheme = WindowScheme()) -> CorrelationProfile:
    """Expanding-window median correlation of `target` with k-month precipitation, k = 1..K."""
    if K < 1:
        raise ValueError("K must be >= 1")
    ks = np.arange(1, K + 1)
    A = _accumulation_matrix(target, precip, ks)
    rows = _profile_rows(A, target.values, w)
    return CorrelationProfile(
        ks,
        np.array([r.median_r for r in rows]),
        np.array([r.median_p for r in rows]),
        [r.window_r for r in rows],
    )


def full_series_profile(target: MonthlySeries, precip: MonthlySeries, K: int = 180) -> CorrelationProfile:
    """One whole-record correlation per accumulation length."""
    if K < 1:
        raise ValueError("K must be >= 1")
    ks = np.arange(1, K + 1)
    A = _accumulation_matrix(target, precip, ks)
    rs, ps = [], []
    for row in A:
        x, y = _pairs(row, target.values)
        r = pearson_r(x, y)
        rs.append(r)
        ps.append(corr_p_value(r, x.size))
    rs = np.array(rs)
    return CorrelationProfile(ks, rs, np.array(ps), [np.array([r]) for r in rs], method="full")


def optimal_period(profile: CorrelationProfile, alpha: float = 0.05) -> OptimalPeriodResult:
    """Largest positive, significant median correlation; ties go to the smallest k."""
    if profile.ks.size == 0:
        raise ValueError("empty profile")
    r = profile.median_r
    p = profile.median_p
    sds = profile.r_sd()
    finite = ~np.isnan(r)
    best = int(np.nanargmax(np.where(finite, r, -np.inf))) if finite.any() else None
    ok = finite & (r > 0) & (p < alpha)
    if not ok.any():
        logger.info("no significant optimal period (alpha=%g)", alpha)
        return OptimalPeriodResult(
            None, float("nan"), float("nan"), float("nan"), profile.method,
            best_k=None if best is None else int(profile.ks[best]),
            best_r=float("nan") if best is None else float(r[best]),
            best_p=float("nan") if best is None else float(p[best]),
        )
    i = int(np.argmax(np.where(ok, r, -np.inf)))
    return OptimalPeriodResult(
        int(profile.ks[i]), float(r[i]), float(p[i]), float(sds[i]), profile.method,
        best_k=int(profile.ks[best]), best_r=float(r[best]), best_p=float(p[best]),
    )


def full_series_r(target: MonthlySeries, precip: MonthlySeries, K: int = 180,
                  alpha: float = 0.05) -> OptimalPeriodResult:
    return optimal_period(full_series_profile(target, precip, K), alpha)


def autocorrelation(s: MonthlySeries, max_lag: int = 24) -> np.ndarray:
    """Lag-l correlation of the series with itself for l = 0..max_lag; NaN where undefined."""
    x = _as_array(s)
    n = x.size
    out = np.full(max_lag + 1, np.nan)
    if np.count_nonzero(~np.isnan(x)) >= 2:
        out[0] = 1.0
    for lag in range(1, max_lag + 1):
        if lag >= n:
            break
        a, b = _pairs(x[:-lag], x[lag:])
        if a.size < 3:
            continue
        try:
            out[lag] = pearson_r(a, b)
        except DegenerateCorrelationError:
            pass
    return out

