"""Relative importance of predictors on GWSA: LMG R^2 shares with bootstrap intervals.

The LMG share of a predictor is its incremental R^2 averaged over every order
in which the predictors can enter the model; the shares add up to the R^2 of
the full model.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np

from .chrono_grid import MonthIndex, MonthlySeries, TimeAxis, align

logger = logging.getLogger(__name__)

MAX_RETRIES = 100


class CollinearPredictorsError(ValueError):
    pass


class DegenerateDesignError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RegressionDesign:
    response: np.ndarray
    predictors: dict  # name -> np.ndarray, insertion order is the predictor order
    months: tuple = ()

    def __post_init__(self):
        y = np.asarray(self.response, dtype=float)
        preds = {k: np.asarray(v, dtype=float) for k, v in self.predictors.items()}
        for name, x in preds.items():
            if x.shape != y.shape:
                raise ValueError(f"predictor {name!r} length {x.shape} != response {y.shape}")
        cols = [y] + list(preds.values())
        if any(np.isnan(c).any() for c in cols):
            raise ValueError("design contains missing values; use RegressionDesign.from_series")
        if y.size < len(preds) + 2:
            raise DegenerateDesignError(
                f"{y.size} samples is too few for {len(preds)} predictors"
            )
        object.__setattr__(self, "response", y)
        object.__setattr__(self, "predictors", preds)

    @property
    def n(self) -> int:
        return int(self.response.size)

    @property
    def names(self) -> list[str]:
        return list(self.predictors)

    def matrix(self) -> np.ndarray:
        return np.column_stack([self.predictors[k] for k in self.names]) if self.predictors else np.empty((self.n, 0))

    def take(self, rows: np.ndarray) -> "RegressionDesign":
        return RegressionDesign(self.response[rows], {k: v[rows] for k, v in self.predictors.items()})

    @classmethod
    def from_series(cls, response: MonthlySeries, predictors: dict, period=None) -> "RegressionDesign":
        """Align on common months (optionally within `period`) and keep complete rows."""
        names = list(predictors)
        axis, arrays = align(response, *(predictors[k] for k in names))
        if period is not None:
            first, last = period
            first, last = max(first, axis.start), min(last, axis.end)
            if last < first:
                raise DegenerateDesignError(f"period {period[0]}..{period[1]} has no data")
            sl = axis.range_slice(first, last)
            axis = TimeAxis.spanning(first, last)
            arrays = [a[sl] for a in arrays]
        ok = np.ones(axis.length, dtype=bool)
        for a in arrays:
            ok &= ~np.isnan(a)
        months = tuple(m for m, keep in zip(axis, ok) if keep)
        return cls(arrays[0][ok], {k: a[ok] for k, a in zip(names, arrays[1:])}, months)


@dataclass(frozen=True)
class PredictorImportance:
    name: str
    share: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class RelativeImportance:
    predictors: tuple
    model_r2: float
    runs: int
    alpha: float
    seed: int

    def share(self, name: str) -> PredictorImportance:
        for p in self.predictors:
            if p.name == name:
                return p
        raise KeyError(name)

    def to_dict(self, period: str | None = None) -> dict:
        return {
            "period": period,
            "predictors": [
                {"name": p.name, "share": p.share, "ci_low": p.ci_low, "ci_high": p.ci_high}
                for p in self.predictors
            ],
            "model_r2": self.model_r2,
            "runs": self.runs,
            "alpha": self.alpha,
            "seed": self.seed,
        }


def _r2_matrix(y: np.ndarray, X: np.ndarray) -> float:
    yc = y - y.mean()
    sst = yc @ yc
    if not sst > 1e-20 * y.size * max(np.max(np.abs(y)) ** 2, 1e-300):
        raise DegenerateDesignError("response has zero variance")
    if X.shape[1] == 0:
        return 0.0
    Xc = X - X.mean(axis=0)
    q, r = np.linalg.qr(Xc)
    d = np.abs(np.diag(r))
    scale = np.linalg.norm(Xc, axis=0)
    if np.any(d <= 1e-10 * np.maximum(scale, 1e-300)):
        raise CollinearPredictorsError("collinear predictors")
    proj = q.T @ yc
    return float(min(1.0, max(0.0, (proj @ proj) / sst)))


def ols_r2(design: RegressionDesign, subset=None) -> float:
    """R^2 of a least-squares fit with intercept on the named predictor subset."""
    names = design.names if subset is None else list(subset)
    for k in names:
        if k not in design.predictors:
            raise KeyError(f"unknown predictor {k!r}")
    cols = [design.predictors[k] for k in names]
    X = np.column_stack(cols) if cols else np.empty((design.n, 0))
    return _r2_matrix(design.response, X)


def _lmg_from_matrix(y: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, float]:
    p = X.shape[1]
    r2 = {(): 0.0}
    for size in range(1, p + 1):
        for sub in combinations(range(p), size):
            r2[sub] = _r2_matrix(y, X[:, sub])
    shares = np.zeros(p)
    for j in range(p):
        others = [i for i in range(p) if i != j]
        for size in range(p):
            weight = math.factorial(size) * math.factorial(p - size - 1) / math.factorial(p)
            for sub in combinations(others, size):
                with_j = tuple(sorted(sub + (j,)))
                shares[j] += weight * (r2[with_j] - r2[sub])
    return shares, r2[tuple(range(p))]


def lmg_shares(design: RegressionDesign) -> dict:
    """LMG share of every predictor (name -> R^2 share)."""
    shares, _ = _lmg_from_matrix(design.response, design.matrix())
    return dict(zip(design.names, shares.tolist()))


def _run_rng(seed: int, run: int) -> np.random.Generator:
    # one independent stream per (seed, run), so the schedule cannot change results
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, run]))


def _bootstrap_run(y: np.ndarray, X: np.ndarray, seed: int, run: int) -> np.ndarray:
    rng = _run_rng(seed, run)
    n = y.size
    for _ in range(MAX_RETRIES):
        rows = rng.integers(0, n, size=n)
        try:
            shares, total = _lmg_from_matrix(y[rows], X[rows])
        except (CollinearPredictorsError, DegenerateDesignError):
            continue
        return np.append(shares, total)
    raise DegenerateDesignError(f"bootstrap run {run}: no valid resample after {MAX_RETRIES} draws")


def bootstrap_samples(design: RegressionDesign, runs: int = 1000, seed: int = 0, threads: int = 1) -> np.ndarray:
    """Bootstrap LMG shares, one row per run; the last column is the model R^2."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    y, X = design.response, design.matrix()
    if threads <= 1:
        rows = [_bootstrap_run(y, X, seed, r) for r in range(runs)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(lambda r: _bootstrap_run(y, X, seed, r), range(runs)))
    return np.vstack(rows)


def bootstrap_ri(design: RegressionDesign, runs: int = 1000, alpha: float = 0.05, seed: int = 0,
                 threads: int = 1) -> RelativeImportance:
    """LMG shares with case-resampling percentile confidence intervals.

    Point estimates come from the original sample. Each run draws from its own
    generator seeded by (seed, run index).
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must be within (0, 1)")
    shares, model_r2 = _lmg_from_matrix(design.response, design.matrix())
    boot = bootstrap_samples(design, runs, seed, threads)
    lo = np.quantile(boot[:, :-1], alpha / 2, axis=0)
    hi = np.quantile(boot[:, :-1], 1 - alpha / 2, axis=0)
    preds = tuple(
        PredictorImportance(name, float(s), float(a), float(b))
        for name, s, a, b in zip(design.names, shares, lo, hi)
    )
    return RelativeImportance(preds, float(model_r2), runs, alpha, seed)


@dataclass(frozen=True)
class PeriodOutcome:
    period: tuple
    result: RelativeImportance | None = None
    error: str | None = None


def subperiod_compare(design_builder: Callable, periods: list, runs: int = 1000, alpha: float = 0.05,
                      seed: int = 0, threads: int = 1) -> list[PeriodOutcome]:
    """Independent relative importance per period.

    `design_builder(period)` returns a RegressionDesign. Period i uses seed
    ``seed ^ i``. A failing period is reported and the rest still run.
    """
    out = []
    for i, period in enumerate(periods):
        try:
            design = design_builder(period)
            ri = bootstrap_ri(design, runs, alpha, seed ^ i, threads)
            out.append(PeriodOutcome(tuple(period), ri))
        except ValueError as exc:
            logger.warning("period %s: %s", period, exc)
            out.append(PeriodOutcome(tuple(period), error=str(exc)))
    return out


def period_label(period: tuple[MonthIndex, MonthIndex]) -> str:
    return f"{period[0]}:{period[1]}"
