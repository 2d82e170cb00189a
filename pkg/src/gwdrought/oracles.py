"""Brute-force reference implementations and the oracle suite.

Each oracle computes the same quantity as a production routine by the most
direct route available (plain loops, exact or high-precision arithmetic,
exhaustive enumeration), sharing no code with it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np

from .synth import counter_normal, counter_uniform


def rolling_sum(x, k: int) -> list[float]:
    """Trailing k-sum by explicit loop with correctly rounded summation."""
    out = []
    for t in range(len(x)):
        if t < k - 1:
            out.append(math.nan)
            continue
        w = [float(v) for v in x[t - k + 1:t + 1]]
        out.append(math.nan if any(math.isnan(v) for v in w) else math.fsum(w))
    return out


def maximal_negative_runs(x, min_run: int = 3) -> list[tuple[int, int]]:
    """(start, end_inclusive) of every maximal strictly negative run of length >= min_run.

    Scans element by element, checking maximality against both neighbours.
    """
    n = len(x)
    out = []
    for a in range(n):
        if not x[a] < 0 or (a > 0 and x[a - 1] < 0):
            continue
        b = a
        while b + 1 < n and x[b + 1] < 0:
            b += 1
        if b - a + 1 >= min_run:
            out.append((a, b))
    return out


def pearson_direct(x, y, dps: int = 50) -> float:
    """Pearson r with textbook sums evaluated in high precision."""
    pairs = [(float(a), float(b)) for a, b in zip(x, y) if not (math.isnan(a) or math.isnan(b))]
    with mpmath.workdps(dps):
        n = len(pairs)
        sx = mpmath.fsum(mpmath.mpf(a) for a, _ in pairs)
        sy = mpmath.fsum(mpmath.mpf(b) for _, b in pairs)
        sxx = mpmath.fsum(mpmath.mpf(a) ** 2 for a, _ in pairs)
        syy = mpmath.fsum(mpmath.mpf(b) ** 2 for _, b in pairs)
        sxy = mpmath.fsum(mpmath.mpf(a) * b for a, b in pairs)
        num = n * sxy - sx * sy
        den = mpmath.sqrt((n * sxx - sx ** 2) * (n * syy - sy ** 2))
        return float(num / den)


def t_two_sided_p(r: float, n: int) -> float:
    """Two-sided p-value by quadrature of the Student-t density."""
    with mpmath.workdps(30):
        df = mpmath.mpf(n - 2)
        r = mpmath.mpf(r)
        t = abs(r) * mpmath.sqrt(df / (1 - r * r))
        c = mpmath.gamma((df + 1) / 2) / (mpmath.sqrt(df * mpmath.pi) * mpmath.gamma(df / 2))
        tail = mpmath.quad(lambda u: c * (1 + u * u / df) ** (-(df + 1) / 2), [t, mpmath.inf])
        return float(2 * tail)


def linear_fill(x) -> list[float]:
    """Interior gap filling from the two-point line formula."""
    x = [float(v) for v in x]
    known = [i for i, v in enumerate(x) if not math.isnan(v)]
    out = list(x)
    for a, b in zip(known, known[1:]):
        for i in range(a + 1, b):
            out[i] = x[a] + (x[b] - x[a]) * (i - a) / (b - a)
    return out


def r2_normal_equations(y, X, dps: int = 40) -> float:
    """R^2 with intercept by solving the normal equations in high precision."""
    y = [float(v) for v in y]
    n = len(y)
    X = [[float(v) for v in row] for row in np.asarray(X, dtype=float).reshape(n, -1)]
    p = len(X[0]) if X else 0
    with mpmath.workdps(dps):
        ybar = mpmath.fsum(y) / n
        sst = mpmath.fsum((mpmath.mpf(v) - ybar) ** 2 for v in y)
        if p == 0:
            return 0.0
        A = [[mpmath.mpf(1)] + [mpmath.mpf(v) for v in row] for row in X]
        M = mpmath.matrix(p + 1, p + 1)
        v = mpmath.matrix(p + 1, 1)
        for i in range(p + 1):
            for j in range(p + 1):
                M[i, j] = mpmath.fsum(row[i] * row[j] for row in A)
            v[i] = mpmath.fsum(row[i] * yy for row, yy in zip(A, y))
        beta = mpmath.lu_solve(M, v)
        sse = mpmath.fsum((yy - mpmath.fsum(beta[i] * row[i] for i in range(p + 1))) ** 2 for row, yy in zip(A, y))
        return float(1 - sse / sst)


def _r2_lstsq(y: np.ndarray, X: np.ndarray) -> float:
    A = np.column_stack([np.ones(y.size), X]) if X.shape[1] else np.ones((y.size, 1))
    beta, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ beta
    return 1.0 - (resid @ resid) / ((y - y.mean()) @ (y - y.mean()))


def lmg_orderings(y, X) -> np.ndarray:
    """LMG shares by walking every predictor ordering."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    shares = np.zeros(p)
    perms = list(itertools.permutations(range(p)))
    for perm in perms:
        prev = 0.0
        for i, j in enumerate(perm):
            cols = sorted(perm[:i + 1])
            cur = _r2_lstsq(y, X[:, cols])
            shares[j] += cur - prev
            prev = cur
    return shares / len(perms)


# ----------------------------------------------------------------------------


@dataclass
class OracleEntry:
    op: str
    max_dev: float
    tol: float
    seed: int
    cases: int

    @property
    def passed(self) -> bool:
        return bool(self.max_dev <= self.tol)


@dataclass
class OracleReport:
    entries: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> list[OracleEntry]:
        return [e for e in self.entries if not e.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "ops": [
                {"op": e.op, "max_dev": e.max_dev, "tol": e.tol, "seed": e.seed,
                 "cases": e.cases, "passed": e.passed}
                for e in self.entries
            ],
        }


def _rel_dev(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not np.array_equal(np.isnan(a), np.isnan(b)):
        return math.inf
    ok = ~np.isnan(a)
    if not ok.any():
        return 0.0
    return float(np.max(np.abs(a[ok] - b[ok]) / np.maximum(np.abs(b[ok]), 1e-300)))


def oracle_suite(seed: int = 0, overrides: dict | None = None, scale: int = 1) -> OracleReport:
    """Run every oracle against the production routines on seeded random inputs.

    `overrides` maps an op name to a replacement callable, which is how the
    suite's own sensitivity is checked. `scale` multiplies the case counts.
    """
    from . import anomaly, attribution, drought, optimal_period
    from .chrono_grid import MonthIndex, MonthlySeries, TimeAxis

    ops: dict[str, Callable] = {
        "accumulate": anomaly.accumulate,
        "pearson_r": optimal_period.pearson_r,
        "corr_p_value": optimal_period.corr_p_value,
        "fill_gaps_linear": drought.fill_gaps_linear,
        "detect_events": drought.detect_events,
        "ols_r2": attribution.ols_r2,
        "lmg_shares": attribution.lmg_shares,
    }
    ops.update(overrides or {})
    report = OracleReport()
    start = MonthIndex(2000, 1)

    def series(x):
        return MonthlySeries(TimeAxis(start, len(x)), x)

    # rolling sums on non-negative data
    dev, cases = 0.0, 0
    for c in range(10 * scale):
        n = 1 + int(counter_uniform(seed, 1, 1000 + c)[0] * 400)
        x = 200.0 * counter_uniform(seed, n, 2000 + c)
        for k in sorted({1, min(2, n), max(1, n // 3), n}):
            dev = max(dev, _rel_dev(ops["accumulate"](series(x), k).values, rolling_sum(x, k)))
            cases += 1
    report.entries.append(OracleEntry("accumulate", dev, 1e-12, seed, cases))

    dev, cases = 0.0, 0
    for c, n in enumerate([3, 10, 100, 1000, 10_000]):
        x = counter_normal(seed, n, 3000 + c) * 5 + 2
        y = 0.5 * x + counter_normal(seed, n, 4000 + c)
        dev = max(dev, _rel_dev(ops["pearson_r"](x, y), pearson_direct(x, y)))
        cases += 1
    report.entries.append(OracleEntry("pearson_r", dev, 1e-12, seed, cases))

    dev, cases = 0.0, 0
    for c in range(8 * scale):
        r = float(counter_uniform(seed, 1, 5000 + c)[0] * 1.98 - 0.99)
        n = 3 + int(counter_uniform(seed, 1, 6000 + c)[0] * 200)
        got = ops["corr_p_value"](r, n)
        dev = max(dev, abs(got - t_two_sided_p(r, n)))
        cases += 1
    report.entries.append(OracleEntry("corr_p_value", dev, 1e-6, seed, cases))

    dev, cases = 0.0, 0
    for c in range(10 * scale):
        n = 2 + int(counter_uniform(seed, 1, 7000 + c)[0] * 300)
        x = counter_normal(seed, n, 8000 + c) * 3
        gaps = counter_uniform(seed, n, 9000 + c) < 0.3
        x[gaps] = np.nan
        if np.count_nonzero(~np.isnan(x)) < 2:
            continue
        dev = max(dev, _rel_dev(ops["fill_gaps_linear"](series(x)).values, linear_fill(x)))
        cases += 1
    report.entries.append(OracleEntry("fill_gaps_linear", dev, 1e-12, seed, cases))

    mismatches, cases = 0, 0
    for c in range(200 * scale):
        n = 1 + int(counter_uniform(seed, 1, 10_000 + c)[0] * 300)
        x = np.where(counter_uniform(seed, n, 20_000 + c) < 0.5, -1.0, 1.0)
        cat = ops["detect_events"](series(x), 3)
        got = [(e.start.ordinal - start.ordinal, e.end.ordinal - start.ordinal) for e in cat.events]
        mismatches += got != maximal_negative_runs(x, 3)
        cases += 1
    report.entries.append(OracleEntry("detect_events", float(mismatches), 0.0, seed, cases))

    dev, cases = 0.0, 0
    for c in range(10 * scale):
        n = 10 + int(counter_uniform(seed, 1, 30_000 + c)[0] * 200)
        p = 1 + c % 3
        X = counter_normal(seed, n * p, 40_000 + c).reshape(n, p)
        y = X @ np.arange(1, p + 1) + 2 * counter_normal(seed, n, 50_000 + c)
        d = attribution.RegressionDesign(y, {f"x{i}": X[:, i] for i in range(p)})
        dev = max(dev, _rel_dev(ops["ols_r2"](d), r2_normal_equations(y, X)))
        cases += 1
    report.entries.append(OracleEntry("ols_r2", dev, 1e-12, seed, cases))

    dev, cases = 0.0, 0
    for c in range(20 * scale):
        n = 12 + int(counter_uniform(seed, 1, 60_000 + c)[0] * 100)
        p = 2 + c % 2
        X = counter_normal(seed, n * p, 70_000 + c).reshape(n, p)
        X[:, 1] += 0.5 * X[:, 0]
        y = X @ counter_normal(seed, p, 80_000 + c) + counter_normal(seed, n, 90_000 + c)
        d = attribution.RegressionDesign(y, {f"x{i}": X[:, i] for i in range(p)})
        got = np.array(list(ops["lmg_shares"](d).values()))
        dev = max(dev, float(np.max(np.abs(got - lmg_orderings(y, X)))))
        cases += 1
    report.entries.append(OracleEntry("lmg_shares", dev, 1e-9, seed, cases))
    return report
