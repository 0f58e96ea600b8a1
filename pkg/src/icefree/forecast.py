"""Trend extrapolation, shadow-ice censoring and pointwise forecast bands.

Forecasts are the deterministic trend x_t' beta. The "shadow" value may go
negative; observable extent is ``max(shadow, 0)``. Forecast standard errors
use s * sqrt(1 + x_t' (X'X)^{-1} x_t) with the raw (unwhitened) design.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .design import regressors, stamp_regressors
from .estimate import FittedModel
from .errors import RangeError
from .timeseries import MonthStamp, month_range

HORIZON_END = MonthStamp(2099, 12)


def censor(shadow: np.ndarray) -> np.ndarray:
    return np.maximum(shadow, 0.0)


@dataclass(frozen=True)
class ForecastPath:
    start: MonthStamp
    shadow: np.ndarray
    censored: np.ndarray
    se: np.ndarray
    band_k: float = 0.0

    @property
    def horizon(self) -> int:
        return self.shadow.size

    @property
    def end(self) -> MonthStamp:
        return self.start + (self.horizon - 1)

    def stamps(self) -> list[MonthStamp]:
        return month_range(self.start, self.end)

    @property
    def lo(self) -> np.ndarray:
        return self.shadow - self.band_k * self.se

    @property
    def hi(self) -> np.ndarray:
        return self.shadow + self.band_k * self.se

    @property
    def lo_censored(self) -> np.ndarray:
        return censor(self.lo)

    @property
    def hi_censored(self) -> np.ndarray:
        return censor(self.hi)

    def index(self, stamp: MonthStamp) -> int:
        k = stamp - self.start
        if not 0 <= k < self.horizon:
            raise RangeError(f"{stamp} outside forecast range {self.start}..{self.end}")
        return k

    def calendar_month(self, month: int) -> tuple[np.ndarray, np.ndarray]:
        """Positions and calendar years of every ``month`` in the path."""
        first = (month - self.start.month) % 12
        pos = np.arange(first, self.horizon, 12)
        years = np.array([(self.start + int(p)).year for p in pos], dtype=int)
        return pos, years

    def to_csv(self, path: str | Path) -> None:
        bands = self.band_k > 0
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            header = ["year", "month", "shadow", "censored", "se"]
            if bands:
                header += ["lo", "hi", "lo_censored", "hi_censored"]
            w.writerow(header)
            lo, hi, loc, hic = self.lo, self.hi, self.lo_censored, self.hi_censored
            for i, stamp in enumerate(self.stamps()):
                row = [stamp.year, stamp.month, f"{self.shadow[i]:.6f}", f"{self.censored[i]:.6f}", f"{self.se[i]:.6f}"]
                if bands:
                    row += [f"{lo[i]:.6f}", f"{hi[i]:.6f}", f"{loc[i]:.6f}", f"{hic[i]:.6f}"]
                w.writerow(row)


def _rows_se(fit: FittedModel, X: np.ndarray, whitened: bool) -> np.ndarray:
    if whitened:
        lev = np.einsum("ij,jk,ik->i", X, fit.cov_beta, X)
        return np.sqrt(fit.unconditional_sd**2 + lev)
    lev = np.einsum("ij,jk,ik->i", X, fit.xtx_inv, X)
    return fit.s * np.sqrt(1.0 + np.maximum(lev, 0.0))


def forecast_se(fit: FittedModel, t_index, *, whitened: bool = False) -> np.ndarray | float:
    """Forecast-error standard deviation at TIME index ``t_index`` (scalar or array).

    ``whitened=True`` swaps in the GLS covariance of beta and the
    unconditional AR(1) standard deviation; the default is the plain
    regression formula.
    """
    t = np.atleast_1d(np.asarray(t_index, dtype=int))
    if np.any(t < 1):
        raise RangeError("TIME index must be >= 1")
    k = fit.anchor.ordinal + t - 1
    X = regressors(k % 12 + 1, t, fit.spec)
    se = _rows_se(fit, X, whitened)
    return float(se[0]) if np.ndim(t_index) == 0 else se


def trend_path(
    fit: FittedModel,
    start: MonthStamp,
    end: MonthStamp = HORIZON_END,
    *,
    whitened: bool = False,
) -> ForecastPath:
    """Deterministic trend x_t' beta from ``start`` to ``end`` inclusive."""
    if end < start:
        raise RangeError(f"end {end} precedes start {start}")
    if start < fit.anchor:
        raise RangeError(f"start {start} precedes the TIME anchor {fit.anchor}")
    X = stamp_regressors(start, end, fit.anchor, fit.spec)
    shadow = X @ fit.beta
    return ForecastPath(start, shadow, censor(shadow), _rows_se(fit, X, whitened))


def interval_path(
    fit: FittedModel,
    start: MonthStamp,
    end: MonthStamp = HORIZON_END,
    k: float = 2.0,
    *,
    whitened: bool = False,
) -> ForecastPath:
    """Trend path with pointwise bands shadow +/- k * se (and censored bands)."""
    if k < 0:
        raise ValueError("band multiplier must be non-negative")
    path = trend_path(fit, start, end, whitened=whitened)
    return ForecastPath(path.start, path.shadow, path.censored, path.se, float(k))


@dataclass(frozen=True)
class Crossing:
    stamp: MonthStamp
    value: float
    year_fraction: float

    @property
    def year(self) -> int:
        return self.stamp.year


def first_at_or_below(values: np.ndarray, years: np.ndarray, gamma: float) -> tuple[int, float] | None:
    hit = np.flatnonzero(values <= gamma)
    if hit.size == 0:
        return None
    i = int(hit[0])
    if i == 0:
        return i, float(years[0])
    prev, cur = values[i - 1], values[i]
    frac = (prev - gamma) / (prev - cur) if prev != cur else 1.0
    return i, float(years[i - 1] + frac * (years[i] - years[i - 1]))


def zero_crossing(
    fit: FittedModel,
    month: int,
    gamma: float = 0.0,
    *,
    start: MonthStamp | None = None,
    end: MonthStamp = HORIZON_END,
) -> Crossing | None:
    """First ``month`` whose trend value is at or below ``gamma``.

    Scans from ``start`` (default: the fit's sample start) to ``end``.
    ``year_fraction`` interpolates linearly between the last year above and
    the first year at or below the threshold.
    """
    if gamma < 0:
        raise ValueError("threshold must be non-negative")
    start = fit.origin if start is None else start
    path = trend_path(fit, start, end)
    pos, years = path.calendar_month(month)
    found = first_at_or_below(path.shadow[pos], years, gamma)
    if found is None:
        return None
    i, frac = found
    return Crossing(path.start + int(pos[i]), float(path.shadow[pos[i]]), frac)
