"""Compare statistical September projections with external annual scenario series."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataFormatError, RangeError
from .forecast import ForecastPath

FIXTURE = "cmip5_september_fixture.csv"


@dataclass(frozen=True)
class AnnualSeries:
    label: str
    years: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        years = np.asarray(self.years, dtype=int)
        values = np.asarray(self.values, dtype=float)
        if years.shape != values.shape:
            raise ValueError("years and values differ in length")
        if years.size > 1 and np.any(np.diff(years) <= 0):
            raise ValueError("years must be strictly increasing")
        if np.any(values < 0):
            raise ValueError("values must be non-negative")
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.years.size


def load_projection_csv(path: str | Path) -> list[AnnualSeries]:
    """One ``AnnualSeries`` per non-year column of a CSV with a ``year`` column.

    Years must increase by exactly one per row; every cell must be filled.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataFormatError(f"{path}: empty projection file")
    header = [h.strip() for h in rows[0]]
    if "year" not in header:
        raise DataFormatError(f"{path}: no 'year' column", row=1)
    iy = header.index("year")
    labels = [h for i, h in enumerate(header) if i != iy]
    if not labels or len(rows) < 2:
        raise DataFormatError(f"{path}: no scenario data")

    years, cols = [], [[] for _ in labels]
    for lineno, rec in enumerate(rows[1:], start=2):
        if len(rec) != len(header):
            raise DataFormatError(f"expected {len(header)} fields, got {len(rec)}", row=lineno)
        try:
            year = int(rec[iy])
            vals = [float(c) for i, c in enumerate(rec) if i != iy]
        except ValueError as exc:
            raise DataFormatError(str(exc), row=lineno) from None
        if years and year != years[-1] + 1:
            what = "not increasing" if year <= years[-1] else "gap"
            raise DataFormatError(f"year {year} after {years[-1]}: {what}", row=lineno)
        if any(v < 0 or not math.isfinite(v) for v in vals):
            raise DataFormatError(f"invalid value in year {year}", row=lineno)
        years.append(year)
        for c, v in zip(cols, vals):
            c.append(v)
    return [AnnualSeries(lab, np.array(years), np.array(c)) for lab, c in zip(labels, cols)]


def load_fixture() -> list[AnnualSeries]:
    """Bundled reconstructed multi-model mean September series (2006-2100)."""
    with resources.as_file(resources.files("icefree.data") / FIXTURE) as p:
        return load_projection_csv(p)


def crossing_year(s: AnnualSeries, gamma: float) -> int | None:
    """First year whose value is at or below ``gamma``."""
    if gamma < 0:
        raise ValueError("threshold must be non-negative")
    hit = np.flatnonzero(s.values <= gamma)
    return int(s.years[hit[0]]) if hit.size else None


def september_series(path: ForecastPath, label: str = "statistical") -> AnnualSeries:
    """Censored September values of a monthly forecast path, one per year."""
    pos, years = path.calendar_month(9)
    return AnnualSeries(label, years, path.censored[pos])


def path_divergence(
    stat: ForecastPath | AnnualSeries,
    model: AnnualSeries,
    norm: str = "L2",
    years: tuple[int, int] | None = None,
) -> float:
    """Distance between two annual September paths over their common years.

    L1 is the mean absolute difference, L2 the root mean square difference
    and Linf the largest absolute difference.
    """
    if isinstance(stat, ForecastPath):
        stat = september_series(stat)
    common, ia, ib = np.intersect1d(stat.years, model.years, return_indices=True)
    if years is not None:
        keep = (common >= years[0]) & (common <= years[1])
        common, ia, ib = common[keep], ia[keep], ib[keep]
    if common.size == 0:
        raise RangeError(f"no overlapping years between {stat.label!r} and {model.label!r}")
    d = stat.values[ia] - model.values[ib]
    key = norm.upper()
    if key == "L1":
        return float(np.mean(np.abs(d)))
    if key == "L2":
        return float(np.sqrt(np.mean(d * d)))
    if key in ("LINF", "INF"):
        return float(np.max(np.abs(d)))
    raise ValueError(f"unknown norm {norm!r}; use L1, L2 or Linf")


def gap_at(stat: ForecastPath | AnnualSeries, model: AnnualSeries, year: int) -> float:
    """``model - stat`` in a single year."""
    if isinstance(stat, ForecastPath):
        stat = september_series(stat)
    try:
        i = int(np.flatnonzero(stat.years == year)[0])
        j = int(np.flatnonzero(model.years == year)[0])
    except IndexError:
        raise RangeError(f"year {year} not covered by both series") from None
    return float(model.values[j] - stat.values[i])


def comparison_rows(
    stat: ForecastPath, models: Sequence[AnnualSeries], gamma: float
) -> list[dict]:
    """Per-scenario crossing years and divergences from the statistical path."""
    rows = []
    stat_sep = september_series(stat)
    for m in models:
        row = {"label": m.label, "crossing_year": crossing_year(m, gamma)}
        for norm in ("L1", "L2", "Linf"):
            row[f"divergence_{norm}"] = path_divergence(stat_sep, m, norm)
        rows.append(row)
    return rows
