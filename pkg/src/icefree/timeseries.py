"""Monthly sea ice extent series: loading, gap filling and slicing.

All downstream regressions use a TIME regressor equal to the 1-based
position of a month relative to an *anchor* month. A freshly loaded series
is its own anchor; a subset remembers the anchor of its parent so that fits
on a shorter window live on the same time axis as full-sample fits.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DataFormatError, GapError, InsufficientDataError, RangeError

OBSERVED = "observed"
INTERPOLATED = "interpolated"
MISSING = "missing"

MIN_OBSERVATIONS = 24

_STAMP_RE = re.compile(r"^\s*(\d{4})\s*[-M/]\s*(\d{1,2})\s*$")


@dataclass(frozen=True, order=True)
class MonthStamp:
    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month must be in 1..12, got {self.month}")

    @classmethod
    def parse(cls, text: str) -> MonthStamp:
        """Parse ``YYYY-MM`` (also accepts ``YYYYMmm`` and ``YYYY/MM``)."""
        m = _STAMP_RE.match(text)
        if m is None:
            raise ValueError(f"cannot parse month stamp {text!r}; expected YYYY-MM")
        return cls(int(m.group(1)), int(m.group(2)))

    @classmethod
    def from_ordinal(cls, k: int) -> MonthStamp:
        return cls(k // 12, k % 12 + 1)

    @property
    def ordinal(self) -> int:
        """Months since year 0, January; differences give month counts."""
        return self.year * 12 + self.month - 1

    def __add__(self, months: int) -> MonthStamp:
        return MonthStamp.from_ordinal(self.ordinal + int(months))

    def __sub__(self, other: MonthStamp | int):
        """Months between two stamps, or the stamp ``other`` months earlier."""
        if isinstance(other, int):
            return self + (-other)
        return self.ordinal - other.ordinal

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def month_range(start: MonthStamp, end: MonthStamp) -> list[MonthStamp]:
    return [start + k for k in range(end - start + 1)]


@dataclass(frozen=True)
class IngestConfig:
    year_col: str = "year"
    month_col: str = "month"
    extent_col: str = "extent"
    missing: float | None = -9999.0
    scale: float = 1.0
    delimiter: str = ","

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale factor must be positive")

    @classmethod
    def nsidc(cls) -> IngestConfig:
        """Column layout of the NSIDC Sea Ice Index monthly CSV files."""
        return cls(year_col="year", month_col="mo", extent_col="extent", missing=-9999.0)


@dataclass(frozen=True)
class MonthlySeries:
    """Gap-free monthly series. Missing months carry NaN and flag ``missing``."""

    origin: MonthStamp
    extent: np.ndarray
    flags: tuple[str, ...]
    anchor: MonthStamp | None = field(default=None)

    def __post_init__(self):
        extent = np.array(self.extent, dtype=float)
        extent.setflags(write=False)
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "flags", tuple(self.flags))
        if self.anchor is None:
            object.__setattr__(self, "anchor", self.origin)
        if len(self.flags) != extent.size:
            raise ValueError("flags and extent lengths differ")
        if self.anchor > self.origin:
            raise RangeError(f"anchor {self.anchor} is after series origin {self.origin}")
        present = np.array([f != MISSING for f in self.flags], dtype=bool)
        if np.any(np.isnan(extent[present])):
            raise ValueError("non-missing entries must be finite")
        if np.any(extent[present] < 0):
            raise ValueError("extents must be non-negative")

    def __len__(self) -> int:
        return self.extent.size

    @property
    def end(self) -> MonthStamp:
        return self.origin + (len(self) - 1)

    def stamps(self) -> list[MonthStamp]:
        return month_range(self.origin, self.end)

    def calendar_months(self) -> np.ndarray:
        """Calendar month (1..12) of each observation."""
        return (self.origin.ordinal + np.arange(len(self))) % 12 + 1

    def time_index(self) -> np.ndarray:
        """TIME regressor: 1 at the anchor month, +1 per month."""
        return np.arange(len(self), dtype=float) + (self.origin - self.anchor) + 1

    @property
    def missing_mask(self) -> np.ndarray:
        return np.array([f == MISSING for f in self.flags], dtype=bool)

    @property
    def n_observed(self) -> int:
        return int(len(self) - self.missing_mask.sum())

    @property
    def is_complete(self) -> bool:
        return not self.missing_mask.any()

    def missing_stamps(self) -> list[MonthStamp]:
        return [self.origin + int(i) for i in np.flatnonzero(self.missing_mask)]

    def position(self, stamp: MonthStamp) -> int:
        k = stamp - self.origin
        if not 0 <= k < len(self):
            raise RangeError(f"{stamp} outside series range {self.origin}..{self.end}")
        return k

    def value_at(self, stamp: MonthStamp) -> float:
        return float(self.extent[self.position(stamp)])


def _csv_files(path: Path) -> list[Path]:
    if path.is_dir():
        files = sorted(path.glob("*.csv"))
        if not files:
            raise DataFormatError(f"no CSV files in directory {path}")
        return files
    if not path.exists():
        raise DataFormatError(f"file not found: {path}")
    return [path]


def load_csv(path: str | Path, cfg: IngestConfig | None = None) -> MonthlySeries:
    """Read a delimited file into a calendar-indexed ``MonthlySeries``.

    ``path`` may also be a directory, in which case every ``*.csv`` in it is
    read (the NSIDC archive ships one file per calendar month). Rows may come
    in any order; after sorting the months must be contiguous. Sentinel or
    empty extents become ``missing``.
    """
    cfg = cfg or IngestConfig()
    rows: dict[MonthStamp, float] = {}
    for fpath in _csv_files(Path(path)):
        with open(fpath, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh, delimiter=cfg.delimiter)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise DataFormatError(f"{fpath}: empty file") from None
            try:
                iy = header.index(cfg.year_col)
                im = header.index(cfg.month_col)
                ie = header.index(cfg.extent_col)
            except ValueError:
                raise DataFormatError(
                    f"{fpath}: header {header} lacks columns "
                    f"{cfg.year_col!r}/{cfg.month_col!r}/{cfg.extent_col!r}",
                    row=1,
                ) from None
            for lineno, rec in enumerate(reader, start=2):
                if not rec or all(not c.strip() for c in rec):
                    continue
                try:
                    stamp = MonthStamp(int(rec[iy].strip()), int(rec[im].strip()))
                    raw = rec[ie].strip()
                    value = float(raw) if raw else float("nan")
                except (ValueError, IndexError) as exc:
                    raise DataFormatError(f"{fpath.name}: {exc}", row=lineno) from None
                if stamp in rows:
                    raise DataFormatError(f"{fpath.name}: duplicate month {stamp}", row=lineno)
                if cfg.missing is not None and value == cfg.missing:
                    value = float("nan")
                elif np.isfinite(value) and value < 0:
                    raise DataFormatError(f"{fpath.name}: negative extent {value}", row=lineno)
                rows[stamp] = value

    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    stamps = sorted(rows)
    expected = month_range(stamps[0], stamps[-1])
    if len(expected) != len(stamps):
        present = set(stamps)
        raise GapError([s for s in expected if s not in present])

    values = np.array([rows[s] for s in stamps]) * cfg.scale
    flags = tuple(MISSING if np.isnan(v) else OBSERVED for v in values)
    return MonthlySeries(stamps[0], values, flags)


def write_csv(series: MonthlySeries, path: str | Path, precision: int = 3) -> None:
    """Write ``year, month, extent, flag``; missing extents are left blank."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["year", "month", "extent", "flag"])
        for stamp, value, flag in zip(series.stamps(), series.extent, series.flags):
            text = "" if flag == MISSING else f"{value:.{precision}f}"
            w.writerow([stamp.year, stamp.month, text, flag])


def _trend_dummy_design(months: np.ndarray, time: np.ndarray) -> np.ndarray:
    X = np.zeros((months.size, 13))
    X[np.arange(months.size), months - 1] = 1.0
    X[:, 12] = time
    return X


def interpolate_missing(s: MonthlySeries) -> MonthlySeries:
    """Fill missing months with fitted values from an OLS regression on
    twelve monthly dummies and a linear TIME trend, estimated on every
    non-missing observation."""
    mask = s.missing_mask
    if not mask.any():
        return s
    if s.n_observed < MIN_OBSERVATIONS:
        raise InsufficientDataError(
            f"need at least {MIN_OBSERVATIONS} observed months, have {s.n_observed}"
        )
    months = s.calendar_months()
    empty = sorted(set(range(1, 13)) - set(months[~mask].tolist()))
    if empty:
        raise InsufficientDataError(f"calendar months without observations: {empty}")

    X = _trend_dummy_design(months, s.time_index())
    coef, *_ = np.linalg.lstsq(X[~mask], s.extent[~mask], rcond=None)
    filled = s.extent.copy()
    filled[mask] = X[mask] @ coef
    flags = tuple(INTERPOLATED if m else f for m, f in zip(mask, s.flags))
    return MonthlySeries(s.origin, filled, flags, anchor=s.anchor)


def subset(s: MonthlySeries, start: MonthStamp, end: MonthStamp) -> MonthlySeries:
    """Contiguous slice ``start..end`` inclusive, keeping the parent's anchor."""
    if start > end:
        raise RangeError(f"subset start {start} is after end {end}")
    if start < s.origin or end > s.end:
        raise RangeError(f"subset {start}..{end} outside series range {s.origin}..{s.end}")
    i, j = s.position(start), s.position(end) + 1
    return MonthlySeries(start, s.extent[i:j], s.flags[i:j], anchor=s.anchor)


def from_values(
    origin: MonthStamp, values: Iterable[float], anchor: MonthStamp | None = None
) -> MonthlySeries:
    """Build a fully observed series; NaN entries are flagged missing."""
    arr = np.asarray(list(values), dtype=float)
    flags = tuple(MISSING if np.isnan(v) else OBSERVED for v in arr)
    return MonthlySeries(origin, arr, flags, anchor=anchor)

