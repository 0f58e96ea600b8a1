"""Seasonal trend regression designs.

Every design has twelve monthly intercepts, twelve month-specific linear
trend slopes and one TIME^2 column per quadratic equality group. Equality
constraints on the monthly curvatures are imposed by summing the tied
TIME^2 columns, so a constrained model is still a plain linear regression.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, RangeError
from .timeseries import MonthlySeries, MonthStamp

SUMMER = (8, 9, 10)
NON_SUMMER = (1, 2, 3, 4, 5, 6, 7, 11, 12)
MONTHS = tuple(range(1, 13))


class Variant(enum.Enum):
    NONE = "NONE"
    SEQ = "Seq"
    NSEQ = "NSeq"
    SEQNSEQ = "Seq+NSeq"
    ALLEQ = "ALLeq"
    ALL0 = "ALL0"

    @classmethod
    def parse(cls, text: str) -> Variant:
        key = text.strip().lower().replace("+", "").replace("_", "").replace("-", "")
        for v in cls:
            if v.value.lower().replace("+", "") == key or v.name.lower() == key:
                return v
        raise ValueError(
            f"unknown variant {text!r}; choose from {', '.join(v.value for v in cls)}"
        )


# Table column order used for reporting and tie-breaking.
VARIANT_ORDER = tuple(Variant)

_GROUPS = {
    Variant.NONE: tuple((m,) for m in MONTHS),
    Variant.SEQ: (SUMMER,) + tuple((m,) for m in NON_SUMMER),
    Variant.NSEQ: (NON_SUMMER,) + tuple((m,) for m in SUMMER),
    Variant.SEQNSEQ: (SUMMER, NON_SUMMER),
    Variant.ALLEQ: (MONTHS,),
    Variant.ALL0: (),
}


@dataclass(frozen=True)
class ModelSpec:
    """Quadratic-curvature constraint pattern.

    ``groups`` optionally overrides the variant with a custom partition of
    the months 1..12 into equality groups.
    """

    variant: Variant = Variant.SEQNSEQ
    groups: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.groups is not None:
            groups = tuple(tuple(sorted(g)) for g in self.groups)
            flat = sorted(m for g in groups for m in g)
            if flat != list(MONTHS) or any(len(g) == 0 for g in groups):
                raise ValueError("custom partition must cover months 1..12 exactly once")
            object.__setattr__(self, "groups", groups)

    @classmethod
    def parse(cls, text: str) -> ModelSpec:
        return cls(Variant.parse(text))

    @property
    def label(self) -> str:
        if self.groups is not None:
            return "custom(" + "|".join(",".join(map(str, g)) for g in self.groups) + ")"
        return self.variant.value

    @property
    def n_regressors(self) -> int:
        return 24 + len(groups_for(self))

    @property
    def n_params(self) -> int:
        """Parameters counted by the information criteria (adds rho, sigma^2)."""
        return self.n_regressors + 2


def groups_for(spec: ModelSpec | Variant) -> tuple[tuple[int, ...], ...]:
    """Partition of months into quadratic equality groups (empty for ALL0)."""
    if isinstance(spec, Variant):
        return _GROUPS[spec]
    if spec.groups is not None:
        return spec.groups
    return _GROUPS[spec.variant]


def column_labels(spec: ModelSpec) -> list[str]:
    labels = [f"delta_{m}" for m in MONTHS] + [f"gamma_{m}" for m in MONTHS]
    labels += ["alpha_" + "_".join(map(str, g)) for g in groups_for(spec)]
    return labels


def unfold_matrix(spec: ModelSpec) -> np.ndarray:
    """Map constrained coefficients (24 + G) to the 36 unconstrained ones.

    Full coefficients are ``M @ beta``; constrained regressors are
    ``X_full @ M``.
    """
    groups = groups_for(spec)
    M = np.zeros((36, 24 + len(groups)))
    M[:24, :24] = np.eye(24)
    for j, g in enumerate(groups):
        for m in g:
            M[24 + m - 1, 24 + j] = 1.0
    return M


def full_coefficients(beta: np.ndarray, spec: ModelSpec) -> np.ndarray:
    """36-vector (delta_1..12, gamma_1..12, alpha_1..12) with tied alphas repeated."""
    return unfold_matrix(spec) @ np.asarray(beta, dtype=float)


def regressors(months: np.ndarray, time: np.ndarray, spec: ModelSpec) -> np.ndarray:
    """Rows x_t for arbitrary (calendar month, TIME) pairs."""
    months = np.asarray(months, dtype=int)
    time = np.asarray(time, dtype=float)
    n = months.size
    groups = groups_for(spec)
    X = np.zeros((n, 24 + len(groups)))
    rows = np.arange(n)
    X[rows, months - 1] = 1.0
    X[rows, 12 + months - 1] = time
    if groups:
        group_of = np.empty(13, dtype=int)
        for j, g in enumerate(groups):
            group_of[list(g)] = j
        X[rows, 24 + group_of[months]] = time**2
    return X


def stamp_regressors(
    start: MonthStamp, end: MonthStamp, anchor: MonthStamp, spec: ModelSpec
) -> np.ndarray:
    k = np.arange(start.ordinal, end.ordinal + 1)
    return regressors(k % 12 + 1, k - anchor.ordinal + 1, spec)


@dataclass(frozen=True)
class DesignMatrix:
    X: np.ndarray
    labels: tuple[str, ...]
    spec: ModelSpec
    anchor: MonthStamp
    origin: MonthStamp
    time: np.ndarray
    months: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.X.shape

    @property
    def n_params(self) -> int:
        return self.spec.n_params

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["year", "month", "time", *self.labels])
            for i, row in enumerate(self.X):
                stamp = self.origin + i
                w.writerow([stamp.year, stamp.month, int(self.time[i]), *(repr(float(v)) for v in row)])


def build(s: MonthlySeries, spec: ModelSpec, anchor: MonthStamp | None = None) -> DesignMatrix:
    if not s.is_complete:
        missing = ", ".join(map(str, s.missing_stamps()))
        raise DataError(f"series has missing months ({missing}); interpolate first")
    anchor = s.anchor if anchor is None else anchor
    if anchor > s.origin:
        raise RangeError(f"anchor {anchor} is after series start {s.origin}")
    time = np.arange(len(s), dtype=float) + (s.origin - anchor) + 1
    months = s.calendar_months()
    X = regressors(months, time, spec)
    return DesignMatrix(X, tuple(column_labels(spec)), spec, anchor, s.origin, time, months)
