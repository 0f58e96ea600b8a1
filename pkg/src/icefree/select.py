"""Information criteria, variant ranking and Wald tests on trend coefficients."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .design import VARIANT_ORDER, ModelSpec, Variant, groups_for
from .errors import DataError, SpecificationError
from .estimate import FittedModel, fit_mle
from .timeseries import MonthlySeries, MonthStamp


def aic(fit: FittedModel) -> float:
    """Per-observation AIC, (-2 lnL + 2k) / T."""
    return (-2.0 * fit.loglik + 2.0 * fit.n_params) / fit.n_obs


def bic(fit: FittedModel) -> float:
    """Per-observation BIC, (-2 lnL + k ln T) / T."""
    return (-2.0 * fit.loglik + fit.n_params * math.log(fit.n_obs)) / fit.n_obs


@dataclass(frozen=True)
class CriteriaRow:
    variant: ModelSpec
    aic: float
    bic: float
    k: int
    rank_aic: int
    rank_bic: int


def fit_variants(
    s: MonthlySeries, anchor: MonthStamp | None = None, variants: Iterable[Variant] = VARIANT_ORDER
) -> list[FittedModel]:
    return [fit_mle(s, ModelSpec(v), anchor) for v in variants]


def _ranks(values: Sequence[float], fits: Sequence[FittedModel]) -> list[int]:
    order = sorted(
        range(len(fits)),
        key=lambda i: (values[i], fits[i].n_params, VARIANT_ORDER.index(fits[i].spec.variant)),
    )
    ranks = [0] * len(fits)
    for r, i in enumerate(order, start=1):
        ranks[i] = r
    return ranks


def rank_table(fits: Sequence[FittedModel]) -> list[CriteriaRow]:
    """Rank the six constraint variants by AIC and BIC (1 = smallest).

    Ties are broken by fewer parameters, then by the standard variant order.
    """
    present = {f.spec.variant for f in fits if f.spec.groups is None}
    missing = [v.value for v in VARIANT_ORDER if v not in present]
    if missing or len(fits) != len(VARIANT_ORDER):
        raise DataError(f"rank_table needs exactly the six variants; missing {missing}")
    first = fits[0]
    if any((f.origin, f.n_obs) != (first.origin, first.n_obs) for f in fits):
        raise DataError("all variants must be fit on the same sample")

    fits = sorted(fits, key=lambda f: VARIANT_ORDER.index(f.spec.variant))
    a = [aic(f) for f in fits]
    b = [bic(f) for f in fits]
    ra, rb = _ranks(a, fits), _ranks(b, fits)
    return [CriteriaRow(f.spec, a[i], b[i], f.n_params, ra[i], rb[i]) for i, f in enumerate(fits)]


def criteria_to_csv(rows: Sequence[CriteriaRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["variant", "k", "aic", "rank_aic", "bic", "rank_bic"])
        for r in rows:
            w.writerow([r.variant.label, r.k, repr(r.aic), r.rank_aic, repr(r.bic), r.rank_bic])


def criteria_to_text(rows: Sequence[CriteriaRow]) -> str:
    """Aligned table with bracketed ranks; the best two per criterion in ``**``."""

    def cell(value: float, rank: int) -> str:
        text = f"{value:.4f} [{rank}]"
        return f"**{text}**" if rank <= 2 else text

    body = [["", *(r.variant.label for r in rows)]]
    body.append(["AIC", *(cell(r.aic, r.rank_aic) for r in rows)])
    body.append(["BIC", *(cell(r.bic, r.rank_bic) for r in rows)])
    widths = [max(len(line[i]) for line in body) for i in range(len(body[0]))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(line, widths)) for line in body) + "\n"


@dataclass(frozen=True)
class WaldResult:
    statistic: float
    dof: int
    p_value: float
    f_statistic: float
    f_dof: tuple[int, int]
    f_p_value: float


def _alpha_columns(fit: FittedModel, months: Iterable[int]) -> list[int]:
    months = sorted(set(months))
    if not months:
        raise SpecificationError("empty month set")
    groups = groups_for(fit.spec)
    cols = []
    for m in months:
        for j, g in enumerate(groups):
            if m in g:
                if len(g) > 1:
                    raise SpecificationError(
                        f"alpha_{m} is tied to months {g} in {fit.spec.label}; "
                        "test it on an unconstrained fit"
                    )
                cols.append(24 + j)
                break
        else:
            raise SpecificationError(f"alpha_{m} is constrained to zero in {fit.spec.label}")
    return cols


def wald_test(fit: FittedModel, R: np.ndarray, r: np.ndarray | None = None) -> WaldResult:
    """Wald test of R beta = r using the MLE covariance of beta."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    r = np.zeros(R.shape[0]) if r is None else np.asarray(r, dtype=float)
    a = R @ fit.beta - r
    V = R @ fit.cov_beta @ R.T
    w = float(a @ np.linalg.solve(V, a))
    q = R.shape[0]
    df2 = fit.n_obs - fit.spec.n_regressors
    # F form rescales the MLE variance to the degrees-of-freedom corrected s^2
    f = w * (df2 / fit.n_obs) / q
    return WaldResult(
        statistic=w,
        dof=q,
        p_value=float(stats.chi2.sf(w, q)),
        f_statistic=f,
        f_dof=(q, df2),
        f_p_value=float(stats.f.sf(f, q, df2)),
    )


def wald_joint_zero(fit: FittedModel, months: Iterable[int]) -> WaldResult:
    """Joint test that the curvature coefficients of ``months`` are all zero."""
    cols = _alpha_columns(fit, months)
    R = np.zeros((len(cols), fit.beta.size))
    R[np.arange(len(cols)), cols] = 1.0
    return wald_test(fit, R)


@dataclass(frozen=True)
class Contrast:
    estimate: float
    se: float
    p_value: float
    ratio: float


def slope_contrast(fit: FittedModel, month_a: int, month_b: int) -> Contrast:
    """gamma_a - gamma_b with its delta-method standard error."""
    ia, ib = 12 + month_a - 1, 12 + month_b - 1
    g = np.zeros(fit.beta.size)
    g[ia] += 1.0
    g[ib] -= 1.0
    est = float(g @ fit.beta)
    ratio = float(fit.beta[ia] / fit.beta[ib]) if fit.beta[ib] != 0 else float("nan")
    if month_a == month_b:
        return Contrast(0.0, 0.0, 1.0, ratio)
    se = math.sqrt(float(g @ fit.cov_beta @ g))
    p = float(2.0 * stats.norm.sf(abs(est) / se))
    return Contrast(est, se, p, ratio)
