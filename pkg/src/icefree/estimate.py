"""Exact Gaussian maximum likelihood for trend regressions with AR(1) errors.

For a fixed AR coefficient the model is whitened with the Prais-Winsten
transform (first row scaled by sqrt(1 - rho^2)), which turns the exact
stationary likelihood into an ordinary least-squares problem. The
regression coefficients and the innovation variance are concentrated out,
leaving a one-dimensional search over rho.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import optimize, stats

from .design import DesignMatrix, ModelSpec, build, full_coefficients, groups_for
from .errors import DataError, EstimationError, InsufficientDataError, RankError
from .timeseries import MonthlySeries, MonthStamp

RHO_BOUND = 0.999
STAR_CRITICAL = 1.645  # two-sided 10% normal critical value

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class FittedModel:
    spec: ModelSpec
    beta: np.ndarray
    rho: float
    sigma2: float
    loglik: float
    cov_beta: np.ndarray
    se_rho: float
    eps_hat: np.ndarray
    v_hat: np.ndarray
    xtx_inv: np.ndarray
    s: float
    anchor: MonthStamp
    origin: MonthStamp
    y: np.ndarray = field(repr=False)
    X: np.ndarray = field(repr=False)
    labels: tuple[str, ...] = field(repr=False, default=())
    n_iter: int = 0

    @property
    def n_obs(self) -> int:
        return self.y.size

    @property
    def end(self) -> MonthStamp:
        return self.origin + (self.n_obs - 1)

    @property
    def n_params(self) -> int:
        return self.spec.n_params

    @property
    def se_beta(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov_beta))

    @property
    def full_beta(self) -> np.ndarray:
        """delta_1..12, gamma_1..12, alpha_1..12 with constrained alphas repeated."""
        return full_coefficients(self.beta, self.spec)

    @property
    def fitted(self) -> np.ndarray:
        return self.X @ self.beta

    @property
    def unconditional_sd(self) -> float:
        """Standard deviation of the stationary AR(1) disturbance."""
        return math.sqrt(self.sigma2 / (1.0 - self.rho**2))

    def coef(self, label: str) -> float:
        return float(self.beta[self.labels.index(label)])

    def alpha(self, month: int) -> float:
        return float(self.full_beta[24 + month - 1])


def whiten(a: np.ndarray, rho: float) -> np.ndarray:
    """Prais-Winsten transform along axis 0."""
    out = np.empty_like(a, dtype=float)
    out[0] = math.sqrt(1.0 - rho * rho) * a[0]
    out[1:] = a[1:] - rho * a[:-1]
    return out


def ar1_loglik(y: np.ndarray, X: np.ndarray, beta: np.ndarray, rho: float, sigma2: float) -> float:
    """Exact log-likelihood of y = X beta + eps with stationary AR(1) eps."""
    if not abs(rho) < 1 or not sigma2 > 0:
        return -np.inf
    v = whiten(np.asarray(y) - np.asarray(X) @ np.asarray(beta), rho)
    T = v.size
    return (
        -0.5 * T * (_LOG_2PI + math.log(sigma2))
        + 0.5 * math.log(1.0 - rho * rho)
        - 0.5 * float(v @ v) / sigma2
    )


def _check_rank(Xs: np.ndarray, labels: Sequence[str]) -> None:
    p = Xs.shape[1]
    if np.linalg.matrix_rank(Xs) == p:
        return
    for j in range(p):
        if np.linalg.matrix_rank(Xs[:, : j + 1]) < j + 1:
            raise RankError(labels[j])


class _Profile:
    """Concentrated log-likelihood in rho, on a column-scaled design."""

    def __init__(self, y: np.ndarray, Xs: np.ndarray):
        self.y = y
        self.Xs = Xs
        self.T = y.size

    def gls(self, rho: float) -> tuple[np.ndarray, float, np.ndarray]:
        yw = whiten(self.y, rho)
        Xw = whiten(self.Xs, rho)
        Q, R = np.linalg.qr(Xw)
        b = np.linalg.solve(R, Q.T @ yw)
        resid = yw - Xw @ b
        return b, float(resid @ resid) / self.T, R

    def __call__(self, rho: float) -> float:
        _, sigma2, _ = self.gls(rho)
        return -0.5 * self.T * (_LOG_2PI + math.log(sigma2) + 1.0) + 0.5 * math.log(1.0 - rho * rho)


def _maximize_rho(profile: _Profile, tol: float, maxiter: int) -> tuple[float, int]:
    grid = np.linspace(-0.99, 0.99, 199)
    values = np.array([profile(r) for r in grid])
    k = int(np.argmax(values))
    lo = grid[k - 1] if k > 0 else -RHO_BOUND
    hi = grid[k + 1] if k < grid.size - 1 else RHO_BOUND
    res = optimize.minimize_scalar(
        lambda r: -profile(r),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": tol, "maxiter": maxiter},
    )
    if not res.success:
        raise EstimationError(
            f"rho search did not converge after {res.nfev} evaluations: {res.message}",
            best=float(res.x),
        )
    return float(res.x), int(res.nfev) + grid.size


def _inv_from_r(R: np.ndarray) -> np.ndarray:
    Rinv = np.linalg.solve(R, np.eye(R.shape[0]))
    return Rinv @ Rinv.T


def fit_mle(
    s: MonthlySeries,
    spec: ModelSpec | None = None,
    anchor: MonthStamp | None = None,
    *,
    tol: float = 1e-8,
    maxiter: int = 500,
) -> FittedModel:
    """Maximum-likelihood fit of the seasonal trend model with AR(1) errors.

    Parameters
    ----------
    s : MonthlySeries
        Complete (gap-filled) series.
    spec : ModelSpec
        Curvature constraint pattern, default ``Seq+NSeq``.
    anchor : MonthStamp, optional
        Month at which TIME = 1; defaults to the series' own anchor.
    tol : float
        Absolute tolerance of the search over rho.

    Returns
    -------
    FittedModel
    """
    spec = spec or ModelSpec()
    design = build(s, spec, anchor)
    return fit_design(np.asarray(s.extent, dtype=float), design, tol=tol, maxiter=maxiter)


def fit_design(y: np.ndarray, design: DesignMatrix, *, tol: float = 1e-8, maxiter: int = 500) -> FittedModel:
    X = design.X
    T, p = X.shape
    if T <= p + 2:
        raise InsufficientDataError(f"{T} observations cannot identify {p + 2} parameters")
    if not np.all(np.isfinite(y)):
        raise DataError("response contains non-finite values")

    scale = np.abs(X).max(axis=0)
    scale[scale == 0] = 1.0
    Xs = X / scale
    _check_rank(Xs, design.labels)

    profile = _Profile(y, Xs)
    _, ols_sigma2, _ = profile.gls(0.0)
    if not ols_sigma2 > 1e-20 * max(float(np.mean(y * y)), 1e-300):
        raise EstimationError("regressors fit the data exactly; innovation variance is zero")
    rho, n_iter = _maximize_rho(profile, tol, maxiter)
    b_scaled, sigma2, R = profile.gls(rho)
    beta = b_scaled / scale
    cov_beta = sigma2 * _inv_from_r(R) / np.outer(scale, scale)
    cov_beta = 0.5 * (cov_beta + cov_beta.T)

    h = min(1e-4, 0.5 * (RHO_BOUND - abs(rho)))
    d2 = (profile(rho + h) - 2.0 * profile(rho) + profile(rho - h)) / (h * h)
    se_rho = math.sqrt(-1.0 / d2) if d2 < 0 else float("nan")

    eps_hat = y - X @ beta
    v_hat = whiten(eps_hat, rho)
    _, Rraw = np.linalg.qr(Xs)
    xtx_inv = _inv_from_r(Rraw) / np.outer(scale, scale)
    s_reg = math.sqrt(float(eps_hat @ eps_hat) / (T - p))
    loglik = ar1_loglik(y, X, beta, rho, sigma2)

    return FittedModel(
        spec=design.spec,
        beta=beta,
        rho=rho,
        sigma2=sigma2,
        loglik=loglik,
        cov_beta=cov_beta,
        se_rho=se_rho,
        eps_hat=eps_hat,
        v_hat=v_hat,
        xtx_inv=xtx_inv,
        s=s_reg,
        anchor=design.anchor,
        origin=design.origin,
        y=y,
        X=X,
        labels=design.labels,
        n_iter=n_iter,
    )


def loglikelihood(fit: FittedModel) -> float:
    """Exact Gaussian log-likelihood at the fitted parameters, including
    the stationarity term 0.5 * log(1 - rho^2)."""
    return ar1_loglik(fit.y, fit.X, fit.beta, fit.rho, fit.sigma2)


@dataclass(frozen=True)
class Diagnostics:
    r2: float
    dw: float
    skew: float
    kurt: float
    bin_edges: np.ndarray
    bin_mass: np.ndarray
    gaussian_mass: np.ndarray
    gaussian_density: np.ndarray
    condition_number: float

    def as_dict(self) -> dict:
        return {
            "r2": self.r2,
            "dw": self.dw,
            "skew": self.skew,
            "kurt": self.kurt,
            "condition_number": self.condition_number,
        }


def diagnostics(fit: FittedModel, bins: int = 30) -> Diagnostics:
    """Residual diagnostics: R^2 on the original scale, Durbin-Watson,
    skewness and (raw, Gaussian = 3) kurtosis of the innovation residuals,
    plus a normalized histogram with the moment-matched Gaussian."""
    y, eps, v = fit.y, fit.eps_hat, fit.v_hat
    r2 = 1.0 - float(eps @ eps) / float(((y - y.mean()) ** 2).sum())
    dw = float((np.diff(v) ** 2).sum() / (v @ v))
    skew = float(stats.skew(v, bias=True))
    kurt = float(stats.kurtosis(v, fisher=False, bias=True))

    counts, edges = np.histogram(v, bins=bins)
    mass = counts / counts.sum()
    mu, sd = float(v.mean()), float(v.std())
    centers = 0.5 * (edges[1:] + edges[:-1])
    gauss_mass = np.diff(stats.norm.cdf(edges, mu, sd))
    gauss_density = stats.norm.pdf(centers, mu, sd)
    return Diagnostics(
        r2=r2,
        dw=dw,
        skew=skew,
        kurt=kurt,
        bin_edges=edges,
        bin_mass=mass,
        gaussian_mass=gauss_mass,
        gaussian_density=gauss_density,
        condition_number=float(np.linalg.cond(fit.X)),
    )


@dataclass(frozen=True)
class Cell:
    value: float
    se: float = float("nan")
    constrained: bool = False

    @property
    def starred(self) -> bool:
        return bool(self.se > 0 and abs(self.value) / self.se > STAR_CRITICAL)


@dataclass
class CoefficientTable:
    columns: list[str]
    rows: list[tuple[str, list[Cell]]]

    _FORMATS = {"delta": "{:.4f}", "gamma": "{:.4f}", "alpha": "{:.2E}", "rho": "{:.4f}",
                "sigma2": "{:.4f}", "R2": "{:.3f}", "DW": "{:.2f}", "Skew": "{:.2f}", "Kurt": "{:.2f}"}

    def format_cell(self, name: str, cell: Cell, bold: str = "**") -> str:
        fmt = self._FORMATS[name.split("_")[0]]
        text = "0" if cell.constrained and cell.value == 0 else fmt.format(cell.value)
        if cell.starred:
            text += "*"
        if cell.constrained:
            text = f"{bold}{text}{bold}"
        return text

    def to_rows(self, bold: str = "**") -> list[list[str]]:
        return [[name] + [self.format_cell(name, c, bold) for c in cells] for name, cells in self.rows]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["parameter"] + self.columns)
            for name, cells in self.rows:
                w.writerow([name] + [repr(c.value) for c in cells])
            for name, cells in self.rows:
                w.writerow([f"se({name})"] + [repr(c.se) for c in cells])

    def to_text(self) -> str:
        body = [["", *self.columns]] + self.to_rows()
        widths = [max(len(r[i]) for r in body) for i in range(len(body[0]))]
        return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in body) + "\n"


def coefficient_table(fits: Sequence[FittedModel]) -> CoefficientTable:
    """Side-by-side parameter estimates with per-month alphas expanded.

    Tied (or zeroed) alphas are marked constrained; entries whose
    |estimate| / se exceeds 1.645 are starred.
    """
    if not fits:
        raise ValueError("no fits given")
    first = fits[0]
    for f in fits[1:]:
        if (f.origin, f.n_obs) != (first.origin, first.n_obs):
            raise DataError("all fits in a coefficient table must share one sample")

    rows: list[tuple[str, list[Cell]]] = []
    for block, offset in (("delta", 0), ("gamma", 12)):
        for m in range(1, 13):
            j = offset + m - 1
            rows.append((f"{block}_{m}", [Cell(f.beta[j], f.se_beta[j]) for f in fits]))

    alpha_cells: list[list[Cell]] = [[] for _ in range(12)]
    for f in fits:
        groups = groups_for(f.spec)
        if not groups:
            for m in range(12):
                alpha_cells[m].append(Cell(0.0, float("nan"), constrained=True))
            continue
        for j, g in enumerate(groups):
            col = 24 + j
            cell = Cell(f.beta[col], f.se_beta[col], constrained=len(g) > 1)
            for m in g:
                alpha_cells[m - 1].append(cell)
    rows += [(f"alpha_{m}", alpha_cells[m - 1]) for m in range(1, 13)]

    rows.append(("rho", [Cell(f.rho, f.se_rho) for f in fits]))
    rows.append(("sigma2", [Cell(f.sigma2, f.sigma2 * math.sqrt(2.0 / f.n_obs)) for f in fits]))
    diags = [diagnostics(f) for f in fits]
    rows.append(("R2", [Cell(d.r2) for d in diags]))
    rows.append(("DW", [Cell(d.dw) for d in diags]))
    rows.append(("Skew", [Cell(d.skew) for d in diags]))
    rows.append(("Kurt", [Cell(d.kurt) for d in diags]))
    return CoefficientTable([f.spec.label for f in fits], rows)
