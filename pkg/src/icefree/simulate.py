"""Stochastic simulation of future extent paths and first-crossing events.

Each path draws its own trend coefficients from the estimated sampling
distribution, its own AR coefficient, and bootstraps innovations from the
in-sample innovation residuals. The AR recursion runs on the shadow scale
starting from the last in-sample residual; censoring at zero is applied to
the outputs only.

Every path owns independent counter-based random streams derived from
``(seed, path index, component)``, so results do not depend on chunking or
on how many worker threads are used.
"""

from __future__ import annotations

import csv
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .design import stamp_regressors
from .errors import CovarianceError, RangeError
from .estimate import RHO_BOUND, FittedModel
from .forecast import HORIZON_END
from .timeseries import MonthStamp, month_range

_BETA, _RHO, _INNOV = 0, 1, 2
CHUNK = 1024


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 10_000
    end: MonthStamp = HORIZON_END
    seed: int = 20191031
    thresholds: tuple[float, ...] = (0.0, 1.0, 2.0)
    draw_parameters: bool = True
    bootstrap_innovations: bool = True

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if any(g < 0 for g in self.thresholds):
            raise ValueError("thresholds must be non-negative")
        object.__setattr__(self, "thresholds", tuple(float(g) for g in self.thresholds))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["end"] = str(self.end)
        return d


@dataclass(frozen=True)
class PathEnsemble:
    """Censored simulated extents, shape (n_paths, n_months)."""

    start: MonthStamp
    values: np.ndarray
    config: SimConfig
    provenance: dict = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def horizon(self) -> int:
        return self.values.shape[1]

    @property
    def end(self) -> MonthStamp:
        return self.start + (self.horizon - 1)

    def stamps(self) -> list[MonthStamp]:
        return month_range(self.start, self.end)

    def column(self, stamp: MonthStamp) -> np.ndarray:
        k = stamp - self.start
        if not 0 <= k < self.horizon:
            raise RangeError(f"{stamp} outside ensemble range {self.start}..{self.end}")
        return self.values[:, k]


def _path_generator(seed: int, path: int, component: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(path, component))
    return np.random.Generator(np.random.Philox(ss))


def mvn_factor(cov: np.ndarray) -> np.ndarray:
    """Matrix L with L @ L.T == cov, clipping round-off negative eigenvalues."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    w, U = np.linalg.eigh(cov)
    if w.min() < -1e-8 * w.max():
        raise CovarianceError(
            f"coefficient covariance is not positive semi-definite "
            f"(eigenvalue {w.min():.3g} vs largest {w.max():.3g})"
        )
    warnings.warn("clipping negative eigenvalues of the coefficient covariance", RuntimeWarning)
    return U * np.sqrt(np.clip(w, 0.0, None))


def _draw_rho(gen: np.random.Generator, rho: float, se: float) -> float:
    while True:
        r = rho + se * gen.standard_normal()
        if -RHO_BOUND < r < RHO_BOUND:
            return float(r)


def _simulate_chunk(fit, cfg, Xf, L, paths, out):
    p = fit.beta.size
    H = Xf.shape[0]
    n = paths.size
    betas = np.tile(fit.beta, (n, 1))
    rhos = np.full(n, fit.rho)
    innov = np.zeros((n, H))
    for row, i in enumerate(paths):
        i = int(i)
        if cfg.draw_parameters:
            z = _path_generator(cfg.seed, i, _BETA).standard_normal(p)
            betas[row] += L @ z
            if np.isfinite(fit.se_rho):
                rhos[row] = _draw_rho(_path_generator(cfg.seed, i, _RHO), fit.rho, fit.se_rho)
        if cfg.bootstrap_innovations:
            idx = _path_generator(cfg.seed, i, _INNOV).integers(0, fit.v_hat.size, size=H)
            innov[row] = fit.v_hat[idx]

    shadow = betas @ Xf.T
    eps = np.full(n, fit.eps_hat[-1])
    for h in range(H):
        eps = rhos * eps + innov[:, h]
        shadow[:, h] += eps
    np.maximum(shadow, 0.0, out=shadow)
    out[paths] = shadow


def simulate_paths(fit: FittedModel, cfg: SimConfig | None = None, *, workers: int = 1) -> PathEnsemble:
    """Simulate ``cfg.n_paths`` censored paths from the month after the
    sample through ``cfg.end``.

    Parameters
    ----------
    fit : FittedModel
        Source of beta-hat, its covariance, rho-hat and its standard error,
        innovation residuals and the last in-sample residual.
    cfg : SimConfig
        ``draw_parameters=False`` fixes beta and rho at their estimates;
        ``bootstrap_innovations=False`` sets all future innovations to zero.
    workers : int
        Threads used over path chunks. Results are identical for any value.
    """
    cfg = cfg or SimConfig()
    start = fit.end + 1
    if cfg.end < start:
        raise RangeError(f"simulation end {cfg.end} precedes first forecast month {start}")
    Xf = stamp_regressors(start, cfg.end, fit.anchor, fit.spec)
    L = mvn_factor(fit.cov_beta) if cfg.draw_parameters else None

    out = np.empty((cfg.n_paths, Xf.shape[0]))
    chunks = [np.arange(a, min(a + CHUNK, cfg.n_paths)) for a in range(0, cfg.n_paths, CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda c: _simulate_chunk(fit, cfg, Xf, L, c, out), chunks))
    else:
        for c in chunks:
            _simulate_chunk(fit, cfg, Xf, L, c, out)

    provenance = {
        "spec": fit.spec.label,
        "sample": f"{fit.origin}..{fit.end}",
        "anchor": str(fit.anchor),
        "seed": cfg.seed,
        "config": cfg.as_dict(),
    }
    return PathEnsemble(start, out, cfg, provenance)


@dataclass(frozen=True)
class EventDistribution:
    """Distribution of the first calendar year in which every month in
    ``months`` is at or below ``gamma``. ``path_years`` holds each path's
    year, with ``inf`` for paths that never cross before the horizon."""

    months: tuple[int, ...]
    gamma: float
    years: np.ndarray
    mass: np.ndarray
    never: float
    path_years: np.ndarray = field(repr=False)

    def as_dict(self) -> dict[int, float]:
        return {int(y): float(m) for y, m in zip(self.years, self.mass)}

    def cdf(self, year: int) -> float:
        if self.path_years.size:
            # integer counts keep cdfs of different thresholds exactly ordered
            return np.count_nonzero(self.path_years <= year) / self.path_years.size
        return float(self.mass[self.years <= year].sum())

    def conditional(self) -> np.ndarray:
        """Masses renormalized over paths that do cross."""
        total = 1.0 - self.never
        return self.mass / total if total > 0 else np.zeros_like(self.mass)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["year", "mass", "cdf"])
            cum = 0.0
            for y, m in zip(self.years, self.mass):
                cum += m
                w.writerow([int(y), f"{m:.6f}", f"{cum:.6f}"])
            w.writerow(["never", f"{self.never:.6f}", "1.000000"])


def first_crossing(ensemble: PathEnsemble, months: Iterable[int], gamma: float) -> EventDistribution:
    """First year in which all ``months`` have simulated extent <= ``gamma``.

    Only years in which every listed month lies inside the ensemble range
    are considered.
    """
    months = tuple(sorted(set(int(m) for m in months)))
    if not months or any(not 1 <= m <= 12 for m in months):
        raise ValueError("months must be a non-empty subset of 1..12")
    first_year = ensemble.start.year + (1 if any(m < ensemble.start.month for m in months) else 0)
    last_year = ensemble.end.year - (1 if any(m > ensemble.end.month for m in months) else 0)
    years = np.arange(first_year, last_year + 1)

    event = np.ones((ensemble.n_paths, years.size), dtype=bool)
    for m in months:
        cols = np.array([MonthStamp(int(y), m) - ensemble.start for y in years], dtype=int)
        event &= ensemble.values[:, cols] <= gamma

    hit = event.any(axis=1)
    path_years = np.full(ensemble.n_paths, np.inf)
    path_years[hit] = years[np.argmax(event[hit], axis=1)]

    counts = np.array([(path_years == y).sum() for y in years], dtype=float)
    n = float(ensemble.n_paths)
    return EventDistribution(
        months=months,
        gamma=float(gamma),
        years=years,
        mass=counts / n,
        never=float((~hit).sum()) / n,
        path_years=path_years,
    )


def event_probability(ensemble: PathEnsemble, stamp: MonthStamp, gamma: float) -> float:
    """Share of paths with extent at or below ``gamma`` in month ``stamp``."""
    return float(np.mean(ensemble.column(stamp) <= gamma))


@dataclass(frozen=True)
class EventSummary:
    mean_year: float | None
    median_year: int | None
    q025: int | None
    q975: int | None
    decade_masses: dict[int, float]
    never: float

    @property
    def median_label(self) -> str:
        return "beyond horizon" if self.median_year is None else str(self.median_year)

    def as_dict(self) -> dict:
        return {
            "mean_year": self.mean_year,
            "median_year": self.median_year if self.median_year is not None else "beyond horizon",
            "q2.5": self.q025,
            "q97.5": self.q975,
            "decade_masses": {f"{k}s": v for k, v in self.decade_masses.items()},
            "never": self.never,
        }


def _quantile(dist: EventDistribution, q: float) -> int | None:
    cum = np.cumsum(dist.mass)
    # round-off guard so that e.g. a 0.5 cumulative mass counts as reaching 0.5
    idx = np.flatnonzero(cum >= q - 1e-12)
    return int(dist.years[idx[0]]) if idx.size else None


def summarize(dist: EventDistribution) -> EventSummary:
    """Mean (over crossing paths), quantiles with the never bucket treated as
    +infinity, and masses aggregated by decade."""
    crossed = 1.0 - dist.never
    mean = float((dist.years * dist.mass).sum() / crossed) if crossed > 0 else None
    decades: dict[int, float] = {}
    for y, m in zip(dist.years, dist.mass):
        key = int(y) // 10 * 10
        decades[key] = decades.get(key, 0.0) + float(m)
    return EventSummary(
        mean_year=mean,
        median_year=_quantile(dist, 0.5),
        q025=_quantile(dist, 0.025),
        q975=_quantile(dist, 0.975),
        decade_masses=decades,
        never=dist.never,
    )
