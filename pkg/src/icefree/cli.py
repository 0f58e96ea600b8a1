"""Command-line front end.

Every command writes its artifacts under ``--out`` together with a
``manifest.json`` recording inputs, configuration, seed and output hashes.
CSV files carry the numbers; SVG files only render them.

Exit codes: 0 success, 1 usage or specification error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__, plots
from .benchcompare import (
    AnnualSeries,
    comparison_rows,
    crossing_year,
    load_fixture,
    load_projection_csv,
    september_series,
)
from .design import SUMMER, VARIANT_ORDER, ModelSpec
from .errors import DataError, IcefreeError, NumericError
from .estimate import FittedModel, coefficient_table, diagnostics, fit_mle
from .forecast import HORIZON_END, ForecastPath, interval_path, trend_path, zero_crossing
from .select import aic, bic, criteria_to_csv, criteria_to_text, rank_table
from .simulate import SimConfig, first_crossing, simulate_paths, summarize
from .timeseries import IngestConfig, MonthlySeries, MonthStamp, interpolate_missing, load_csv, subset

DATA_ENV = "ICEFREE_DATA_DIR"
EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3
SHADOW_WINDOW = (MonthStamp(2060, 1), MonthStamp(2062, 12))
PRE_SAMPLE_END = MonthStamp(2005, 12)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _stamp(text: str) -> MonthStamp:
    try:
        return MonthStamp.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM, got {text!r}") from exc


def _gammas(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad threshold list {text!r}") from exc
    if not vals or any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("thresholds must be a non-empty list of non-negative numbers")
    return vals


def _specs(text: str) -> list[ModelSpec]:
    if text.strip().lower() == "all":
        return [ModelSpec(v) for v in VARIANT_ORDER]
    try:
        return [ModelSpec.parse(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


# ---------------------------------------------------------------- plumbing


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(path.glob("*.csv")) if path.is_dir() else [path]:
        h.update(p.read_bytes())
    return h.hexdigest()


class Run:
    """Collects outputs of one command and writes the manifest."""

    def __init__(self, command: str, out: Path, config: dict, inputs: Sequence[Path], seed: int | None = None):
        self.command = command
        self.out = out
        self.config = config
        self.inputs = [Path(p) for p in inputs]
        self.seed = seed
        self.outputs: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def write_text(self, name: str, text: str) -> None:
        self.path(name).write_text(text, encoding="utf-8")

    def write_json(self, name: str, obj) -> None:
        self.write_text(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def write_rows(self, name: str, header: Sequence[str], rows) -> None:
        with open(self.path(name), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)

    def figure(self, stem: str, svg: str, header: Sequence[str], rows) -> None:
        self.write_text(f"{stem}.svg", svg)
        self.write_rows(f"{stem}.csv", header, rows)

    def finish(self) -> dict:
        config_text = json.dumps(self.config, sort_keys=True)
        manifest = {
            "command": self.command,
            "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in self.inputs],
            "config": self.config,
            "config_hash": hashlib.sha256(config_text.encode()).hexdigest(),
            "seed": self.seed,
            "version": __version__,
            "outputs": [
                {"path": name, "sha256": hashlib.sha256((self.out / name).read_bytes()).hexdigest()}
                for name in sorted(self.outputs)
            ],
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return manifest


def _ingest_config(path: Path, fmt: str) -> IngestConfig:
    if fmt == "nsidc":
        return IngestConfig.nsidc()
    if fmt == "plain":
        return IngestConfig()
    first = sorted(path.glob("*.csv"))[:1] if path.is_dir() else [path]
    if first and first[0].is_file():
        with open(first[0], encoding="utf-8") as fh:
            header = [h.strip() for h in fh.readline().split(",")]
        if "mo" in header and "month" not in header:
            return IngestConfig.nsidc()
    return IngestConfig()


def _data_path(args) -> Path:
    if args.data is not None:
        return Path(args.data)
    env = os.environ.get(DATA_ENV)
    if not env:
        raise UsageError(f"no data path given and {DATA_ENV} is not set")
    return Path(env)


def _load(args) -> tuple[Path, MonthlySeries]:
    """Read, interpolate and window the series. TIME stays anchored at the
    first month of the file unless ``--anchor`` says otherwise."""
    path = _data_path(args)
    series = interpolate_missing(load_csv(path, _ingest_config(path, args.format)))
    start = args.start or series.origin
    end = args.stop or series.end
    if (start, end) != (series.origin, series.end):
        series = subset(series, start, end)
    return path, series


def _base_config(args, series: MonthlySeries) -> dict:
    return {
        "format": args.format,
        "sample": f"{series.origin}..{series.end}",
        "anchor": str(args.anchor or series.anchor),
    }


def _decimal(stamps) -> np.ndarray:
    return np.array([s.year + (s.month - 1) / 12.0 for s in stamps])


def _num(v: float, digits: int = 6) -> str:
    return f"{v:.{digits}f}"


# ---------------------------------------------------------------- commands


def cmd_fit(args) -> dict:
    path, series = _load(args)
    specs = args.spec
    fits = [fit_mle(series, s, args.anchor) for s in specs]
    cfg = _base_config(args, series) | {"specs": [s.label for s in specs]}
    run = Run("fit", args.out, cfg, [path])

    table = coefficient_table(fits)
    table.to_csv(run.path("coefficients.csv"))
    text = table.to_text()
    run.write_text("coefficients.txt", text)
    print(text, end="")

    report = {}
    for fit in fits:
        diag = diagnostics(fit)
        report[fit.spec.label] = {
            "rho": fit.rho,
            "se_rho": fit.se_rho,
            "sigma2": fit.sigma2,
            "s": fit.s,
            "loglik": fit.loglik,
            "aic": aic(fit),
            "bic": bic(fit),
            "n_obs": fit.n_obs,
            "n_params": fit.n_params,
            "iterations": fit.n_iter,
            **diag.as_dict(),
        }
        stem = "" if len(fits) == 1 else "_" + fit.spec.label.replace("+", "")
        t = _decimal([fit.origin + i for i in range(fit.n_obs)])
        run.figure(
            f"residuals{stem}",
            plots.residuals_svg(f"Actual, fitted and residual ({fit.spec.label})", t, fit.y, fit.fitted, fit.eps_hat),
            ["time", "actual", "fitted", "residual"],
            [[_num(a, 4), _num(b), _num(c), _num(d)] for a, b, c, d in zip(t, fit.y, fit.fitted, fit.eps_hat)],
        )
        grid = np.linspace(diag.bin_edges[0], diag.bin_edges[-1], 201)
        mu, sd = float(fit.v_hat.mean()), float(fit.v_hat.std())
        gauss = np.exp(-0.5 * ((grid - mu) / sd) ** 2) / (sd * np.sqrt(2 * np.pi))
        width = np.diff(diag.bin_edges)
        density = diag.bin_mass / width
        run.figure(
            f"histogram{stem}",
            plots.histogram_svg(f"Innovation residuals ({fit.spec.label})", diag.bin_edges, density, grid, gauss),
            ["bin_lo", "bin_hi", "mass", "density", "gaussian_mass", "gaussian_density_at_center"],
            [
                [_num(lo), _num(hi), _num(m), _num(d), _num(g), _num(gd)]
                for lo, hi, m, d, g, gd in zip(
                    diag.bin_edges[:-1], diag.bin_edges[1:], diag.bin_mass, density,
                    diag.gaussian_mass, diag.gaussian_density,
                )
            ],
        )
    run.write_json("diagnostics.json", report)
    return run.finish()


def cmd_select(args) -> dict:
    path, series = _load(args)
    fits = [fit_mle(series, ModelSpec(v), args.anchor) for v in VARIANT_ORDER]
    rows = rank_table(fits)
    run = Run("select", args.out, _base_config(args, series), [path])
    criteria_to_csv(rows, run.path("criteria.csv"))
    text = criteria_to_text(rows)
    run.write_text("criteria.txt", text)
    run.write_json(
        "criteria.json",
        {r.variant.label: {"k": r.k, "aic": r.aic, "bic": r.bic, "rank_aic": r.rank_aic, "rank_bic": r.rank_bic} for r in rows},
    )
    print(text, end="")
    return run.finish()


def _trend_figure(run: Run, stem: str, title: str, fit: FittedModel, series: MonthlySeries,
                  path: ForecastPath, bands: bool) -> None:
    pos_years = [path.calendar_month(m) for m in range(1, 13)]
    n = min(p.size for p, _ in pos_years)
    idx = np.array([p[:n] for p, _ in pos_years])
    years = np.array([y[:n] for _, y in pos_years])
    t = years + (np.arange(12)[:, None]) / 12.0
    trends = path.shadow[idx]
    lo = path.lo[idx] if bands else None
    hi = path.hi[idx] if bands else None
    obs_t = _decimal(series.stamps())
    svg = plots.monthly_trends_svg(
        title, t, trends, float(_decimal([series.end])[0]), obs_t, series.extent,
        series.calendar_months(), lo, hi,
    )
    header = ["year", "month", "trend"] + (["lo", "hi"] if bands else [])
    rows = []
    for i, stamp in enumerate(path.stamps()):
        row = [stamp.year, stamp.month, _num(path.shadow[i])]
        if bands:
            row += [_num(path.lo[i]), _num(path.hi[i])]
        rows.append(row)
    run.figure(stem, svg, header, rows)


def _benchmark_figure(run: Run, stem: str, series: MonthlySeries, full: ForecastPath,
                      pre: ForecastPath | None, models: Sequence[AnnualSeries]) -> None:
    pos = np.flatnonzero(series.calendar_months() == 9)
    hist_years = np.array([(series.origin + int(p)).year for p in pos])
    hist = series.extent[pos]
    sep_pos, sep_years = full.calendar_month(9)
    stat = full.censored[sep_pos]
    lo, hi = full.lo_censored[sep_pos], full.hi_censored[sep_pos]
    pre_years = pre_vals = None
    if pre is not None:
        pp, pre_years = pre.calendar_month(9)
        pre_vals = pre.censored[pp]
    svg = plots.benchmark_svg(
        "September extent: observed, statistical and climate-model projections",
        hist_years, hist, sep_years, stat, lo, hi,
        [(m.label, m.years, m.values) for m in models], pre_vals, pre_years,
    )
    header = ["series", "year", "value"]
    rows = [["observed", int(y), _num(v, 4)] for y, v in zip(hist_years, hist)]
    rows += [["statistical_full", int(y), _num(v)] for y, v in zip(sep_years, stat)]
    rows += [["statistical_full_lo", int(y), _num(v)] for y, v in zip(sep_years, lo)]
    rows += [["statistical_full_hi", int(y), _num(v)] for y, v in zip(sep_years, hi)]
    if pre is not None:
        rows += [["statistical_pre", int(y), _num(v)] for y, v in zip(pre_years, pre_vals)]
    for m in models:
        rows += [[m.label, int(y), _num(v, 4)] for y, v in zip(m.years, m.values)]
    run.figure(stem, svg, header, rows)


def _crossing_records(fit: FittedModel, gammas: Sequence[float], end: MonthStamp) -> list[dict]:
    out = []
    for g in gammas:
        c = zero_crossing(fit, 9, g, end=end)
        out.append({
            "gamma": g,
            "year": None if c is None else c.year,
            "year_fraction": None if c is None else c.year_fraction,
        })
    return out


def _pre_fit(args, series_full: MonthlySeries, spec: ModelSpec) -> FittedModel | None:
    if series_full.end <= PRE_SAMPLE_END or series_full.origin >= PRE_SAMPLE_END:
        return None
    return fit_mle(subset(series_full, series_full.origin, PRE_SAMPLE_END), spec, args.anchor)


def cmd_forecast(args) -> dict:
    path, series = _load(args)
    spec = args.spec[0]
    fit = fit_mle(series, spec, args.anchor)
    cfg = _base_config(args, series) | {"spec": spec.label, "end": str(args.end), "band": args.band,
                                        "gamma": list(args.gamma)}
    run = Run("forecast", args.out, cfg, [path])

    full = interval_path(fit, series.origin, args.end, args.band)
    full.to_csv(run.path("forecast_path.csv"))
    crossings = _crossing_records(fit, args.gamma, args.end)
    run.write_json("crossings.json", {"spec": spec.label, "september": crossings})
    for c in crossings:
        print(f"September gamma={c['gamma']:g} first crossing: {c['year'] or 'none before ' + str(args.end)}")

    in_sample = trend_path(fit, series.origin, series.end)
    _trend_figure(run, "trends_in_sample", f"Monthly trends, {spec.label}", fit, series, in_sample, False)
    _trend_figure(run, "trends_forecast", f"Monthly trends extrapolated, {spec.label}", fit, series,
                  trend_path(fit, series.origin, args.end), False)
    if args.band > 0:
        _trend_figure(run, "trends_bands", f"Monthly trends with +/-{args.band:g} s.e. bands, {spec.label}",
                      fit, series, full, True)

    w0, w1 = SHADOW_WINDOW
    if w0 > series.end and w1 <= args.end:
        win = interval_path(fit, w0, w1, args.band)
        t = _decimal(win.stamps())
        run.figure(
            "shadow_window",
            plots.shadow_window_svg(f"Shadow extent {w0.year}-{w1.year}", t, win.shadow, win.lo, win.hi),
            ["year", "month", "shadow", "lo", "hi"],
            [[s.year, s.month, _num(a), _num(b), _num(c)] for s, a, b, c in zip(win.stamps(), win.shadow, win.lo, win.hi)],
        )

    pre = _pre_fit(args, series, spec)
    pre_path = None if pre is None else trend_path(pre, series.origin, args.end)
    _benchmark_figure(run, "benchmark", series, full, pre_path, load_fixture())
    return run.finish()


def cmd_simulate(args) -> dict:
    path, series = _load(args)
    spec = args.spec[0]
    fit = fit_mle(series, spec, args.anchor)
    sim = SimConfig(n_paths=args.n, end=args.end, seed=args.seed, thresholds=args.gamma,
                    draw_parameters=not args.fixed_parameters)
    cfg = _base_config(args, series) | {"spec": spec.label, "simulation": sim.as_dict(),
                                        "conditional": args.conditional}
    run = Run("simulate", args.out, cfg, [path], seed=args.seed)
    ens = simulate_paths(fit, sim, workers=args.workers)

    try:
        rcp85 = next(m for m in load_fixture() if m.label == "RCP8.5")
    except StopIteration:
        rcp85 = None
    summary = {}
    for g in sim.thresholds:
        sep = first_crossing(ens, (9,), g)
        summer = first_crossing(ens, SUMMER, g)
        tag = f"{g:g}"
        sep.to_csv(run.path(f"september_gamma{tag}.csv"))
        summer.to_csv(run.path(f"summer_gamma{tag}.csv"))
        summary[tag] = {"september": summarize(sep).as_dict(), "summer": summarize(summer).as_dict()}

        sep_p = sep.conditional() if args.conditional else sep.mass
        sum_p = summer.conditional() if args.conditional else summer.mass
        marker = crossing_year(rcp85, g) if rcp85 is not None else None
        run.figure(
            f"first_ice_free_gamma{tag}",
            plots.event_distributions_svg(
                f"First year with extent at or below {g:g} (n={sim.n_paths})",
                [("September", sep.years, sep_p, plots.SEPT_RED, None),
                 ("Aug-Oct", summer.years, sum_p, "black", None)],
                marker_year=marker,
            ),
            ["year", "september", "summer"],
            [[int(y), _num(a), _num(b)] for y, a, b in zip(sep.years, sep_p, sum_p)],
        )
        s = summary[tag]["september"]
        print(f"gamma={tag}: September median {s['median_year']}, "
              f"95% range {s['q2.5']}-{s['q97.5']}, never {s['never']:.4f}")
    run.write_json("summary.json", summary)
    return run.finish()


def cmd_compare(args) -> dict:
    path, series = _load(args)
    spec = args.spec[0]
    if args.projections is not None:
        models = load_projection_csv(args.projections)
        inputs = [path, Path(args.projections)]
    else:
        models = load_fixture()
        inputs = [path]
    gamma = args.gamma[0]
    fit = fit_mle(series, spec, args.anchor)
    cfg = _base_config(args, series) | {"spec": spec.label, "gamma": gamma, "end": str(args.end),
                                        "band": args.band, "projections": "fixture" if args.projections is None else "file"}
    run = Run("compare", args.out, cfg, inputs)

    full = interval_path(fit, series.origin, args.end, args.band)
    pre = _pre_fit(args, series, spec)
    pre_path = None if pre is None else trend_path(pre, series.origin, args.end)

    table = [[m.label, crossing_year(m, gamma) or "none"] for m in models]
    stat_full = crossing_year(september_series(full, "statistical_full"), gamma)
    table.append(["statistical_full", stat_full or "none"])
    if pre_path is not None:
        table.append(["statistical_pre", crossing_year(september_series(pre_path, "statistical_pre"), gamma) or "none"])
    run.write_rows("crossings.csv", ["series", "crossing_year"], table)
    for label, year in table:
        print(f"{label}: {year}")

    stat_future = interval_path(fit, max(series.end + 1, MonthStamp(2006, 1)), args.end, args.band)
    rows = comparison_rows(stat_future, models, gamma)
    run.write_rows(
        "divergence.csv",
        ["label", "crossing_year", "divergence_L1", "divergence_L2", "divergence_Linf"],
        [[r["label"], r["crossing_year"] or "none", _num(r["divergence_L1"]), _num(r["divergence_L2"]),
          _num(r["divergence_Linf"])] for r in rows],
    )
    _benchmark_figure(run, "benchmark", series, full, pre_path, models)
    return run.finish()


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="icefree", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, spec_default="seqnseq"):
        sp.add_argument("data", nargs="?", default=None,
                        help=f"monthly CSV file or directory of CSVs (default: ${DATA_ENV})")
        sp.add_argument("--format", choices=("auto", "plain", "nsidc"), default="auto",
                        help="input layout (default: detect from the header)")
        sp.add_argument("--from", dest="start", type=_stamp, default=None, metavar="YYYY-MM",
                        help="first month of the estimation window")
        sp.add_argument("--to", dest="stop", type=_stamp, default=None, metavar="YYYY-MM",
                        help="last month of the estimation window")
        sp.add_argument("--anchor", type=_stamp, default=None, metavar="YYYY-MM",
                        help="month with TIME = 1 (default: first month of the file)")
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
        if spec_default is not None:
            sp.add_argument("--spec", type=_specs, default=_specs(spec_default),
                            help="variant name, comma list, or 'all'")

    fit = sub.add_parser("fit", help="estimate coefficients and residual diagnostics")
    common(fit)
    fit.set_defaults(func=cmd_fit)

    sel = sub.add_parser("select", help="rank the six variants by AIC and BIC")
    common(sel, spec_default=None)
    sel.set_defaults(func=cmd_select)

    fc = sub.add_parser("forecast", help="trend paths, bands and crossing dates")
    common(fc)
    fc.add_argument("--end", type=_stamp, default=HORIZON_END, metavar="YYYY-MM", help="last forecast month")
    fc.add_argument("--band", type=float, default=2.0, help="band half-width in forecast s.e. (0 disables)")
    fc.add_argument("--gamma", type=_gammas, default=(0.0, 1.0), help="comma list of thresholds")
    fc.set_defaults(func=cmd_forecast)

    sim = sub.add_parser("simulate", help="distributions of the first ice-free year")
    common(sim)
    sim.add_argument("--n", type=int, default=10_000, help="number of simulated paths")
    sim.add_argument("--seed", type=int, default=SimConfig.seed, help="base random seed")
    sim.add_argument("--gamma", type=_gammas, default=(0.0, 1.0, 2.0), help="comma list of thresholds")
    sim.add_argument("--end", type=_stamp, default=HORIZON_END, metavar="YYYY-MM", help="last simulated month")
    sim.add_argument("--workers", type=int, default=1, help="threads; results do not depend on it")
    sim.add_argument("--fixed-parameters", action="store_true",
                     help="hold beta and rho at their estimates")
    sim.add_argument("--conditional", action="store_true",
                     help="plot distributions conditional on crossing before the horizon")
    sim.set_defaults(func=cmd_simulate)

    cmp_ = sub.add_parser("compare", help="compare with climate-model projection series")
    common(cmp_)
    cmp_.add_argument("projections", nargs="?", default=None,
                      help="CSV with a year column and one column per scenario (default: bundled fixture)")
    cmp_.add_argument("--gamma", type=_gammas, default=(1.0,), help="comma list of thresholds")
    cmp_.add_argument("--end", type=_stamp, default=HORIZON_END, metavar="YYYY-MM", help="last trend month")
    cmp_.add_argument("--band", type=float, default=2.0, help="band half-width in forecast s.e. for the figure")
    cmp_.set_defaults(func=cmd_compare)
    return p


def _guarded(func: Callable, args) -> int:
    try:
        func(args)
    except UsageError as exc:
        print(f"icefree: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"icefree: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"icefree: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except IcefreeError as exc:
        print(f"icefree: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"icefree: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "band", 0) < 0:
        print("icefree: error: --band must be non-negative", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "n", 1) < 1:
        print("icefree: error: --n must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    return _guarded(args.func, args)


if __name__ == "__main__":
    sys.exit(main())
