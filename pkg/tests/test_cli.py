from __future__ import annotations

import csv
import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from conftest import ORIGIN, write_series_csv
from icefree.cli import DATA_ENV, main


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _check_manifest(out: Path, command: str) -> dict:
    m = json.loads((out / "manifest.json").read_text())
    assert m["command"] == command
    for entry in m["outputs"]:
        assert (out / entry["path"]).exists()
    return m


def _check_figures(out: Path) -> None:
    svgs = sorted(out.glob("*.svg"))
    assert svgs
    for svg in svgs:
        root = ET.parse(svg).getroot()
        assert root.tag.endswith("svg")
        assert svg.with_suffix(".csv").exists(), f"{svg.name} lacks a sibling CSV"


def test_fit_writes_artifacts(tmp_path, synthetic_csv):
    out = tmp_path / "fit"
    assert main(["fit", str(synthetic_csv), "--spec", "seqnseq", "--out", str(out)]) == 0
    _check_manifest(out, "fit")
    _check_figures(out)
    diag = json.loads((out / "diagnostics.json").read_text())["Seq+NSeq"]
    assert 0.6 < diag["rho"] < 0.8
    assert {"r2", "dw", "skew", "kurt", "aic", "bic"} <= set(diag)
    assert (out / "residuals.svg").exists() and (out / "histogram.svg").exists()


def test_fit_linear_model_table(tmp_path, synthetic_csv):
    out = tmp_path / "fit0"
    assert main(["fit", str(synthetic_csv), "--spec", "all0", "--out", str(out)]) == 0
    rows = {r["parameter"]: r for r in _read_csv(out / "coefficients.csv")}
    est = [k for k in rows if not k.startswith("se(") and k[:5] in ("delta", "gamma")]
    assert len(est) == 24
    assert all(float(rows[f"alpha_{m}"]["ALL0"]) == 0.0 for m in range(1, 13))


def test_fit_all_variants(tmp_path, synthetic_csv):
    out = tmp_path / "all"
    assert main(["fit", str(synthetic_csv), "--spec", "all", "--out", str(out)]) == 0
    header = (out / "coefficients.csv").read_text().splitlines()[0]
    assert header == "parameter,NONE,Seq,NSeq,Seq+NSeq,ALLeq,ALL0"


def test_pre_sample_fit(tmp_path, synthetic_csv):
    out = tmp_path / "pre"
    assert main(["fit", str(synthetic_csv), "--to", "2005-12", "--out", str(out)]) == 0
    m = _check_manifest(out, "fit")
    assert m["config"]["sample"] == "1978-11..2005-12"
    assert m["config"]["anchor"] == "1978-11"


def test_select(tmp_path, synthetic_csv, capsys):
    out = tmp_path / "sel"
    assert main(["select", str(synthetic_csv), "--out", str(out)]) == 0
    rows = _read_csv(out / "criteria.csv")
    assert [r["variant"] for r in rows] == ["NONE", "Seq", "NSeq", "Seq+NSeq", "ALLeq", "ALL0"]
    assert "AIC" in capsys.readouterr().out


def test_select_pure_noise_prefers_linear(tmp_path):
    rng = np.random.default_rng(3)
    data = write_series_csv(tmp_path / "noise.csv", ORIGIN, 8 + rng.normal(0, 0.3, 72))
    out = tmp_path / "o"
    assert main(["select", str(data), "--out", str(out)]) == 0
    top = next(r for r in _read_csv(out / "criteria.csv") if r["rank_bic"] == "1")
    assert top["variant"] == "ALL0"


def test_forecast(tmp_path, synthetic_csv, capsys):
    out = tmp_path / "fc"
    assert main(["forecast", str(synthetic_csv), "--out", str(out)]) == 0
    _check_manifest(out, "forecast")
    _check_figures(out)
    text = capsys.readouterr().out
    assert "September gamma=0 first crossing:" in text
    cross = json.loads((out / "crossings.json").read_text())["september"]
    assert [c["gamma"] for c in cross] == [0.0, 1.0]
    header = (out / "forecast_path.csv").read_text().splitlines()[0]
    assert "lo_censored" in header
    for stem in ("trends_in_sample", "trends_forecast", "trends_bands", "shadow_window", "benchmark"):
        assert (out / f"{stem}.svg").exists()


def test_forecast_without_band(tmp_path, synthetic_csv):
    out = tmp_path / "fc0"
    assert main(["forecast", str(synthetic_csv), "--band", "0", "--out", str(out)]) == 0
    header = (out / "forecast_path.csv").read_text().splitlines()[0]
    assert header == "year,month,shadow,censored,se"
    assert not (out / "trends_bands.svg").exists()


def test_simulate_is_reproducible(tmp_path, synthetic_csv):
    args = ["simulate", str(synthetic_csv), "--n", "500", "--seed", "42"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    m = _check_manifest(a, "simulate")
    assert m["seed"] == 42 and m["config"]["simulation"]["n_paths"] == 500
    _check_figures(a)
    summary = json.loads((a / "summary.json").read_text())
    assert set(summary) == {"0", "1", "2"}


def test_simulate_single_path(tmp_path, synthetic_csv):
    out = tmp_path / "one"
    assert main(["simulate", str(synthetic_csv), "--n", "1", "--seed", "5", "--gamma", "1", "--out", str(out)]) == 0
    rows = _read_csv(out / "september_gamma1.csv")
    masses = [float(r["mass"]) for r in rows]
    assert sorted(set(masses)) in ([0.0, 1.0], [0.0])


def test_compare_with_fixture(tmp_path, synthetic_csv, capsys):
    out = tmp_path / "cmp"
    assert main(["compare", str(synthetic_csv), "--out", str(out)]) == 0
    table = {r["series"]: r["crossing_year"] for r in _read_csv(out / "crossings.csv")}
    assert table["RCP8.5"] == "2068" and table["RCP6.0"] == "2089" and table["RCP4.5"] == "none"
    assert {"statistical_full", "statistical_pre"} <= set(table)
    _check_figures(out)
    assert "RCP8.5: 2068" in capsys.readouterr().out


def test_compare_empty_projection_file(tmp_path, synthetic_csv):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["compare", str(synthetic_csv), str(empty), "--out", str(tmp_path / "o")]) == 2


def test_missing_data_file_exit_code(tmp_path):
    assert main(["select", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o")]) == 2


def test_numeric_failure_exit_code(tmp_path):
    # constant data: zero innovation variance leaves the likelihood unbounded
    data = write_series_csv(tmp_path / "flat.csv", ORIGIN, np.full(60, 5.0))
    assert main(["fit", str(data), "--spec", "all0", "--out", str(tmp_path / "o")]) == 3


def test_usage_errors(tmp_path, synthetic_csv, monkeypatch):
    with pytest.raises(SystemExit) as info:
        main(["fit", str(synthetic_csv), "--from", "2000/xx"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["fit", str(synthetic_csv), "--spec", "cubic"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["explode"])
    assert info.value.code == 1
    monkeypatch.delenv(DATA_ENV, raising=False)
    assert main(["fit", "--out", str(tmp_path / "o")]) == 1
    assert main(["forecast", str(synthetic_csv), "--band", "-1"]) == 1


def test_window_outside_data_is_data_error(tmp_path, synthetic_csv):
    assert main(["fit", str(synthetic_csv), "--from", "1970-01", "--out", str(tmp_path / "o")]) == 2


def test_data_path_from_environment(tmp_path, synthetic_csv, monkeypatch):
    monkeypatch.setenv(DATA_ENV, str(synthetic_csv))
    out = tmp_path / "env"
    assert main(["fit", "--out", str(out)]) == 0
    assert (out / "coefficients.csv").exists()


def test_nsidc_layout_with_missing_months(tmp_path, synthetic_series):
    d = tmp_path / "nsidc"
    d.mkdir()
    stamps = synthetic_series.stamps()
    holes = {"1987-12", "1988-01"}
    for m in range(1, 13):
        with open(d / f"N_{m:02d}_extent_v3.0.csv", "w") as fh:
            fh.write("year, mo, data-type, region, extent, area\n")
            for s, v in zip(stamps, synthetic_series.extent):
                if s.month != m:
                    continue
                value = -9999 if str(s) in holes else round(float(v), 2)
                fh.write(f"{s.year}, {s.month}, Goddard, N, {value}, {value}\n")
    out = tmp_path / "o"
    assert main(["fit", str(d), "--out", str(out)]) == 0
    assert json.loads((out / "diagnostics.json").read_text())["Seq+NSeq"]["n_obs"] == 492
