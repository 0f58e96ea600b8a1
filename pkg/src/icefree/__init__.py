"""Seasonal trend models for monthly Arctic sea ice extent with AR(1)
errors, shadow-ice censoring and simulated first ice-free years."""

from __future__ import annotations

__version__ = "0.1.0"

from .design import ModelSpec, Variant
from .errors import DataError, IcefreeError, NumericError, SpecificationError
from .estimate import FittedModel, fit_mle
from .forecast import interval_path, trend_path, zero_crossing
from .simulate import SimConfig, first_crossing, simulate_paths, summarize
from .timeseries import MonthlySeries, MonthStamp, interpolate_missing, load_csv, subset

__all__ = [
    "DataError",
    "FittedModel",
    "IcefreeError",
    "ModelSpec",
    "MonthStamp",
    "MonthlySeries",
    "NumericError",
    "SimConfig",
    "SpecificationError",
    "Variant",
    "first_crossing",
    "fit_mle",
    "interpolate_missing",
    "interval_path",
    "load_csv",
    "simulate_paths",
    "subset",
    "summarize",
    "trend_path",
    "zero_crossing",
]
