"""Weekly simple-average trend, residuals, imputation and standardization.

A week of 5-minute samples has ``SLOTS_PER_WEEK = 2016`` slots. Slot 0 is
the first timestamp of the dataset; no weekday anchoring is attempted.
Missing samples are ``NaN``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

SLOTS_PER_DAY = 288
SLOTS_PER_WEEK = 7 * SLOTS_PER_DAY


class MissingDataError(ValueError):
    pass


@dataclass(frozen=True)
class StationSeries:
    """Flow samples of one station.

    ``first_slot`` is the weekly slot of ``values[0]``; it is 0 for any
    series cut on a week boundary of the dataset.
    """

    station_id: str
    values: np.ndarray
    start: np.datetime64 | None = None
    first_slot: int = 0

    @property
    def n_weeks(self) -> int:
        return len(self.values) // SLOTS_PER_WEEK

    @property
    def missing_fraction(self) -> float:
        return float(np.isnan(self.values).mean()) if len(self.values) else 0.0


@dataclass(frozen=True)
class TrendProfile:
    values: np.ndarray
    weeks: int

    def __post_init__(self):
        if self.values.shape != (SLOTS_PER_WEEK,):
            raise ValueError(f"trend must have {SLOTS_PER_WEEK} slots, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("trend contains non-finite values")

    def tile(self, length: int, first_slot: int = 0) -> np.ndarray:
        """Trend value for each of ``length`` consecutive samples."""
        return self.values[(first_slot + np.arange(length)) % SLOTS_PER_WEEK]

    def to_csv(self, path, header: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(f"# {header}\n")
            w = csv.writer(fh)
            w.writerow(["slot", "value"])
            for k, v in enumerate(self.values):
                w.writerow([k, repr(float(v))])

    @classmethod
    def from_csv(cls, path, weeks: int = 0) -> "TrendProfile":
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        if not rows or rows[0] != ["slot", "value"]:
            raise ValueError(f"{path}: expected header slot,value")
        return cls(np.array([float(r[1]) for r in rows[1:]]), weeks)


def _check_slot(first_slot: int) -> None:
    if not (isinstance(first_slot, (int, np.integer)) and 0 <= first_slot < SLOTS_PER_WEEK):
        raise ValueError(f"series start is not aligned to a weekly slot: {first_slot!r}")


def compute_trend(series: StationSeries, weeks: int | None = None) -> TrendProfile:
    """Slot-wise mean over the last ``weeks`` complete weeks (all weeks if None)."""
    if series.first_slot != 0:
        raise ValueError(f"series {series.station_id!r} does not start on a week boundary")
    available = series.n_weeks
    if weeks is None:
        weeks = available
    if weeks < 1 or weeks > available:
        raise ValueError(f"need {weeks} complete weeks, series {series.station_id!r} has {available}")
    block = series.values[(available - weeks) * SLOTS_PER_WEEK : available * SLOTS_PER_WEEK]
    block = block.reshape(weeks, SLOTS_PER_WEEK)
    if np.isnan(block).any():
        raise MissingDataError("impute missing samples before computing the trend")
    return TrendProfile(block.mean(axis=0), weeks)


def compute_residual(series: StationSeries, trend: TrendProfile) -> StationSeries:
    """Subtract the trend value of each sample's weekly slot."""
    _check_slot(series.first_slot)
    resid = series.values - trend.tile(len(series.values), series.first_slot)
    return replace(series, values=resid)


def impute_missing(series: StationSeries, max_missing: float = 0.01) -> StationSeries:
    """Fill each missing sample with the mean of present samples in its slot."""
    _check_slot(series.first_slot)
    values = series.values
    missing = np.isnan(values)
    frac = float(missing.mean()) if len(values) else 0.0
    if frac > max_missing:
        raise MissingDataError(
            f"station {series.station_id!r} is {frac:.2%} missing, above the {max_missing:.2%} cap"
        )
    if not missing.any():
        return series
    slots = (series.first_slot + np.arange(len(values))) % SLOTS_PER_WEEK
    present = ~missing
    sums = np.bincount(slots[present], weights=values[present], minlength=SLOTS_PER_WEEK)
    counts = np.bincount(slots[present], minlength=SLOTS_PER_WEEK)
    need = np.unique(slots[missing])
    empty = need[counts[need] == 0]
    if len(empty):
        raise MissingDataError(
            f"station {series.station_id!r} has no present samples in weekly slot(s) {empty[:5].tolist()}"
        )
    out = values.copy()
    out[missing] = sums[slots[missing]] / counts[slots[missing]]
    return replace(series, values=out)


class Standardizer(BaseEstimator, TransformerMixin):
    """Zero-mean, unit-variance scaling with the population std.

    A std below ``1e-12`` is replaced by 1 so constant input maps to zeros.
    """

    def fit(self, X, y=None):
        values = np.asarray(X, dtype=np.float64).ravel()
        if values.size == 0:
            raise ValueError("cannot fit a standardizer on empty input")
        # a constant series keeps its exact value as the mean
        self.mean_ = float(values[0]) if np.all(values == values[0]) else float(values.mean())
        std = float(values.std())
        self.std_ = std if std >= 1e-12 else 1.0
        return self

    def transform(self, X):
        check_is_fitted(self)
        return (np.asarray(X, dtype=np.float64) - self.mean_) / self.std_

    def inverse_transform(self, X):
        check_is_fitted(self)
        return np.asarray(X, dtype=np.float64) * self.std_ + self.mean_

    @property
    def mean(self) -> float:
        return self.mean_

    @property
    def std(self) -> float:
        return self.std_


def fit_standardizer(values) -> Standardizer:
    return Standardizer().fit(values)


class SimpleAverageDetrender(BaseEstimator, TransformerMixin):
    """Transformer form of :func:`compute_trend` / :func:`compute_residual`.

    ``fit`` takes a week-aligned 1-D series; ``transform`` subtracts the
    learned weekly profile, starting at weekly slot ``first_slot``.
    """

    def __init__(self, weeks: int | None = None):
        self.weeks = weeks

    def fit(self, X, y=None):
        series = StationSeries("", np.asarray(X, dtype=np.float64).ravel())
        self.trend_ = compute_trend(series, self.weeks)
        return self

    def transform(self, X, first_slot: int = 0):
        check_is_fitted(self)
        values = np.asarray(X, dtype=np.float64).ravel()
        return compute_residual(StationSeries("", values, first_slot=first_slot), self.trend_).values

    def inverse_transform(self, X, first_slot: int = 0):
        check_is_fitted(self)
        values = np.asarray(X, dtype=np.float64).ravel()
        return values + self.trend_.tile(len(values), first_slot)


def write_series_csv(
    path: str | Path, name: str, values: np.ndarray, first_slot: int = 0, header: str | None = None
) -> None:
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh)
        w.writerow(["index", "slot", name])
        for k, v in enumerate(values):
            w.writerow([k, (first_slot + k) % SLOTS_PER_WEEK, repr(float(v))])
