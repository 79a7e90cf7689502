"""Per-station forecasting pipeline shared by the CLI and the tests.

For each station: impute, standardize on the training weeks, compute the
weekly trend on the training weeks, build two-channel windows, fit each
model, predict the test weeks and score in vehicle units.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .dataio import FlowTable, WindowedDataset, make_windows
from .detrend import (
    SLOTS_PER_WEEK,
    Standardizer,
    StationSeries,
    TrendProfile,
    compute_trend,
    fit_standardizer,
    impute_missing,
)
from .evaluation import MetricReport
from .models import make_model, model_param_names

log = logging.getLogger(__name__)


@dataclass
class StationData:
    station: str
    standardizer: Standardizer
    trend: TrendProfile  # standardized units
    train: WindowedDataset
    test: WindowedDataset
    test_actual: np.ndarray  # vehicle units

    @staticmethod
    def split(ds: WindowedDataset):
        """(X, y, y_trend) from a two-target window dataset."""
        return ds.inputs, ds.targets[:, 0], ds.targets[:, 1]


def prepare_station(
    table: FlowTable,
    station: str,
    window: int = 12,
    train_weeks: int = 12,
    max_missing: float = 0.01,
) -> StationData:
    series = impute_missing(table.series(station), max_missing)
    cut = train_weeks * SLOTS_PER_WEEK
    if len(series.values) <= cut:
        raise ValueError(f"station {station!r} has no samples after {train_weeks} training weeks")
    scaler = fit_standardizer(series.values[:cut])
    flow = scaler.transform(series.values)
    trend = compute_trend(StationSeries(station, flow[:cut]), train_weeks)
    trend_series = trend.tile(len(flow))
    data = make_windows([flow, trend_series], [flow, trend_series], window)
    is_test = data.target_index >= cut
    return StationData(
        station=station,
        standardizer=scaler,
        trend=trend,
        train=data.subset(~is_test),
        test=data.subset(is_test),
        test_actual=series.values[cut:],
    )


def build_model(kind: str, params: dict | None = None, seed: int = 0):
    params = dict(params or {})
    if "random_state" in model_param_names(kind):
        params.setdefault("random_state", seed)
    return make_model(kind, **params)


def fit_model(model, data: StationData):
    X, y, y_trend = data.split(data.train)
    model.fit(X, y, y_trend)
    return model


def predict_test(model, data: StationData) -> np.ndarray:
    """Test-week predictions in vehicle units."""
    X, _, y_trend = data.split(data.test)
    return data.standardizer.inverse_transform(model.predict(X, y_trend))


def score(model_name: str, data: StationData, prediction: np.ndarray) -> MetricReport:
    return MetricReport.score(data.station, model_name, data.test_actual, prediction)


def station_seed(seed: int, station_index: int) -> int:
    """Seed shared by all models of one station, so -O and -D runs pair up."""
    return int(np.random.SeedSequence([seed, station_index]).generate_state(1)[0])


def run_station(
    data: StationData,
    kinds: list[str],
    params: dict[str, dict] | None = None,
    seed: int = 0,
) -> tuple[dict[str, object], list[MetricReport]]:
    params = params or {}
    models, reports = {}, []
    for kind in kinds:
        model = fit_model(build_model(kind, params.get(kind), seed), data)
        reports.append(score(kind, data, predict_test(model, data)))
        log.info("%s %s mse=%.4f", data.station, kind, reports[-1].mse)
        models[kind] = model
    return models, reports
