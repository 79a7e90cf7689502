"""Error indexes, cross-model normalization and empirical CDF tables."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


def _pair(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(actual, dtype=np.float64).ravel()
    yhat = np.asarray(predicted, dtype=np.float64).ravel()
    if len(y) != len(yhat):
        raise ValueError(f"{len(y)} actual values but {len(yhat)} predictions")
    if len(y) == 0:
        raise ValueError("no values to score")
    return y, yhat


def mse(actual, predicted) -> float:
    y, yhat = _pair(actual, predicted)
    return float(np.mean((y - yhat) ** 2))


def mae(actual, predicted) -> float:
    y, yhat = _pair(actual, predicted)
    return float(np.mean(np.abs(y - yhat)))


@dataclass(frozen=True)
class MetricReport:
    station: str
    model: str
    mse: float
    mae: float
    n: int

    def __post_init__(self):
        if self.mse < 0 or self.mae < 0:
            raise ValueError(f"negative error index in {self}")
        # Jensen: mean(|e|)^2 <= mean(e^2); allow for the last rounding bit
        if self.mae**2 > self.mse * (1.0 + 1e-12):
            raise ValueError(f"mae^2 > mse for {self.station}/{self.model}")

    @classmethod
    def score(cls, station: str, model: str, actual, predicted) -> "MetricReport":
        y, yhat = _pair(actual, predicted)
        return cls(station, model, mse(y, yhat), mae(y, yhat), len(y))


def normalize_across_models(values: dict[str, float]) -> dict[str, float]:
    """Min-max scale one station's index over models; all-equal maps to 0."""
    if len(values) < 2:
        raise ValueError("normalization needs at least two models")
    lo, hi = min(values.values()), max(values.values())
    if hi == lo:
        return {k: 0.0 for k in values}
    return {k: (v - lo) / (hi - lo) for k, v in values.items()}


@dataclass(frozen=True)
class CdfTable:
    values: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        p = self.probabilities
        if len(p) == 0 or p[0] <= 0 or np.any(np.diff(p) < 0) or p[-1] != 1.0:
            raise ValueError("not a valid empirical CDF")

    def rows(self):
        return list(zip(self.values.tolist(), self.probabilities.tolist()))


def empirical_cdf(values) -> CdfTable:
    """Step CDF evaluated at each distinct observation."""
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if len(v) == 0:
        raise ValueError("empirical CDF of an empty sample")
    distinct = np.unique(v)
    counts = np.searchsorted(v, distinct, side="right")
    probs = counts / len(v)
    probs[-1] = 1.0
    return CdfTable(distinct, probs)


def normalized_cdfs(reports: list[MetricReport], metric: str) -> dict[str, CdfTable]:
    """Per-model CDF of ``metric`` after per-station normalization."""
    by_station: dict[str, dict[str, float]] = {}
    for r in reports:
        by_station.setdefault(r.station, {})[r.model] = getattr(r, metric)
    per_model: dict[str, list[float]] = {}
    for station in sorted(by_station):
        for model, v in normalize_across_models(by_station[station]).items():
            per_model.setdefault(model, []).append(v)
    return {m: empirical_cdf(vs) for m, vs in per_model.items()}


def _preamble(fh, header: str | None) -> None:
    if header:
        fh.write(f"# {header}\n")


def write_metrics_csv(path: str | Path, reports: list[MetricReport], header: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        _preamble(fh, header)
        w = csv.writer(fh)
        w.writerow(["station", "model", "mse", "mae", "n"])
        for r in reports:
            w.writerow([r.station, r.model, repr(r.mse), repr(r.mae), r.n])


def read_metrics_csv(path: str | Path) -> list[MetricReport]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    return [MetricReport(s, m, float(a), float(b), int(n)) for s, m, a, b, n in rows[1:]]


def write_cdf_csv(path: str | Path, table: CdfTable, header: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        _preamble(fh, header)
        w = csv.writer(fh)
        w.writerow(["value", "probability"])
        for v, p in table.rows():
            w.writerow([repr(v), repr(p)])


def summary_table(reports: list[MetricReport], models: list[str]) -> dict[str, dict[str, float]]:
    """Station-averaged MSE and MAE per model, keyed metric -> model."""
    out: dict[str, dict[str, float]] = {"MSE": {}, "MAE": {}}
    for m in models:
        rs = [r for r in reports if r.model == m]
        if not rs:
            continue
        out["MSE"][m] = float(np.mean([r.mse for r in rs]))
        out["MAE"][m] = float(np.mean([r.mae for r in rs]))
    return out


def write_summary_csv(path: str | Path, summary, models: list[str], header: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        _preamble(fh, header)
        w = csv.writer(fh)
        w.writerow(["metric", *models])
        for metric, row in summary.items():
            w.writerow([metric, *(f"{row[m]:.6f}" for m in models)])


def format_summary(summary, models: list[str]) -> str:
    width = max(10, *(len(m) + 2 for m in models))
    lines = ["".ljust(6) + "".join(m.rjust(width) for m in models)]
    for metric, row in summary.items():
        lines.append(metric.ljust(6) + "".join(f"{row[m]:.2f}".rjust(width) for m in models))
    return "\n".join(lines)
