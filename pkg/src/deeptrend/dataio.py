"""Flow tables: CSV I/O, splitting, windowing and a synthetic generator."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from .detrend import SLOTS_PER_DAY, SLOTS_PER_WEEK, StationSeries
from .tensor import make_rng

STEP = np.timedelta64(5, "m")


class FlowTableError(ValueError):
    pass


@dataclass(frozen=True)
class FlowTable:
    """Rectangular 5-minute flow data, one column per station; NaN = missing."""

    timestamps: np.ndarray  # datetime64[s]
    stations: tuple[str, ...]
    values: np.ndarray  # (len(timestamps), len(stations))

    def __post_init__(self):
        if self.values.shape != (len(self.timestamps), len(self.stations)):
            raise FlowTableError(
                f"values shape {self.values.shape} does not match "
                f"{len(self.timestamps)} timestamps x {len(self.stations)} stations"
            )
        if len(set(self.stations)) != len(self.stations):
            raise FlowTableError("duplicate station ids")
        if len(self.timestamps) > 1:
            gaps = np.diff(self.timestamps)
            bad = np.flatnonzero(gaps != STEP)
            if len(bad):
                raise FlowTableError(f"timestamp {bad[0] + 1} is not 5 minutes after its predecessor")

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def n_weeks(self) -> int:
        return len(self) // SLOTS_PER_WEEK

    def series(self, station: str) -> StationSeries:
        try:
            col = self.stations.index(station)
        except ValueError:
            raise KeyError(f"unknown station {station!r}") from None
        start = self.timestamps[0] if len(self) else None
        return StationSeries(station, self.values[:, col].copy(), start)

    def slice(self, start: int, stop: int) -> "FlowTable":
        return FlowTable(self.timestamps[start:stop], self.stations, self.values[start:stop])

    def equals(self, other: "FlowTable") -> bool:
        return (
            self.stations == other.stations
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


def _parse_time(text: str, row: int) -> np.datetime64:
    try:
        return np.datetime64(datetime.fromisoformat(text.strip()), "s")
    except ValueError:
        raise FlowTableError(f"row {row}: unparseable timestamp {text!r}") from None


def load_csv(path: str | Path) -> FlowTable:
    """Read ``timestamp,<station>,...``; empty cells are missing.

    Lines starting with ``#`` are ignored. Row numbers in errors are
    1-based file line numbers.
    """
    stamps: list[np.datetime64] = []
    rows: list[list[float]] = []
    header = None
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or rec[0].startswith("#"):
                continue
            if header is None:
                if rec[0].strip() != "timestamp" or len(rec) < 2:
                    raise FlowTableError(f"row {lineno}: header must be timestamp,<station>,...")
                header = [s.strip() for s in rec[1:]]
                continue
            if len(rec) != len(header) + 1:
                raise FlowTableError(f"row {lineno}: expected {len(header) + 1} fields, got {len(rec)}")
            ts = _parse_time(rec[0], lineno)
            if stamps and ts != stamps[-1] + STEP:
                what = "duplicated" if ts == stamps[-1] else "non-monotone" if ts < stamps[-1] else "gapped"
                raise FlowTableError(f"row {lineno}: {what} timestamp {rec[0]}")
            vals = []
            for cell in rec[1:]:
                cell = cell.strip()
                if cell == "":
                    vals.append(math.nan)
                    continue
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise FlowTableError(f"row {lineno}: unparseable number {cell!r}") from None
            stamps.append(ts)
            rows.append(vals)
    if header is None:
        raise FlowTableError(f"{path}: no header row")
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    return FlowTable(np.array(stamps, dtype="datetime64[s]"), tuple(header), values)


def save_csv(table: FlowTable, path: str | Path, comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh)
        w.writerow(["timestamp", *table.stations])
        for ts, row in zip(table.timestamps, table.values):
            cells = ["" if math.isnan(v) else repr(float(v)) for v in row]
            w.writerow([str(ts.astype("datetime64[s]")), *cells])


def split_train_test(table: FlowTable, train_weeks: int) -> tuple[FlowTable, FlowTable]:
    cut = train_weeks * SLOTS_PER_WEEK
    if train_weeks < 1 or len(table) <= cut:
        raise FlowTableError(
            f"table spans {len(table)} samples ({table.n_weeks} weeks); "
            f"need more than {train_weeks} weeks to leave a test part"
        )
    return table.slice(0, cut), table.slice(cut, len(table))


@dataclass
class WindowedDataset:
    """Supervised windows: ``inputs`` is (samples, N, F), ``targets`` (samples, K)."""

    inputs: np.ndarray
    targets: np.ndarray
    target_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        if len(self.inputs) != len(self.targets):
            raise ValueError(f"{len(self.inputs)} inputs but {len(self.targets)} targets")

    def __len__(self) -> int:
        return len(self.inputs)

    @property
    def window(self) -> int:
        return self.inputs.shape[1]

    @property
    def n_features(self) -> int:
        return self.inputs.shape[2]

    def subset(self, mask) -> "WindowedDataset":
        return WindowedDataset(self.inputs[mask], self.targets[mask], self.target_index[mask])


def make_windows(features, targets, window: int) -> WindowedDataset:
    """Sliding windows of length ``window`` predicting the following step.

    Sample ``s`` uses steps ``s .. s+window-1`` of every feature series and
    targets step ``s+window`` of every target series.
    """
    feats = [np.asarray(f, dtype=np.float64) for f in features]
    tgts = [np.asarray(t, dtype=np.float64) for t in targets]
    lengths = {len(s) for s in feats + tgts}
    if len(lengths) != 1:
        raise ValueError(f"feature and target series lengths differ: {sorted(lengths)}")
    (length,) = lengths
    if window < 1 or length <= window:
        raise ValueError(f"series length {length} must exceed the window {window}")
    stacked = np.stack(feats, axis=1)
    inputs = np.lib.stride_tricks.sliding_window_view(stacked, window, axis=0)[:-1]
    inputs = np.ascontiguousarray(inputs.transpose(0, 2, 1))
    out = np.stack(tgts, axis=1)[window:]
    return WindowedDataset(inputs, np.ascontiguousarray(out), np.arange(window, length))


@dataclass(frozen=True)
class SyntheticSpec:
    """Weekly-periodic flow plus an AR(1) residual.

    The trend of each station is ``level + sum_k a_k sin(2 pi k t / 288 + phase_k)``
    with per-station random phases, multiplied on the last two days of each
    week by ``weekend_factor`` (applied to the deviation from ``level``).
    """

    weeks: int = 6
    stations: int = 2
    # eight daily harmonics give sharp rush-hour peaks
    amplitudes: tuple[float, ...] = (60.0, 30.0, 20.0, 15.0, 12.0, 10.0, 8.0, 6.0)
    level: float = 200.0
    weekend_factor: float = 0.5
    phi: float = 0.5
    noise_std: float = 5.0
    seed: int = 0
    start: str = "2016-01-04T00:00:00"

    def __post_init__(self):
        if not -1.0 < self.phi < 1.0:
            raise ValueError(f"AR coefficient must satisfy |phi| < 1, got {self.phi}")
        if self.weeks < 2:
            raise ValueError(f"need at least 2 weeks, got {self.weeks}")
        if self.stations < 1:
            raise ValueError("need at least one station")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")

    @property
    def residual_variance(self) -> float:
        """Stationary variance of the AR(1) residual."""
        return self.noise_std**2 / (1.0 - self.phi**2)


def synthetic_trend(spec: SyntheticSpec, phases: np.ndarray) -> np.ndarray:
    t = np.arange(SLOTS_PER_WEEK)
    shape = np.zeros(SLOTS_PER_WEEK)
    for k, (amp, ph) in enumerate(zip(spec.amplitudes, phases), start=1):
        shape += amp * np.sin(2.0 * np.pi * k * t / SLOTS_PER_DAY + ph)
    weekend = t >= 5 * SLOTS_PER_DAY
    shape[weekend] *= spec.weekend_factor
    return spec.level + shape


def generate_synthetic(spec: SyntheticSpec, return_components: bool = False):
    """Build a :class:`FlowTable`; optionally also the per-station (trend, residual)."""
    rng = make_rng(spec.seed)
    n = spec.weeks * SLOTS_PER_WEEK
    values = np.empty((n, spec.stations))
    parts = []
    for s in range(spec.stations):
        phases = rng.uniform(0.0, 2.0 * np.pi, size=len(spec.amplitudes))
        trend = np.tile(synthetic_trend(spec, phases), spec.weeks)
        noise = rng.normal(0.0, 1.0, size=n) * spec.noise_std
        resid = np.empty(n)
        prev = rng.normal(0.0, 1.0) * math.sqrt(spec.residual_variance)
        for t in range(n):
            prev = spec.phi * prev + noise[t]
            resid[t] = prev
        values[:, s] = trend + resid
        parts.append((trend, resid))
    start = np.datetime64(spec.start, "s")
    stamps = start + np.arange(n) * STEP.astype("timedelta64[s]")
    table = FlowTable(stamps, tuple(f"S{s + 1:03d}" for s in range(spec.stations)), values)
    if return_components:
        return table, parts
    return table


__all__ = [
    "FlowTable",
    "FlowTableError",
    "SyntheticSpec",
    "WindowedDataset",
    "generate_synthetic",
    "load_csv",
    "make_windows",
    "save_csv",
    "split_train_test",
    "synthetic_trend",
]
