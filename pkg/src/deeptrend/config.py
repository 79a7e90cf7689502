"""Experiment configuration: INI sections, strict keys, stable hashing.

Example::

    [experiment]
    data = synthetic
    window = 12
    train_weeks = 4
    models = deeptrend, lstm-original, seasonal-naive
    seed = 7

    [synthetic]
    weeks = 6
    stations = 2

    [deeptrend]
    hidden_size = 32

``data`` is ``synthetic`` or a CSV path (relative paths resolve against the
config file). Each model section takes that model's hyperparameters.
"""

from __future__ import annotations

import configparser
import dataclasses
import difflib
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .dataio import FlowTable, SyntheticSpec, generate_synthetic, load_csv
from .models import MODEL_KINDS, make_model, model_param_names


class ConfigError(ValueError):
    pass


def _unknown(key: str, allowed, where: str) -> ConfigError:
    hint = difflib.get_close_matches(key, list(allowed), n=1, cutoff=0.5)
    suffix = f"; did you mean {hint[0]!r}?" if hint else ""
    return ConfigError(f"unknown key {key!r} in [{where}]{suffix}")


def _coerce(text: str, default, key: str, where: str):
    try:
        if isinstance(default, bool):
            return text.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"[{where}] {key}: cannot parse {text!r}") from None
    return text.strip()


EXPERIMENT_DEFAULTS = {
    "data": "synthetic",
    "stations": "",
    "window": 12,
    "train_weeks": 12,
    "models": ",".join(MODEL_KINDS),
    "seed": 0,
    "output": "out",
    "max_missing": 0.01,
}


@dataclass
class ExperimentConfig:
    data: str = "synthetic"
    stations: tuple[str, ...] = ()
    window: int = 12
    train_weeks: int = 12
    models: tuple[str, ...] = MODEL_KINDS
    seed: int = 0
    output: str = "out"
    max_missing: float = 0.01
    synthetic: SyntheticSpec | None = None
    model_params: dict[str, dict] = field(default_factory=dict)
    base_dir: str = "."

    def __post_init__(self):
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if self.train_weeks < 1:
            raise ConfigError(f"train_weeks must be >= 1, got {self.train_weeks}")
        for kind in self.models:
            if kind not in MODEL_KINDS:
                raise _unknown(kind, MODEL_KINDS, "experiment.models")
        if not self.models:
            raise ConfigError("no models configured")

    def with_overrides(self, seed: int | None = None, output: str | None = None) -> "ExperimentConfig":
        changes = {}
        if seed is not None:
            changes["seed"] = seed
        if output is not None:
            changes["output"] = output
        return dataclasses.replace(self, **changes)

    def canonical(self) -> dict:
        """Everything that influences results; ``output`` is excluded."""
        return {
            "data": self.data,
            "stations": list(self.stations),
            "window": self.window,
            "train_weeks": self.train_weeks,
            "models": list(self.models),
            "seed": self.seed,
            "max_missing": self.max_missing,
            "synthetic": dataclasses.asdict(self.synthetic) if self.synthetic else None,
            "model_params": {k: self.model_params[k] for k in sorted(self.model_params)},
        }

    @property
    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def provenance(self) -> str:
        return f"seed={self.seed} config_sha256={self.digest}"

    @property
    def output_dir(self) -> Path:
        out = Path(self.output)
        return out if out.is_absolute() else Path(self.base_dir) / out

    def load_table(self) -> FlowTable:
        if self.data == "synthetic":
            return generate_synthetic(self.synthetic or SyntheticSpec(seed=self.seed))
        path = Path(self.data)
        if not path.is_absolute():
            path = Path(self.base_dir) / path
        if not path.exists():
            raise ConfigError(f"data file {str(path)!r} does not exist")
        return load_csv(path)

    def station_list(self, table: FlowTable) -> list[str]:
        if not self.stations:
            return list(table.stations)
        missing = [s for s in self.stations if s not in table.stations]
        if missing:
            raise ConfigError(f"station(s) {missing} not present in the data")
        return list(self.stations)


def synthetic_from_section(section, default_seed: int) -> SyntheticSpec:
    defaults = {f.name: f.default for f in dataclasses.fields(SyntheticSpec)}
    values = {"seed": default_seed}
    for key, text in section.items():
        if key not in defaults:
            raise _unknown(key, defaults, "synthetic")
        values[key] = _coerce(text, defaults[key], key, "synthetic")
    try:
        return SyntheticSpec(**values)
    except ValueError as exc:
        raise ConfigError(f"[synthetic] {exc}") from None


def _model_section(kind: str, section) -> dict:
    names = model_param_names(kind)
    defaults = make_model(kind).get_params(deep=False)
    if kind != "deeptrend":
        defaults = defaults["estimator"].get_params()
    out = {}
    for key, text in section.items():
        if key not in names:
            raise _unknown(key, names, kind)
        out[key] = _coerce(text, defaults[key], key, kind)
    return out


def read_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {str(path)!r} does not exist")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc.message}") from None
    sections = ("experiment", "synthetic", *MODEL_KINDS)
    for name in parser.sections():
        if name not in sections:
            raise _unknown(name, sections, "sections")
    exp = dict(EXPERIMENT_DEFAULTS)
    if parser.has_section("experiment"):
        for key, text in parser["experiment"].items():
            if key not in EXPERIMENT_DEFAULTS:
                raise _unknown(key, EXPERIMENT_DEFAULTS, "experiment")
            exp[key] = _coerce(text, EXPERIMENT_DEFAULTS[key], key, "experiment")
    seed = int(exp["seed"])
    synthetic = None
    if exp["data"] == "synthetic":
        section = parser["synthetic"] if parser.has_section("synthetic") else {}
        synthetic = synthetic_from_section(section, seed)
    params = {
        kind: _model_section(kind, parser[kind]) for kind in MODEL_KINDS if parser.has_section(kind)
    }
    split = lambda s: tuple(v.strip() for v in s.split(",") if v.strip())  # noqa: E731
    return ExperimentConfig(
        data=exp["data"],
        stations=split(exp["stations"]),
        window=int(exp["window"]),
        train_weeks=int(exp["train_weeks"]),
        models=split(exp["models"]),
        seed=seed,
        output=exp["output"],
        max_missing=float(exp["max_missing"]),
        synthetic=synthetic,
        model_params=params,
        base_dir=str(path.parent),
    )


def read_synthetic_spec(path: str | Path, seed: int | None = None) -> SyntheticSpec:
    """The ``[synthetic]`` section of a config file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    parser.optionxform = str
    if not Path(path).exists():
        raise ConfigError(f"spec file {str(path)!r} does not exist")
    parser.read(path)
    if not parser.has_section("synthetic"):
        raise ConfigError(f"{path}: no [synthetic] section")
    section = dict(parser["synthetic"])
    if seed is not None:
        section["seed"] = str(seed)
    return synthetic_from_section(section, 0)
