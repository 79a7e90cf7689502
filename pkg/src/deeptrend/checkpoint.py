"""Versioned text checkpoints for fitted models.

Layout::

    deeptrend-checkpoint 1
    provenance <free text, e.g. seed and config hash>
    kind <model kind>
    params <json of get_params, estimator-level>
    meta <json: window, phase, ...>
    arrays <count>
    array <name>
    <rows> <cols>
    <row-major values in float.hex, one per line>
    ...

Values are written with ``float.hex`` so a save/load cycle is bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

from .models import BaselinePredictor, DeepTrendRegressor, make_model
from .tensor import read_matrix, write_matrix

MAGIC = "deeptrend-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


def _inner(model):
    if isinstance(model, BaselinePredictor):
        return model.kind, model.estimator_
    if isinstance(model, DeepTrendRegressor):
        return "deeptrend", model
    raise TypeError(f"cannot checkpoint {type(model).__name__}")


def save_checkpoint(model, path: str | Path, provenance: str = "") -> None:
    if "\n" in provenance:
        raise ValueError("provenance must be a single line")
    kind, est = _inner(model)
    params = {k: v for k, v in est.get_params().items()}
    arrays = est._checkpoint_arrays()
    with open(path, "w") as fh:
        fh.write(f"{MAGIC} {VERSION}\n")
        fh.write(f"provenance {provenance}\n")
        fh.write(f"kind {kind}\n")
        fh.write(f"params {json.dumps(params, sort_keys=True)}\n")
        fh.write(f"meta {json.dumps(est._checkpoint_meta(), sort_keys=True)}\n")
        fh.write(f"arrays {len(arrays)}\n")
        for name, arr in arrays:
            fh.write(f"array {name}\n")
            write_matrix(fh, arr)


def _field(fh, key: str) -> str:
    line = fh.readline().rstrip("\n")
    head, _, rest = line.partition(" ")
    if head != key:
        raise CheckpointError(f"expected {key!r} line, got {line[:40]!r}")
    return rest


def load_checkpoint(path: str | Path):
    with open(path) as fh:
        magic = fh.readline().split()
        if len(magic) != 2 or magic[0] != MAGIC:
            raise CheckpointError(f"{path} is not a model checkpoint")
        if int(magic[1]) != VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {magic[1]}")
        _field(fh, "provenance")
        kind = _field(fh, "kind")
        params = json.loads(_field(fh, "params"))
        meta = json.loads(_field(fh, "meta"))
        count = int(_field(fh, "arrays"))
        arrays = {}
        for _ in range(count):
            name = _field(fh, "array")
            arrays[name] = read_matrix(fh)
    model = make_model(kind, **params)
    if isinstance(model, BaselinePredictor):
        model.estimator_ = model.estimator
        model.estimator_._restore(meta, arrays)
    else:
        model._restore(meta, arrays)
    return model
