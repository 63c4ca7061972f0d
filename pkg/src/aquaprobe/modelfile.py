"""Versioned model persistence.

A model file is a single JSON document bundling the network weights with the
scaler and window length it was trained with, so evaluation and attacks can
rebuild the exact input pipeline. JSON stores float64 via repr, which parses
back to the identical bits: save -> load round-trips exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataseries import MinMaxScaler
from .errors import FormatError, ShapeError
from .lstm import MODEL_TAGS, PARAM_FIELDS, LstmParams

FORMAT_VERSION = 1


@dataclass
class SavedModel:
    params: LstmParams
    scaler: MinMaxScaler
    sequence_length: int
    tag: str


def save_model(path, params: LstmParams, scaler: MinMaxScaler, sequence_length: int, tag: str = "LSTM") -> None:
    if tag not in MODEL_TAGS:
        raise ValueError(f"tag must be one of {MODEL_TAGS}, got {tag!r}")
    if sequence_length < 1:
        raise ValueError(f"sequence_length must be >= 1, got {sequence_length}")
    doc = {
        "format_version": FORMAT_VERSION,
        "tag": tag,
        "hidden": params.hidden,
        "features": params.features,
        "sequence_length": int(sequence_length),
        "scaler": {"min": scaler.mins.tolist(), "max": scaler.maxs.tolist()},
        "weights": {
            name: (getattr(params, name).tolist() if name != "b_dense" else params.b_dense)
            for name in PARAM_FIELDS
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path) -> SavedModel:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise FormatError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"model file {path} is not valid JSON: {exc}") from exc
    try:
        version = doc["format_version"]
        if version != FORMAT_VERSION:
            raise FormatError(f"model file {path} has format version {version}, expected {FORMAT_VERSION}")
        hidden = int(doc["hidden"])
        features = int(doc["features"])
        weights = doc["weights"]
        arrays = {name: np.asarray(weights[name], dtype=np.float64) for name in PARAM_FIELDS[:9]}
        params = LstmParams(**arrays, b_dense=float(weights["b_dense"]))
        scaler = MinMaxScaler(np.asarray(doc["scaler"]["min"]), np.asarray(doc["scaler"]["max"]))
        saved = SavedModel(params, scaler, int(doc["sequence_length"]), str(doc["tag"]))
    except KeyError as exc:
        raise FormatError(f"model file {path} is missing field {exc}") from exc
    if params.hidden != hidden or params.features != features:
        raise ShapeError(
            f"model file {path} declares hidden={hidden}, features={features} "
            f"but its weights have hidden={params.hidden}, features={params.features}"
        )
    if saved.tag not in MODEL_TAGS:
        raise FormatError(f"model file {path} carries unknown tag {saved.tag!r}")
    if saved.sequence_length < 1:
        raise FormatError(f"model file {path} has invalid sequence_length {saved.sequence_length}")
    return saved
