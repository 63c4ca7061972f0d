"""Consolidated run report.

``build_report`` scans an output directory for the artifacts the other
commands wrote and assembles one JSON document. Scanning is name-based and
sorted, so re-running on an unchanged directory reproduces the identical
document; only ``generated_at`` varies and consumers comparing runs are
expected to ignore it.
"""

from __future__ import annotations

import csv
import datetime as dt
import glob
import json
import os

from . import __version__
from .automata import read_trace_csv
from .errors import DataError

REPORT_VERSION = 1

# The documented shape of report.json (jsonschema dialect).
REPORT_SCHEMA = {
    "type": "object",
    "required": ["report_version", "tool", "generated_at", "configs",
                 "training", "evaluation", "sweeps", "campaigns", "stealth"],
    "properties": {
        "report_version": {"const": REPORT_VERSION},
        "tool": {
            "type": "object",
            "required": ["name", "version"],
            "properties": {"name": {"type": "string"}, "version": {"type": "string"}},
        },
        "generated_at": {"type": "string"},
        "configs": {"type": "object"},
        "training": {
            "type": ["object", "null"],
            "required": ["epochs", "initial_train_mse", "final_train_mse", "final_val_mse"],
        },
        "evaluation": {
            "type": ["object", "null"],
            "required": ["mae", "rmse", "mape", "n"],
        },
        "sweeps": {
            "type": "object",
            "additionalProperties": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["model", "epsilon", "mae", "rmse", "mape"],
                },
            },
        },
        "campaigns": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["kind", "iterations", "baseline_mape", "mean_mape", "max_mape", "final_probs"],
            },
        },
        "stealth": {"type": "object"},
    },
}


def _read_history(path) -> dict:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DataError(f"{path}: empty history")
    return {
        "epochs": int(rows[-1]["epoch"]),
        "initial_train_mse": float(rows[0]["train_mse"]),
        "final_train_mse": float(rows[-1]["train_mse"]),
        "final_val_mse": float(rows[-1]["val_mse"]),
    }


def _read_evaluation(path) -> dict:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DataError(f"{path}: empty evaluation")
    row = rows[0]
    return {"mae": float(row["mae"]), "rmse": float(row["rmse"]),
            "mape": float(row["mape"]), "n": int(row["n"])}


def _read_sweep(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        {"model": r["model"], "epsilon": float(r["epsilon"]), "mae": float(r["mae"]),
         "rmse": float(r["rmse"]), "mape": float(r["mape"])}
        for r in rows
    ]


def _stem(path: str, prefix: str) -> str:
    return os.path.splitext(os.path.basename(path))[0].removeprefix(prefix)


def build_report(out_dir: str) -> dict:
    if not os.path.isdir(out_dir):
        raise DataError(f"report: {out_dir} is not a directory")
    entries = sorted(os.listdir(out_dir))
    if not entries:
        raise DataError(f"report: {out_dir} is empty, nothing to aggregate")

    configs = {}
    for path in sorted(glob.glob(os.path.join(out_dir, "config_*.json"))):
        with open(path, encoding="utf-8") as fh:
            configs[os.path.basename(path)] = json.load(fh)

    history_path = os.path.join(out_dir, "history.csv")
    training = _read_history(history_path) if os.path.exists(history_path) else None

    eval_path = os.path.join(out_dir, "evaluation.csv")
    evaluation = _read_evaluation(eval_path) if os.path.exists(eval_path) else None

    sweeps = {}
    for path in sorted(glob.glob(os.path.join(out_dir, "sweep_*.csv"))):
        sweeps[_stem(path, "sweep_")] = _read_sweep(path)

    campaigns = {}
    for path in sorted(glob.glob(os.path.join(out_dir, "campaign_*.json"))):
        with open(path, encoding="utf-8") as fh:
            campaigns[_stem(path, "campaign_")] = json.load(fh)
    # traces without a summary sidecar still get a minimal entry
    for path in sorted(glob.glob(os.path.join(out_dir, "trace_*.csv"))):
        label = _stem(path, "trace_")
        if label not in campaigns:
            rows = read_trace_csv(path)
            campaigns[label] = {
                "kind": "unknown",
                "iterations": len(rows),
                "baseline_mape": None,
                "mean_mape": sum(r.mape for r in rows) / len(rows),
                "max_mape": max(r.mape for r in rows),
                "final_probs": list(rows[-1].probs),
            }

    stealth = {}
    for path in sorted(glob.glob(os.path.join(out_dir, "stealth_*.json"))):
        with open(path, encoding="utf-8") as fh:
            stealth[_stem(path, "stealth_")] = json.load(fh)

    if not (configs or training or evaluation or sweeps or campaigns or stealth):
        raise DataError(f"report: no recognized artifacts in {out_dir}")

    return {
        "report_version": REPORT_VERSION,
        "tool": {"name": "aquaprobe", "version": __version__},
        "generated_at": dt.datetime.now(dt.timezone.utc).isoformat(),
        "configs": configs,
        "training": training,
        "evaluation": evaluation,
        "sweeps": sweeps,
        "campaigns": campaigns,
        "stealth": stealth,
    }


def write_report(out_dir: str) -> str:
    report = build_report(out_dir)
    path = os.path.join(out_dir, "report.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path
