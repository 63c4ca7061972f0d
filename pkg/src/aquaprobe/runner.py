"""Command implementations behind the CLI.

Each command reads what it needs, writes its artifacts into the output
directory, and drops a ``config_<command>.json`` snapshot of the resolved
configuration so the report command can reconstruct what produced what.
Figures are rendered alongside every delimited output unless disabled.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict

import numpy as np

from . import plotting
from .attacks import AttackConfig, fgsm, pgd
from .automata import la_attack_loop, rla_attack_loop, write_trace_csv
from .config import ExperimentConfig
from .dataseries import RawSeries, build_dataset, load_csv, synthesize, write_csv
from .detect import rolling_zscore_report
from .errors import ConfigError, DataError
from .lstm import train, predict_batch, write_history_csv
from .metrics import EvalReport, evaluate
from .modelfile import SavedModel, load_model, save_model
from .numerics import Rng

CAMPAIGN_KINDS = ("la", "rla")
SWEEP_KINDS = ("fgsm", "pgd")


def _ensure_out(config: ExperimentConfig) -> str:
    os.makedirs(config.out, exist_ok=True)
    return config.out


def _snapshot_config(config: ExperimentConfig, command: str) -> None:
    path = os.path.join(config.out, f"config_{command}.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(config.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")


def _load_series(config: ExperimentConfig, data_path: str | None) -> RawSeries:
    if data_path:
        return load_csv(data_path)
    if config.data.source == "csv":
        return load_csv(config.data.path)
    return synthesize(Rng(config.seed), config.data.days, config.data.synth)


def _dataset_for(saved: SavedModel, series: RawSeries, config: ExperimentConfig):
    # Reuse the scaler and window length the model was trained with.
    return build_dataset(series, saved.sequence_length, config.windowing.fractions, scaler=saved.scaler)


def _test_eval(saved: SavedModel, dataset) -> EvalReport:
    X_test, y_test = dataset.test
    preds = predict_batch(saved.params, X_test)
    scaler = dataset.scaler
    return evaluate(scaler.inverse_feature(y_test, 0), scaler.inverse_feature(preds, 0))


# ---------------------------------------------------------------------------
# Commands


def cmd_generate_data(config: ExperimentConfig, emit_path: str | None = None) -> str:
    out = _ensure_out(config)
    if config.data.source != "synthetic":
        raise ConfigError("generate-data requires data.source = 'synthetic'")
    series = synthesize(Rng(config.seed), config.data.days, config.data.synth)
    path = emit_path or os.path.join(out, "data.csv")
    write_csv(series, path)
    _snapshot_config(config, "generate-data")
    return path


def cmd_train(config: ExperimentConfig, data_path: str | None = None, render: bool = True) -> dict:
    out = _ensure_out(config)
    series = _load_series(config, data_path)
    dataset = build_dataset(series, config.windowing.sequence_length, config.windowing.fractions)
    train_config = config.model.train_config(config.seed)
    result = train(dataset, train_config)
    model_path = os.path.join(out, "model.json")
    save_model(model_path, result.params, dataset.scaler, dataset.sequence_length, config.model.tag)
    history_path = os.path.join(out, "history.csv")
    write_history_csv(result.history, history_path)
    if render:
        plotting.save_history_figure(result.history, os.path.join(out, "history.png"))
    _snapshot_config(config, "train")
    return {
        "model": model_path,
        "history": history_path,
        "final_train_mse": result.history[-1].train_mse,
        "final_val_mse": result.history[-1].val_mse,
    }


def write_evaluation_csv(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("mae,rmse,mape,n\n")
        fh.write(f"{report.mae!r},{report.rmse!r},{report.mape!r},{report.n}\n")


def cmd_evaluate(config: ExperimentConfig, model_path: str, data_path: str | None = None) -> EvalReport:
    out = _ensure_out(config)
    saved = load_model(model_path)
    series = _load_series(config, data_path)
    dataset = _dataset_for(saved, series, config)
    report = _test_eval(saved, dataset)
    write_evaluation_csv(report, os.path.join(out, "evaluation.csv"))
    _snapshot_config(config, "evaluate")
    return report


def sweep_rows(saved: SavedModel, dataset, kind: str, epsilons, pgd_iterations: int = 10, alpha: float | None = None) -> list[dict]:
    """One damage row per budget; epsilon 0 is the plain evaluation."""
    if kind not in SWEEP_KINDS:
        raise ConfigError(f"sweep kind must be one of {SWEEP_KINDS}, got {kind!r}")
    X_test, y_test = dataset.test
    scaler = dataset.scaler
    actual = scaler.inverse_feature(y_test, 0)
    rows = []
    for eps in sorted(set(float(e) for e in epsilons)):
        if eps == 0.0:
            x_adv = X_test
        elif kind == "fgsm":
            x_adv = fgsm(saved.params, X_test, y_test, eps)
        else:
            x_adv = pgd(saved.params, X_test, y_test,
                        AttackConfig(epsilon=eps, alpha=alpha, iterations=pgd_iterations))
        preds = scaler.inverse_feature(predict_batch(saved.params, x_adv), 0)
        report = evaluate(actual, preds)
        rows.append({
            "model": saved.tag,
            "epsilon": eps,
            "mae": report.mae,
            "rmse": report.rmse,
            "mape": report.mape,
        })
    rows.sort(key=lambda r: (r["model"], r["epsilon"]))
    return rows


def write_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("model,epsilon,mae,rmse,mape\n")
        for r in rows:
            fh.write(f"{r['model']},{r['epsilon']!r},{r['mae']!r},{r['rmse']!r},{r['mape']!r}\n")


def cmd_attack_sweep(config: ExperimentConfig, model_path: str, kind: str,
                     data_path: str | None = None, render: bool = True) -> list[dict]:
    out = _ensure_out(config)
    saved = load_model(model_path)
    series = _load_series(config, data_path)
    dataset = _dataset_for(saved, series, config)
    rows = sweep_rows(saved, dataset, kind, config.sweep.epsilons,
                      config.sweep.pgd_iterations, config.sweep.alpha)
    write_sweep_csv(rows, os.path.join(out, f"sweep_{kind}.csv"))
    if render:
        plotting.save_sweep_figure(rows, os.path.join(out, f"sweep_{kind}.png"))
    _snapshot_config(config, f"attack-{kind}")
    return rows


def write_stream_csv(result, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iteration,position,clean,attacked\n")
        for t, (pos, c, a) in enumerate(zip(result.positions, result.clean_stream, result.attacked_stream)):
            fh.write(f"{t},{int(pos)},{float(c)!r},{float(a)!r}\n")


def write_overlay_csv(result, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iteration,position,actual,clean_prediction,attacked_prediction\n")
        for t, (pos, a, cp, ap) in enumerate(
            zip(result.positions, result.actual, result.clean_pred, result.attacked_pred)
        ):
            fh.write(f"{t},{int(pos)},{float(a)!r},{float(cp)!r},{float(ap)!r}\n")


def write_epsilon_trace_csv(result, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iteration,epsilons,mape\n")
        for row in result.rows:
            fh.write(f"{row.iteration},{';'.join(repr(e) for e in row.epsilons)},{row.mape!r}\n")


def cmd_attack_campaign(config: ExperimentConfig, model_path: str, kind: str,
                        data_path: str | None = None, label: str | None = None,
                        render: bool = True):
    if kind not in CAMPAIGN_KINDS:
        raise ConfigError(f"campaign kind must be one of {CAMPAIGN_KINDS}, got {kind!r}")
    out = _ensure_out(config)
    saved = load_model(model_path)
    series = _load_series(config, data_path)
    dataset = _dataset_for(saved, series, config)
    camp = config.campaign
    if kind == "la":
        result = la_attack_loop(
            saved.params, dataset, camp.policy(), camp.iterations,
            actions=camp.actions, seed=config.seed, delay=camp.delay,
        )
    else:
        result = rla_attack_loop(
            saved.params, dataset, camp.rla(), camp.iterations,
            actions=camp.actions, seed=config.seed, delay=camp.delay,
        )
    label = label or kind
    write_trace_csv(result.rows, result.actions, os.path.join(out, f"trace_{label}.csv"))
    write_epsilon_trace_csv(result, os.path.join(out, f"epsilon_trace_{label}.csv"))
    write_overlay_csv(result, os.path.join(out, f"overlay_{label}.csv"))
    write_stream_csv(result, os.path.join(out, f"stream_{label}.csv"))
    summary = {
        "kind": kind,
        "label": label,
        "iterations": camp.iterations,
        "delay": camp.delay,
        "actions": list(result.actions),
        "baseline_mape": result.baseline_mape,
        "mean_mape": result.mean_mape,
        "max_mape": max(row.mape for row in result.rows),
        "final_probs": list(result.final_probs),
    }
    with open(os.path.join(out, f"campaign_{label}.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    if render:
        plotting.save_epsilon_trace_figure(result, os.path.join(out, f"epsilon_trace_{label}.png"))
        plotting.save_overlay_figure(result, os.path.join(out, f"overlay_{label}.png"))
    _snapshot_config(config, f"attack-{label}")
    return result


def read_stream_csv(path) -> tuple[np.ndarray, np.ndarray]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"clean", "attacked"} <= set(reader.fieldnames):
                raise DataError(f"{path}: expected columns 'clean' and 'attacked'")
            clean, attacked = [], []
            for rec in reader:
                clean.append(float(rec["clean"]))
                attacked.append(float(rec["attacked"]))
    except OSError as exc:
        raise DataError(f"cannot read stream file {path}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric stream value: {exc}") from exc
    return np.asarray(clean), np.asarray(attacked)


def cmd_stealth(config: ExperimentConfig, stream_path: str, name: str | None = None, render: bool = True):
    out = _ensure_out(config)
    clean, attacked = read_stream_csv(stream_path)
    report = rolling_zscore_report(clean, attacked, config.stealth.window, config.stealth.z_threshold)
    stem = name or os.path.splitext(os.path.basename(stream_path))[0].removeprefix("stream_")
    doc = report.to_dict()
    doc["stream"] = os.path.basename(stream_path)
    with open(os.path.join(out, f"stealth_{stem}.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    if render:
        plotting.save_stealth_figure(report, os.path.join(out, f"stealth_{stem}.png"))
    _snapshot_config(config, f"stealth-{stem}")
    return report
