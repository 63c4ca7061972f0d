"""Figure rendering for run artifacts.

Every report-producing command writes PNG figures next to its delimited
output. Rendering is best-effort presentation; the CSV/JSON files remain the
authoritative record.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_FIGSIZE = (8.0, 4.5)
_DPI = 120


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_history_figure(history, path):
    """Training and validation loss per epoch, log scale."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    epochs = [row.epoch for row in history]
    ax.plot(epochs, [row.train_mse for row in history], label="train MSE")
    ax.plot(epochs, [row.val_mse for row in history], label="validation MSE")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE (scaled units)")
    ax.set_yscale("log")
    ax.legend()
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def save_sweep_figure(rows, path):
    """Damage metrics versus perturbation budget, one line per model tag."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    tags = sorted({r["model"] for r in rows})
    for tag in tags:
        pts = sorted((r["epsilon"], r["mape"]) for r in rows if r["model"] == tag)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=tag)
    ax.set_xlabel("epsilon")
    ax.set_ylabel("MAPE (%)")
    ax.legend()
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def save_epsilon_trace_figure(result, path):
    """Chosen budget (sum per iteration for multi-action sets) and damage."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    iterations = [row.iteration for row in result.rows]
    eps = [sum(row.epsilons) for row in result.rows]
    ax.step(iterations, eps, where="post", color="tab:red", label="epsilon")
    ax.set_xlabel("iteration")
    ax.set_ylabel("epsilon", color="tab:red")
    twin = ax.twinx()
    twin.plot(iterations, [row.mape for row in result.rows], color="tab:blue", alpha=0.6, label="MAPE")
    twin.axhline(result.baseline_mape, color="tab:blue", linestyle=":", alpha=0.5)
    twin.set_ylabel("MAPE (%)", color="tab:blue")
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def save_overlay_figure(result, path):
    """Actual consumption against clean and attacked forecasts."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    it = [row.iteration for row in result.rows]
    ax.plot(it, result.actual, color="black", lw=1.0, label="actual")
    ax.plot(it, result.clean_pred, color="tab:green", lw=1.0, alpha=0.8, label="clean forecast")
    ax.plot(it, result.attacked_pred, color="tab:red", lw=1.0, alpha=0.8, label="attacked forecast")
    ax.set_xlabel("iteration")
    ax.set_ylabel("consumption (L)")
    ax.legend()
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def save_stealth_figure(report, path):
    """|z| of each evaluated stream point against the flag threshold."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    finite = np.where(np.isfinite(report.abs_z), report.abs_z, np.nan)
    ax.plot(finite, lw=0.8)
    ax.axhline(report.z_threshold, color="tab:red", linestyle="--",
               label=f"threshold z = {report.z_threshold:g}")
    ax.set_xlabel("stream position")
    ax.set_ylabel("|z|")
    ax.legend()
    ax.grid(alpha=0.3)
    return _finish(fig, path)
