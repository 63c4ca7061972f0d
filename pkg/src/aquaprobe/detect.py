"""Stealth scoring: how visibly does a tampered stream deviate?

The detector walks the attacked consumption stream with a rolling window of
clean history: at each step it computes the z-score of the attacked value
against the mean and standard deviation of the preceding ``window`` clean
values. The flagged fraction is the share of evaluated points whose |z|
exceeds the threshold. Scoring the clean stream against itself gives the
false-positive base rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class StealthReport:
    window: int
    z_threshold: float
    n_evaluated: int
    n_flagged: int
    flagged_fraction: float
    max_abs_z: float
    abs_z: np.ndarray

    def to_dict(self) -> dict:
        return {
            "window": self.window,
            "z_threshold": self.z_threshold,
            "n_evaluated": self.n_evaluated,
            "n_flagged": self.n_flagged,
            "flagged_fraction": self.flagged_fraction,
            "max_abs_z": self.max_abs_z,
        }


def rolling_zscore_report(clean, attacked, window: int = 30, z_threshold: float = 3.0) -> StealthReport:
    clean = np.asarray(clean, dtype=np.float64).ravel()
    attacked = np.asarray(attacked, dtype=np.float64).ravel()
    if clean.shape != attacked.shape:
        raise ShapeError(f"clean and attacked streams must match, got {clean.shape} and {attacked.shape}")
    if window < 2:
        raise ValueError(f"window must be >= 2, got {window}")
    if clean.size <= window:
        raise ValueError(f"stream of length {clean.size} is too short for window {window}")
    if z_threshold <= 0:
        raise ValueError(f"z_threshold must be positive, got {z_threshold}")
    n = clean.size - window
    abs_z = np.empty(n)
    for k in range(n):
        history = clean[k : k + window]
        mu = history.mean()
        sd = history.std()
        dev = attacked[k + window] - mu
        if sd == 0.0:
            abs_z[k] = 0.0 if dev == 0.0 else np.inf
        else:
            abs_z[k] = abs(dev) / sd
    flagged = int(np.count_nonzero(abs_z > z_threshold))
    return StealthReport(
        window=window,
        z_threshold=z_threshold,
        n_evaluated=n,
        n_flagged=flagged,
        flagged_fraction=flagged / n,
        max_abs_z=float(abs_z.max()),
        abs_z=abs_z,
    )
