"""Gradient-sign attacks on input windows.

Both attacks perturb the scaled inputs a forecaster consumes, within an
infinity-norm budget epsilon and the valid data range (default [0, 1]).
The single-step attack takes one signed step along the loss gradient; the
iterated variant re-computes the gradient each step and projects back into
the epsilon-ball around the original window after every step.

A model is anything exposing ``input_gradients(X, y)`` returning an array
shaped like X (one window (T, F) or a stack (N, T, F)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import ensure_finite

DEFAULT_BOUNDS = (0.0, 1.0)
# Tables of damage-vs-budget are swept over this grid by default.
DEFAULT_EPSILON_GRID = (0.0, 0.001, 0.005, 0.008, 0.01)


@dataclass(frozen=True)
class AttackConfig:
    """Budget and step schedule for the iterated attack.

    alpha defaults to epsilon / 4 when not given. A step larger than the
    budget is rejected: it would make the first iterate leave the ball and
    every later iterate a pure projection artifact.
    """

    epsilon: float
    alpha: float | None = None
    iterations: int = 10
    bounds: tuple[float, float] = DEFAULT_BOUNDS
    feature_mask: tuple[bool, ...] | None = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.alpha is None:
            object.__setattr__(self, "alpha", self.epsilon / 4.0 if self.epsilon > 0 else 0.0)
        if self.epsilon > 0 and self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        lo, hi = self.bounds
        if not lo < hi:
            raise ValueError(f"bounds must satisfy lo < hi, got {self.bounds}")
        if self.epsilon > 0 and self.alpha > self.epsilon:
            raise ValueError(f"alpha ({self.alpha}) must not exceed epsilon ({self.epsilon})")


def _mask_array(feature_mask, n_features: int) -> np.ndarray | None:
    if feature_mask is None:
        return None
    mask = np.asarray(feature_mask, dtype=np.float64)
    if mask.shape != (n_features,):
        raise ValueError(f"feature_mask must have one entry per feature ({n_features}), got shape {mask.shape}")
    return mask


def _signed_step(model, X, y, scale: float, mask) -> np.ndarray:
    g = ensure_finite(model.input_gradients(X, y), "attack gradient")
    step = scale * np.sign(g)
    if mask is not None:
        step = step * mask  # broadcasts over the trailing feature axis
    return step


def fgsm(model, X, y, epsilon: float, bounds=DEFAULT_BOUNDS, feature_mask=None) -> np.ndarray:
    """One signed gradient step of size epsilon, clamped to the data range.

    Entries with exactly zero gradient are untouched (sign(0) = 0), and
    epsilon = 0 returns the input bit-for-bit.
    """
    X = np.asarray(X, dtype=np.float64)
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if epsilon == 0.0:
        return X.copy()
    lo, hi = bounds
    if not lo < hi:
        raise ValueError(f"bounds must satisfy lo < hi, got {bounds}")
    mask = _mask_array(feature_mask, X.shape[-1])
    step = _signed_step(model, X, y, epsilon, mask)
    return np.clip(X + step, lo, hi)


def pgd(model, X, y, config: AttackConfig) -> np.ndarray:
    """Iterated signed steps, projected into the epsilon-ball every step.

    With iterations = 1 and alpha = epsilon this reduces exactly to the
    single-step attack.
    """
    X = np.asarray(X, dtype=np.float64)
    if config.epsilon == 0.0:
        return X.copy()
    lo, hi = config.bounds
    mask = _mask_array(config.feature_mask, X.shape[-1])
    ball_lo = X - config.epsilon
    ball_hi = X + config.epsilon
    x_adv = X.copy()
    for _ in range(config.iterations):
        step = _signed_step(model, x_adv, y, config.alpha, mask)
        x_adv = np.clip(x_adv + step, ball_lo, ball_hi)
        np.clip(x_adv, lo, hi, out=x_adv)
    return x_adv
