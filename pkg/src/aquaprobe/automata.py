"""Adaptive perturbation scheduling with learning automata.

A learning automaton keeps a probability vector over a small set of
perturbation budgets (epsilons). Each campaign iteration it samples one
budget (or a random subset of budgets), attacks the evaluation windows,
measures the percentage error of the resulting forecasts, and then nudges
the probabilities: budgets that keep the damage inside a target band are
rewarded, budgets that overshoot a hard cap or jump the error too fast are
penalized, everything else is left alone. A small delay line between attack
generation and attack delivery decouples the two in time, which makes the
poisoned stream harder to pin to any single scheduling decision.

Update rules on the probability vector P with chosen index a:

    reward:   P[a] += r * (1 - P[a]); the others are rescaled to share
              the remaining mass (the vector stays a simplex exactly)
    penalize: P[a] *= (1 - p); then the whole vector is renormalized
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .attacks import DEFAULT_BOUNDS, fgsm
from .errors import ShapeError
from .numerics import Rng

# Default action set of perturbation budgets.
DEFAULT_ACTIONS = (0.0001, 0.0005, 0.001, 0.0025, 0.005)

JUDGE_REWARD = "reward"
JUDGE_PENALIZE = "penalize"
JUDGE_NOOP = "noop"


@dataclass(frozen=True)
class RewardPolicy:
    """Damage band and update factors steering the automaton.

    Forecast damage (percentage error) inside ``band`` is rewarded with
    factor ``reward_factor``. Damage above ``mape_cap`` draws a heavy
    penalty (3x); a per-iteration increase above ``jump_cap`` percentage
    points draws a moderate one (1.5x); the plain factor applies otherwise.
    """

    reward_factor: float = 0.1
    penalty_factor: float = 0.05
    band: tuple[float, float] = (30.0, 50.0)
    mape_cap: float = 100.0
    jump_cap: float = 5.0

    def __post_init__(self):
        if not 0.0 < self.reward_factor < 1.0:
            raise ValueError(f"reward_factor must be in (0, 1), got {self.reward_factor}")
        if not 0.0 < self.penalty_factor < 1.0:
            raise ValueError(f"penalty_factor must be in (0, 1), got {self.penalty_factor}")
        if 3.0 * self.penalty_factor >= 1.0:
            raise ValueError(f"penalty_factor must stay below 1/3 so the heavy penalty is valid, got {self.penalty_factor}")
        lo, hi = self.band
        if not lo < hi < self.mape_cap:
            raise ValueError(f"band must satisfy lo < hi < mape_cap, got {self.band} with cap {self.mape_cap}")
        if self.jump_cap <= 0:
            raise ValueError(f"jump_cap must be positive, got {self.jump_cap}")


def adaptive_penalty(policy: RewardPolicy, mape: float, delta_mape: float) -> float:
    """Penalty factor scaled by how badly the damage overshoots.

    First matching rule wins: 3p above the hard cap, 1.5p when the
    per-iteration jump exceeds the jump cap, p otherwise.
    """
    if mape > policy.mape_cap:
        return 3.0 * policy.penalty_factor
    if delta_mape > policy.jump_cap:
        return 1.5 * policy.penalty_factor
    return policy.penalty_factor


@dataclass(frozen=True)
class Judgement:
    kind: str          # one of JUDGE_REWARD / JUDGE_PENALIZE / JUDGE_NOOP
    factor: float      # reward or effective penalty factor; 0 for noop


def judge(policy: RewardPolicy, mape: float, delta_mape: float) -> Judgement:
    """Map one iteration's damage onto a reward, a penalty, or nothing.

    Damage inside the band is rewarded. Outside it, penalties apply only
    for overshoot (hard cap) or a too-fast jump; undershoot is left alone
    so the automaton keeps exploring.
    """
    lo, hi = policy.band
    if lo < mape < hi:
        return Judgement(JUDGE_REWARD, policy.reward_factor)
    if mape > policy.mape_cap:
        return Judgement(JUDGE_PENALIZE, 3.0 * policy.penalty_factor)
    if delta_mape > policy.jump_cap:
        return Judgement(JUDGE_PENALIZE, 1.5 * policy.penalty_factor)
    return Judgement(JUDGE_NOOP, 0.0)


def validate_actions(actions) -> tuple[float, ...]:
    actions = tuple(float(a) for a in actions)
    if not actions:
        raise ValueError("action set must not be empty")
    if any(a <= 0 for a in actions):
        raise ValueError(f"actions must be positive epsilons, got {actions}")
    if any(b <= a for a, b in zip(actions, actions[1:])):
        raise ValueError(f"actions must be strictly increasing, got {actions}")
    return actions


class LearningAutomaton:
    """Probability vector over an action set, with reward/penalize updates."""

    def __init__(self, actions=DEFAULT_ACTIONS, rng: Rng | None = None, probs=None):
        self.actions = validate_actions(actions)
        self._rng = rng if rng is not None else Rng(0)
        n = len(self.actions)
        if probs is None:
            self._probs = np.full(n, 1.0 / n)
        else:
            self._probs = np.asarray(probs, dtype=np.float64).copy()
            if self._probs.shape != (n,):
                raise ShapeError(f"probs must have shape ({n},), got {self._probs.shape}")
            if np.any(self._probs < 0) or not np.isclose(self._probs.sum(), 1.0, atol=1e-9):
                raise ValueError("probs must be non-negative and sum to 1")

    @property
    def probs(self) -> np.ndarray:
        return self._probs.copy()

    def select(self) -> tuple[int, float]:
        """Sample one action; the probability vector is left unchanged."""
        idx = self._rng.choice_weighted(self._probs)
        return idx, self.actions[idx]

    def select_multi(self, k_domain=(1, 2, 3)) -> tuple[tuple[int, float], ...]:
        """Sample k distinct actions, k drawn uniformly from k_domain.

        Actions are drawn without replacement, weighted by the current
        probabilities; if the remaining mass hits zero (a one-hot vector
        asked for more actions), the leftover picks are uniform. The result
        is ordered by ascending epsilon. A singleton k_domain consumes no
        randomness for the k draw, so k_domain = {1} replays exactly like
        ``select``.
        """
        ks = sorted(set(int(k) for k in k_domain))
        if not ks:
            raise ValueError("k_domain must not be empty")
        if ks[0] < 1 or ks[-1] > 3:
            raise ValueError(f"k_domain must be a subset of {{1, 2, 3}}, got {tuple(ks)}")
        if ks[-1] > len(self.actions):
            raise ValueError(f"k_domain maximum {ks[-1]} exceeds the {len(self.actions)} available actions")
        k = ks[0] if len(ks) == 1 else ks[self._rng.pick(len(ks))]
        remaining = self._probs.copy()
        chosen: list[int] = []
        for _ in range(k):
            if remaining.sum() <= 0.0:
                leftovers = np.ones_like(remaining)
                leftovers[chosen] = 0.0
                idx = self._rng.choice_weighted(leftovers)
            else:
                idx = self._rng.choice_weighted(remaining)
            chosen.append(idx)
            remaining[idx] = 0.0
        chosen.sort()
        return tuple((i, self.actions[i]) for i in chosen)

    def reward(self, index: int, r: float) -> None:
        """Pull the chosen probability toward 1 by factor r."""
        if not 0.0 < r < 1.0:
            raise ValueError(f"reward factor must be in (0, 1), got {r}")
        p = self._probs
        p[index] += r * (1.0 - p[index])
        others = np.arange(p.size) != index
        others_sum = p[others].sum()
        if others_sum > 0.0:
            # the others share the remaining mass, keeping the simplex exact
            p[others] *= (1.0 - p[index]) / others_sum

    def penalize(self, index: int, factor: float) -> None:
        """Shrink the chosen probability by the factor, then renormalize."""
        if not 0.0 < factor < 1.0:
            raise ValueError(f"penalty factor must be in (0, 1), got {factor}")
        p = self._probs
        p[index] *= 1.0 - factor
        p /= p.sum()


@dataclass(frozen=True)
class RlaConfig:
    """Settings for the randomized multi-action scheduler."""

    k_domain: tuple[int, ...] = (1, 2, 3)
    policy: RewardPolicy = field(default_factory=RewardPolicy)
    combine: str = "sequential"  # or "single_gradient"

    def __post_init__(self):
        ks = sorted(set(int(k) for k in self.k_domain))
        if not ks or ks[0] < 1 or ks[-1] > 3:
            raise ValueError(f"k_domain must be a non-empty subset of {{1, 2, 3}}, got {self.k_domain}")
        if self.combine not in ("sequential", "single_gradient"):
            raise ValueError(f"combine must be 'sequential' or 'single_gradient', got {self.combine!r}")


def apply_multi(model, X, y, epsilons, bounds=DEFAULT_BOUNDS, combine: str = "sequential") -> np.ndarray:
    """Apply several budgets to the same windows.

    ``sequential`` composes single-step attacks in ascending epsilon order,
    re-computing the gradient after each step. ``single_gradient`` takes all
    sign-steps from the gradient at the original windows in one go, clamped
    once. A singleton set is exactly the plain single-step attack.
    """
    epsilons = sorted(float(e) for e in epsilons)
    if not epsilons:
        raise ValueError("epsilons must not be empty")
    if combine == "sequential":
        x_adv = np.asarray(X, dtype=np.float64)
        for eps in epsilons:
            x_adv = fgsm(model, x_adv, y, eps, bounds)
        return x_adv
    if combine == "single_gradient":
        X = np.asarray(X, dtype=np.float64)
        total = sum(epsilons)
        return fgsm(model, X, y, total, bounds)
    raise ValueError(f"combine must be 'sequential' or 'single_gradient', got {combine!r}")


class DelayBuffer:
    """Emit stored windows a fixed number of iterations after they arrive.

    ``push(stored, clean)`` stores the freshly generated windows and returns
    what should actually be delivered this iteration: the windows stored
    ``delay`` iterations ago, or the clean windows while the line is still
    filling. delay = 0 is a passthrough.
    """

    def __init__(self, delay: int):
        if delay < 0:
            raise ValueError(f"delay must be >= 0, got {delay}")
        self.delay = delay
        self._line: deque = deque(maxlen=delay + 1)

    def push(self, stored, clean):
        self._line.append(stored)
        if len(self._line) > self.delay:
            return self._line[0]
        return clean


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    epsilons: tuple[float, ...]
    mape: float
    delta_mape: float
    judgement: str
    probs: tuple[float, ...]


@dataclass
class CampaignResult:
    """Everything one campaign run produced, ready for reporting."""

    actions: tuple[float, ...]
    baseline_mape: float
    rows: list[TraceRow]
    positions: np.ndarray
    clean_stream: np.ndarray
    attacked_stream: np.ndarray
    actual: np.ndarray
    clean_pred: np.ndarray
    attacked_pred: np.ndarray

    @property
    def mean_mape(self) -> float:
        return float(np.mean([row.mape for row in self.rows]))

    @property
    def final_probs(self) -> tuple[float, ...]:
        return self.rows[-1].probs


def _campaign(model, dataset, automaton, policy, iterations, delay, bounds, select_fn, combine):
    """Shared campaign walker: select, attack, delay, measure, judge, update."""
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if dataset.scaler is None:
        raise ValueError("campaigns need a dataset carrying its scaler for inverse-scaling")
    X_eval, y_eval = dataset.test
    n_eval = len(y_eval)
    if n_eval == 0:
        raise ValueError("campaigns need a non-empty test split")
    scaler = dataset.scaler
    actual = scaler.inverse_feature(y_eval, 0)
    clean_pred = scaler.inverse_feature(model.predict_batch(X_eval), 0)
    baseline = metrics.mape(actual, clean_pred)
    clean_last = scaler.inverse_feature(X_eval[:, -1, 0], 0)
    buffer = DelayBuffer(delay)
    prev = baseline
    rows: list[TraceRow] = []
    positions = np.arange(iterations) % n_eval
    attacked_stream = np.empty(iterations)
    attacked_pred_at = np.empty(iterations)
    for t in range(iterations):
        chosen = select_fn()
        eps_set = tuple(e for _, e in chosen)
        x_adv = apply_multi(model, X_eval, y_eval, eps_set, bounds, combine)
        x_eff = buffer.push(x_adv, X_eval)
        pred = scaler.inverse_feature(model.predict_batch(x_eff), 0)
        m = metrics.mape(actual, pred)
        delta = m - prev
        verdict = judge(policy, m, delta)
        if verdict.kind == JUDGE_REWARD:
            for idx, _ in chosen:
                automaton.reward(idx, verdict.factor)
        elif verdict.kind == JUDGE_PENALIZE:
            for idx, _ in chosen:
                automaton.penalize(idx, verdict.factor)
        pos = int(positions[t])
        attacked_stream[t] = scaler.inverse_feature(x_eff[pos, -1, 0], 0)
        attacked_pred_at[t] = pred[pos]
        rows.append(TraceRow(t, eps_set, m, delta, verdict.kind, tuple(float(p) for p in automaton.probs)))
        prev = m
    return CampaignResult(
        actions=automaton.actions,
        baseline_mape=baseline,
        rows=rows,
        positions=positions,
        clean_stream=clean_last[positions],
        attacked_stream=attacked_stream,
        actual=actual[positions],
        clean_pred=clean_pred[positions],
        attacked_pred=attacked_pred_at,
    )


def la_attack_loop(
    model,
    dataset,
    policy: RewardPolicy,
    iterations: int,
    *,
    actions=DEFAULT_ACTIONS,
    seed: int = 0,
    rng: Rng | None = None,
    delay: int = 3,
    bounds=DEFAULT_BOUNDS,
) -> CampaignResult:
    """Single-action scheduling campaign.

    A one-element action set degenerates into a constant-budget campaign
    (the probability vector is stuck at 1), which is the natural baseline
    to compare schedules against.
    """
    automaton = LearningAutomaton(actions, rng or Rng(seed))
    return _campaign(
        model, dataset, automaton, policy, iterations, delay, bounds,
        select_fn=lambda: (automaton.select(),), combine="sequential",
    )


def rla_attack_loop(
    model,
    dataset,
    config: RlaConfig,
    iterations: int,
    *,
    actions=DEFAULT_ACTIONS,
    seed: int = 0,
    rng: Rng | None = None,
    delay: int = 3,
    bounds=DEFAULT_BOUNDS,
) -> CampaignResult:
    """Multi-action scheduling campaign: each iteration applies a random
    subset of budgets and judges them together."""
    automaton = LearningAutomaton(actions, rng or Rng(seed))
    return _campaign(
        model, dataset, automaton, config.policy, iterations, delay, bounds,
        select_fn=lambda: automaton.select_multi(config.k_domain), combine=config.combine,
    )


# ---------------------------------------------------------------------------
# Trace persistence

def _prob_headers(actions) -> list[str]:
    return [f"p_{a!r}" for a in actions]


def write_trace_csv(rows: list[TraceRow], actions, path) -> None:
    """Schema: iteration,epsilons,mape,delta_mape,judgement,p_<eps>...
    with multi-action epsilon sets joined by ';'."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "epsilons", "mape", "delta_mape", "judgement", *_prob_headers(actions)])
        for row in rows:
            writer.writerow([
                row.iteration,
                ";".join(repr(e) for e in row.epsilons),
                repr(row.mape),
                repr(row.delta_mape),
                row.judgement,
                *[repr(p) for p in row.probs],
            ])


def read_trace_csv(path) -> list[TraceRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for rec in reader:
            rows.append(TraceRow(
                iteration=int(rec[0]),
                epsilons=tuple(float(e) for e in rec[1].split(";")),
                mape=float(rec[2]),
                delta_mape=float(rec[3]),
                judgement=rec[4],
                probs=tuple(float(p) for p in rec[5:]),
            ))
    return rows
