"""Acceptance checks for the tool's headline behaviors.

Each test covers one acceptance criterion at desk scale and prints a single
pass/fail line (visible under ``pytest -s``) before asserting, so a full run
doubles as a checklist. Criteria that depend on trained forecasters share
one trio of models trained on three seeds.
"""

import json
import os
import time

import numpy as np
import pytest

import aquaprobe as aq
from aquaprobe.attacks import AttackConfig, fgsm, pgd
from aquaprobe.automata import (
    DEFAULT_ACTIONS,
    DelayBuffer,
    JUDGE_NOOP,
    JUDGE_PENALIZE,
    JUDGE_REWARD,
    LearningAutomaton,
    RewardPolicy,
    judge,
    la_attack_loop,
)
from aquaprobe.cli import main
from aquaprobe.detect import rolling_zscore_report
from aquaprobe.lstm import input_gradients, param_gradients, PARAM_FIELDS
from aquaprobe.metrics import evaluate, mae, mape, rmse
from aquaprobe.modelfile import SavedModel
from aquaprobe.numerics import Rng
from aquaprobe.runner import sweep_rows

from helpers import (
    fd_input_gradients,
    fd_param_gradients,
    gradients_close,
    rand_params,
    stub_environment,
)

SEEDS = (101, 202, 303)
SWEEP_GRID = (0.0, 0.001, 0.005, 0.008, 0.01)


def _record(number: int, ok: bool, detail: str) -> None:
    print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {number}: {detail}"


@pytest.fixture(scope="module")
def trio():
    """Three independently seeded trained forecasters with their datasets."""
    out = []
    for seed in SEEDS:
        series = aq.synthesize(aq.Rng(seed), 1460)
        dataset = aq.build_dataset(series, 30)
        result = aq.train(dataset, aq.TrainConfig(seed=seed))
        saved = SavedModel(params=result.params, scaler=dataset.scaler,
                           sequence_length=30, tag="LSTM")
        out.append((seed, saved, dataset))
    return out


def test_01_gradients_match_finite_differences():
    t0 = time.monotonic()
    gen = np.random.default_rng(555)
    n_configs = 20
    n_ok = 0
    for i in range(n_configs):
        hidden = int(gen.integers(2, 9))
        seq = int(gen.integers(2, 13))
        n = int(gen.integers(1, 4))
        params = rand_params(1000 + i, hidden, 2)
        X = gen.uniform(0.0, 1.0, (n, seq, 2))
        y = gen.uniform(0.0, 1.0, n)
        analytic = param_gradients(params, X, y)
        numeric = fd_param_gradients(params, X, y)
        params_ok = all(
            gradients_close(getattr(analytic, name), numeric[name])
            for name in PARAM_FIELDS
        )
        inputs_ok = gradients_close(input_gradients(params, X, y),
                                    fd_input_gradients(params, X, y))
        n_ok += params_ok and inputs_ok
    elapsed = time.monotonic() - t0
    _record(1, n_ok == n_configs and elapsed < 60.0,
            f"{n_ok}/{n_configs} random configurations within tolerance in {elapsed:.1f}s")


def test_02_default_training_converges_on_clean_data():
    t0 = time.monotonic()
    params = aq.SynthParams(noise_std=0.0, temp_noise_std=0.0)
    series = aq.synthesize(aq.Rng(11), 1460, params)
    dataset = aq.build_dataset(series, 30)
    result = aq.train(dataset, aq.TrainConfig(seed=11))
    ratio = result.history[-1].train_mse / result.history[0].train_mse
    elapsed = time.monotonic() - t0
    _record(2, ratio < 0.1 and len(result.history) - 1 <= 200 and elapsed < 300.0,
            f"train MSE ratio {ratio:.2e} after {len(result.history) - 1} epochs in {elapsed:.1f}s")


def test_03_damage_grows_with_single_step_budget(trio):
    passing = 0
    bumps = []
    for seed, saved, dataset in trio:
        mapes = [r["mape"] for r in sweep_rows(saved, dataset, "fgsm", SWEEP_GRID)]
        monotone = all(b >= a for a, b in zip(mapes, mapes[1:]))
        bump = mapes[-1] - mapes[0]
        bumps.append(bump)
        passing += monotone and bump >= 2.0
    _record(3, passing == 3,
            f"{passing}/3 seeds non-decreasing with bumps {[round(b, 2) for b in bumps]} pp")


def test_04_iterated_attack_dominates_single_step(trio):
    grid = (0.005, 0.008, 0.01)
    worst = np.inf
    for seed, saved, dataset in trio:
        fg = {r["epsilon"]: r["mape"] for r in sweep_rows(saved, dataset, "fgsm", grid)}
        pg = {r["epsilon"]: r["mape"] for r in sweep_rows(saved, dataset, "pgd", grid, 10)}
        for eps in grid:
            worst = min(worst, pg[eps] - fg[eps])
    _record(4, worst >= -0.1,
            f"worst iterated-minus-single-step margin {worst:.4f} pp across 9 rows")


def test_05_zero_budget_is_bit_exact_neutral(trio):
    seed, saved, dataset = trio[0]
    X_test, y_test = dataset.test
    scaler = dataset.scaler
    clean = evaluate(scaler.inverse_feature(y_test, 0),
                     scaler.inverse_feature(saved.params.predict_batch(X_test), 0))
    ok = True
    for kind in ("fgsm", "pgd"):
        row = sweep_rows(saved, dataset, kind, (0.0,))[0]
        ok = ok and (row["mae"], row["rmse"], row["mape"]) == (clean.mae, clean.rmse, clean.mape)
    _record(5, ok, "zero-budget sweep rows equal the plain evaluation bit for bit")


def test_06_attacks_respect_ball_and_bounds():
    gen = np.random.default_rng(2024)
    params = rand_params(77, hidden=4, features=2)
    violations = 0
    invocations = 10_000
    for i in range(invocations):
        X = gen.uniform(0.0, 1.0, (6, 2))
        y = float(gen.uniform(0.0, 1.0))
        eps = float(10.0 ** gen.uniform(-4, -0.7))
        if i % 2 == 0:
            x_adv = fgsm(params, X, y, eps)
        else:
            config = AttackConfig(epsilon=eps, alpha=eps / 2.0,
                                  iterations=int(gen.integers(1, 4)))
            x_adv = pgd(params, X, y, config)
        if np.max(np.abs(x_adv - X)) > eps + 1e-12:
            violations += 1
        elif x_adv.min() < 0.0 or x_adv.max() > 1.0:
            violations += 1
    _record(6, violations == 0,
            f"{violations} violations over {invocations} randomized invocations")


def test_07_probability_update_hand_values():
    la = LearningAutomaton(DEFAULT_ACTIONS, Rng(0))
    la.reward(2, 0.1)
    reward_ok = tuple(la.probs) == (0.18, 0.18, 0.28, 0.18, 0.18)

    la = LearningAutomaton(DEFAULT_ACTIONS, Rng(0))
    la.penalize(0, 0.1)
    pen_ok = la.probs[0] == pytest.approx(0.18 / 0.98, rel=1e-12) and all(
        p == pytest.approx(0.2 / 0.98, rel=1e-12) for p in la.probs[1:]
    )

    policy = RewardPolicy()
    table = (
        ((40.0, 1.0), (JUDGE_REWARD, 0.1)),
        ((150.0, 0.0), (JUDGE_PENALIZE, 3.0 * 0.05)),
        ((20.0, 6.0), (JUDGE_PENALIZE, 1.5 * 0.05)),
        ((20.0, 1.0), (JUDGE_NOOP, 0.0)),
    )
    branches = tuple(
        (verdict.kind, verdict.factor) == want
        for verdict, want in ((judge(policy, m, d), want) for (m, d), want in table)
    )
    _record(7, reward_ok and pen_ok and all(branches),
            "reward and penalize hand values exact, feedback branch table exact")


def test_08_scheduler_locks_onto_band_action():
    model, dataset = stub_environment()
    result = la_attack_loop(model, dataset, RewardPolicy(), 300,
                            actions=(0.01, 0.02, 0.03, 0.04, 0.05), seed=0, delay=0)
    p_band = result.rows[99].probs[2]
    tail_ok = all(row.mape < 100.0 for row in result.rows[100:])
    _record(8, p_band >= 0.9 and tail_ok,
            f"band action probability {p_band:.4f} at iteration 100, tail MAPE < 100%")


def test_09_delay_line_identity():
    clean = object()
    ok = True
    for delay in (0, 1, 3, 7):
        buffer = DelayBuffer(delay)
        for t in range(100):
            emitted = buffer.push(t, clean)
            expected = t - delay if t >= delay else clean
            ok = ok and emitted == expected
    _record(9, ok, "emitted(t) = stored(t - a) for a in {0, 1, 3, 7} over 100 iterations")


def test_10_metrics_match_direct_loop_oracle():
    gen = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        n = int(gen.integers(1, 40))
        yt = gen.uniform(10.0, 500.0, n)
        yp = gen.uniform(0.0, 600.0, n)
        o_mae = sum(abs(a - b) for a, b in zip(yt, yp)) / n
        o_rmse = (sum((a - b) ** 2 for a, b in zip(yt, yp)) / n) ** 0.5
        o_mape = 100.0 / n * sum(abs((a - b) / a) for a, b in zip(yt, yp))
        for got, want in ((mae(yt, yp), o_mae), (rmse(yt, yp), o_rmse), (mape(yt, yp), o_mape)):
            worst = max(worst, abs(got - want) / abs(want))
    try:
        mape([3.0, 0.0], [1.0, 1.0])
        zero_raises = False
    except ValueError:
        zero_raises = True
    _record(10, worst <= 1e-12 and zero_raises,
            f"worst relative disagreement {worst:.2e} over 100 pairs, zero target raises")


def test_11_adaptive_schedule_no_more_visible_than_matched_constant(trio):
    policy = RewardPolicy()
    passing = 0
    details = []
    for seed, saved, dataset in trio:
        adaptive = la_attack_loop(saved.params, dataset, policy, 300, seed=seed, delay=3)
        a_flag = rolling_zscore_report(adaptive.clean_stream,
                                       adaptive.attacked_stream).flagged_fraction
        best = None
        for action in DEFAULT_ACTIONS:
            const = la_attack_loop(saved.params, dataset, policy, 300,
                                   actions=(action,), seed=seed, delay=3)
            diff = abs(const.mean_mape - adaptive.mean_mape)
            if best is None or diff < best[0]:
                best = (diff, const)
        diff, const = best
        c_flag = rolling_zscore_report(const.clean_stream,
                                       const.attacked_stream).flagged_fraction
        ok = diff <= 3.0 and a_flag <= c_flag
        passing += ok
        details.append(f"seed {seed}: dMAPE {diff:.2f}pp flags {a_flag:.4f}<={c_flag:.4f} {ok}")
    _record(11, passing >= 2, "; ".join(details))


def test_12_pipeline_is_deterministic_end_to_end(tmp_path, monkeypatch):
    def pipeline(cwd):
        monkeypatch.chdir(cwd)
        steps = [
            ["generate-data", "--out", "run", "--seed", "21", "--days", "400"],
            ["train", "--out", "run", "--seed", "21", "--data", "run/data.csv",
             "--epochs", "12", "--hidden-units", "8", "--sequence-length", "15",
             "--no-plots"],
            ["attack", "--kind", "fgsm", "--model", "run/model.json",
             "--data", "run/data.csv", "--out", "run", "--seed", "21", "--no-plots"],
            ["report", "--out", "run"],
        ]
        for argv in steps:
            assert main(argv) == 0, f"step failed: {argv}"
        with open(cwd / "run" / "report.json", encoding="utf-8") as fh:
            report = json.load(fh)
        report.pop("generated_at")
        return report

    first_dir = tmp_path / "first"
    second_dir = tmp_path / "second"
    os.makedirs(first_dir)
    os.makedirs(second_dir)
    first = pipeline(first_dir)
    second = pipeline(second_dir)
    same_model = ((first_dir / "run" / "model.json").read_bytes()
                  == (second_dir / "run" / "model.json").read_bytes())
    _record(12, first == second and same_model,
            "two runs from different working directories agree apart from the timestamp")
