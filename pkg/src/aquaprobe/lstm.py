"""A from-scratch LSTM forecaster for one-step-ahead prediction.

The network is a single LSTM layer followed by a dense head producing one
scaled value. Everything is explicit numpy: the forward pass stores what the
analytic backward pass needs, and backpropagation through time yields both
parameter gradients (for training) and input gradients (for gradient-sign
attacks). No autograd anywhere.

Shape conventions
-----------------
H = hidden units, F = input features, T = window length, N = batch size.
Gate weights act on the concatenation [h_prev; x_t]:

    w_f, w_i, w_c, w_o : (H, H + F)      b_f, b_i, b_c, b_o : (H,)
    w_dense            : (1, H)          b_dense            : float

Cell equations per step (sigma = logistic, elementwise products):

    f = sigma(w_f @ [h_prev; x] + b_f)
    i = sigma(w_i @ [h_prev; x] + b_i)
    cand = tanh(w_c @ [h_prev; x] + b_c)
    c = f * c_prev + i * cand
    o = sigma(w_o @ [h_prev; x] + b_o)
    h = o * tanh(c)

with h_0 = c_0 = 0 and prediction w_dense @ h_T + b_dense.

Batched internals carry activations as (H, N) columns so each time step is a
single matrix product; the single-window functions are the N = 1 case.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import NumericError, ShapeError, TrainingDivergedError
from .numerics import Rng, ensure_finite, sigmoid

PARAM_FIELDS = ("w_f", "w_i", "w_c", "w_o", "b_f", "b_i", "b_c", "b_o", "w_dense", "b_dense")

MODEL_TAGS = ("LSTM", "LSTM+")


@dataclass
class LstmParams:
    """All weights of one network. Arrays are float64 and owned."""

    w_f: np.ndarray
    w_i: np.ndarray
    w_c: np.ndarray
    w_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray
    w_dense: np.ndarray
    b_dense: float

    def __post_init__(self):
        for name in PARAM_FIELDS[:9]:
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        self.b_dense = float(self.b_dense)
        h, hf = self.w_f.shape if self.w_f.ndim == 2 else (0, 0)
        if h < 1 or hf <= h:
            raise ShapeError(f"w_f must be (H, H + F) with F >= 1, got {self.w_f.shape}")
        for name in ("w_i", "w_c", "w_o"):
            if getattr(self, name).shape != (h, hf):
                raise ShapeError(f"{name} must match w_f shape {(h, hf)}, got {getattr(self, name).shape}")
        for name in ("b_f", "b_i", "b_c", "b_o"):
            if getattr(self, name).shape != (h,):
                raise ShapeError(f"{name} must have shape {(h,)}, got {getattr(self, name).shape}")
        if self.w_dense.shape != (1, h):
            raise ShapeError(f"w_dense must have shape (1, {h}), got {self.w_dense.shape}")
        for name in PARAM_FIELDS:
            ensure_finite(getattr(self, name), f"LstmParams.{name}")

    @property
    def hidden(self) -> int:
        return self.w_f.shape[0]

    @property
    def features(self) -> int:
        return self.w_f.shape[1] - self.w_f.shape[0]

    def copy(self) -> "LstmParams":
        return LstmParams(**{name: np.array(getattr(self, name)) for name in PARAM_FIELDS[:9]},
                          b_dense=self.b_dense)

    # Thin method layer so attacks and campaign loops can treat any object
    # exposing predict_batch / input_gradients as a model.
    def predict(self, window: np.ndarray) -> float:
        return predict(self, window)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return predict_batch(self, X)

    def input_gradients(self, X: np.ndarray, y) -> np.ndarray:
        return input_gradients(self, X, y)


@dataclass
class CellStep:
    """Activations of one time step (single window)."""

    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    f: np.ndarray
    i: np.ndarray
    candidate: np.ndarray
    c: np.ndarray
    o: np.ndarray
    h: np.ndarray


def forward_cell(params: LstmParams, x_t, h_prev, c_prev):
    """Advance the cell one step; returns (h, c, CellStep)."""
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    hidden, features = params.hidden, params.features
    if x_t.shape != (features,):
        raise ShapeError(f"x_t must have shape {(features,)}, got {x_t.shape}")
    if h_prev.shape != (hidden,) or c_prev.shape != (hidden,):
        raise ShapeError(f"state must have shape {(hidden,)}, got {h_prev.shape} and {c_prev.shape}")
    za = np.concatenate([h_prev, x_t])
    f = sigmoid(params.w_f @ za + params.b_f)
    i = sigmoid(params.w_i @ za + params.b_i)
    cand = np.tanh(params.w_c @ za + params.b_c)
    c = f * c_prev + i * cand
    o = sigmoid(params.w_o @ za + params.b_o)
    h = o * np.tanh(c)
    return h, c, CellStep(x_t, h_prev, c_prev, f, i, cand, c, o, h)


def predict_with_trace(params: LstmParams, window: np.ndarray):
    """Run one window through the network; returns (prediction, trace)."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2 or window.shape[1] != params.features:
        raise ShapeError(f"window must be (T, {params.features}), got {window.shape}")
    h = np.zeros(params.hidden)
    c = np.zeros(params.hidden)
    trace = []
    for t in range(window.shape[0]):
        h, c, step = forward_cell(params, window[t], h, c)
        trace.append(step)
    pred = float((params.w_dense @ h)[0] + params.b_dense)
    return pred, trace


def predict(params: LstmParams, window: np.ndarray) -> float:
    return predict_with_trace(params, window)[0]


def mse_loss(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=np.float64).ravel()
    t = np.asarray(targets, dtype=np.float64).ravel()
    if p.shape != t.shape:
        raise ShapeError(f"mse_loss operands must match, got {p.shape} and {t.shape}")
    if p.size == 0:
        raise ValueError("mse_loss needs at least one sample")
    return float(np.mean((p - t) ** 2))


# ---------------------------------------------------------------------------
# Batched forward / backward


@dataclass
class _StepCache:
    za: np.ndarray       # (H + F, N) concatenated [h_prev; x_t]
    c_prev: np.ndarray   # (H, N)
    f: np.ndarray
    i: np.ndarray
    g: np.ndarray        # candidate
    o: np.ndarray
    tanh_c: np.ndarray


def _as_batch(X, y):
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 2
    if single:
        X = X[None, :, :]
        y = np.asarray([y], dtype=np.float64)
    else:
        y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 3:
        raise ShapeError(f"X must be (T, F) or (N, T, F), got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ShapeError(f"targets must have shape ({X.shape[0]},), got {y.shape}")
    return X, y, single


def _forward_batch(params: LstmParams, X: np.ndarray):
    n, t_len, n_feat = X.shape
    if n_feat != params.features:
        raise ShapeError(f"windows carry {n_feat} features, model expects {params.features}")
    hidden = params.hidden
    h = np.zeros((hidden, n))
    c = np.zeros((hidden, n))
    steps: list[_StepCache] = []
    for t in range(t_len):
        za = np.concatenate([h, X[:, t, :].T], axis=0)
        f = sigmoid(params.w_f @ za + params.b_f[:, None])
        i = sigmoid(params.w_i @ za + params.b_i[:, None])
        g = np.tanh(params.w_c @ za + params.b_c[:, None])
        o = sigmoid(params.w_o @ za + params.b_o[:, None])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        steps.append(_StepCache(za, c, f, i, g, o, tanh_c))
        h = o * tanh_c
        c = c_new
    preds = (params.w_dense @ h).ravel() + params.b_dense
    return preds, h, steps


def predict_batch(params: LstmParams, X: np.ndarray) -> np.ndarray:
    """Predictions for a stack of windows, shape (N, T, F) -> (N,)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3:
        raise ShapeError(f"predict_batch expects (N, T, F), got shape {X.shape}")
    return _forward_batch(params, X)[0]


@dataclass
class LstmGradients:
    """Gradients with the same layout as LstmParams."""

    w_f: np.ndarray
    w_i: np.ndarray
    w_c: np.ndarray
    w_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray
    w_dense: np.ndarray
    b_dense: float

    def global_norm(self) -> float:
        total = 0.0
        for name in PARAM_FIELDS:
            g = getattr(self, name)
            total += float(np.sum(np.square(g)))
        return float(np.sqrt(total))

    def scale(self, factor: float) -> None:
        for name in PARAM_FIELDS[:9]:
            g = getattr(self, name)
            g *= factor
        self.b_dense = self.b_dense * factor


def _backward_batch(params: LstmParams, X, steps, h_last, dpred):
    """BPTT given per-sample upstream gradients dpred (N,).

    Returns (gradient sums over the batch, per-sample input gradients).
    """
    n, t_len, n_feat = X.shape
    hidden = params.hidden
    zw = lambda: np.zeros_like(params.w_f)
    zb = lambda: np.zeros(hidden)
    gw_f, gw_i, gw_c, gw_o = zw(), zw(), zw(), zw()
    gb_f, gb_i, gb_c, gb_o = zb(), zb(), zb(), zb()
    gw_dense = (h_last * dpred).sum(axis=1)[None, :]
    gb_dense = float(dpred.sum())
    dX = np.zeros_like(X)
    dh = params.w_dense.T @ dpred[None, :]
    dc = np.zeros((hidden, n))
    for t in reversed(range(t_len)):
        s = steps[t]
        do = dh * s.tanh_c
        dc = dc + dh * s.o * (1.0 - s.tanh_c**2)
        df = dc * s.c_prev
        di = dc * s.g
        dg = dc * s.i
        dz_f = df * s.f * (1.0 - s.f)
        dz_i = di * s.i * (1.0 - s.i)
        dz_c = dg * (1.0 - s.g**2)
        dz_o = do * s.o * (1.0 - s.o)
        gw_f += dz_f @ s.za.T
        gw_i += dz_i @ s.za.T
        gw_c += dz_c @ s.za.T
        gw_o += dz_o @ s.za.T
        gb_f += dz_f.sum(axis=1)
        gb_i += dz_i.sum(axis=1)
        gb_c += dz_c.sum(axis=1)
        gb_o += dz_o.sum(axis=1)
        dza = params.w_f.T @ dz_f + params.w_i.T @ dz_i + params.w_c.T @ dz_c + params.w_o.T @ dz_o
        dh = dza[:hidden]
        dX[:, t, :] = dza[hidden:].T
        dc = dc * s.f
    grads = LstmGradients(gw_f, gw_i, gw_c, gw_o, gb_f, gb_i, gb_c, gb_o, gw_dense, gb_dense)
    return grads, dX


def param_gradients(params: LstmParams, X, y) -> LstmGradients:
    """Gradient of the mean squared error over the batch w.r.t. every weight."""
    X, y, _ = _as_batch(X, y)
    preds, h_last, steps = _forward_batch(params, X)
    dpred = 2.0 * (preds - y)
    grads, _ = _backward_batch(params, X, steps, h_last, dpred)
    grads.scale(1.0 / X.shape[0])  # mean-loss semantics
    return grads


def input_gradients(params: LstmParams, X, y) -> np.ndarray:
    """Gradient of each window's squared error w.r.t. its own entries.

    Accepts one window (T, F) with a scalar target, or a stack (N, T, F)
    with (N,) targets; the result matches the input shape. Per-sample
    semantics: row i is the gradient of (pred_i - y_i)^2, so the result is
    linear in the prediction residual.
    """
    X, y, single = _as_batch(X, y)
    preds, h_last, steps = _forward_batch(params, X)
    dpred = 2.0 * (preds - y)
    _, dX = _backward_batch(params, X, steps, h_last, dpred)
    return dX[0] if single else dX


# ---------------------------------------------------------------------------
# Training


@dataclass(frozen=True)
class AdversarialConfig:
    """Augment every batch with perturbed copies of itself during training."""

    kind: str = "fgsm"
    epsilon: float = 0.01
    pgd_iterations: int = 10

    def __post_init__(self):
        if self.kind not in ("fgsm", "pgd"):
            raise ValueError(f"adversarial kind must be 'fgsm' or 'pgd', got {self.kind!r}")
        if self.epsilon <= 0:
            raise ValueError(f"adversarial epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class TrainConfig:
    hidden_units: int = 16
    learning_rate: float = 0.4
    epochs: int = 80
    batch_size: int = 32
    seed: int = 7
    clip_threshold: float = 1.0
    adversarial: AdversarialConfig | None = None

    def __post_init__(self):
        if self.hidden_units < 1:
            raise ValueError(f"hidden_units must be >= 1, got {self.hidden_units}")
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.clip_threshold <= 0:
            raise ValueError(f"clip_threshold must be positive, got {self.clip_threshold}")


# Registered defaults; the '+' variant simply doubles the hidden width.
DEFAULT_TRAIN_CONFIGS = {
    "LSTM": TrainConfig(),
    "LSTM+": TrainConfig(hidden_units=32),
}


def init_params(hidden_units: int, n_features: int, rng: Rng) -> LstmParams:
    """Uniform initialization in [-1/sqrt(H), +1/sqrt(H)], fixed draw order."""
    if hidden_units < 1 or n_features < 1:
        raise ValueError(f"need hidden_units >= 1 and n_features >= 1, got {hidden_units}, {n_features}")
    bound = 1.0 / np.sqrt(hidden_units)
    wshape = (hidden_units, hidden_units + n_features)
    draw = lambda shape: rng.uniforms(shape, -bound, bound)
    return LstmParams(
        w_f=draw(wshape), w_i=draw(wshape), w_c=draw(wshape), w_o=draw(wshape),
        b_f=draw(hidden_units), b_i=draw(hidden_units), b_c=draw(hidden_units), b_o=draw(hidden_units),
        w_dense=draw((1, hidden_units)), b_dense=float(rng.uniform(-bound, bound)),
    )


@dataclass(frozen=True)
class HistoryRow:
    epoch: int
    train_mse: float
    val_mse: float


@dataclass
class TrainResult:
    params: LstmParams
    history: list[HistoryRow]


def _epoch_losses(params, X_train, y_train, X_val, y_val) -> tuple[float, float]:
    train_mse = mse_loss(predict_batch(params, X_train), y_train)
    val_mse = mse_loss(predict_batch(params, X_val), y_val) if len(y_val) else float("nan")
    return train_mse, val_mse


def train(dataset, config: TrainConfig, params0: LstmParams | None = None) -> TrainResult:
    """Mini-batch gradient descent with global gradient-norm clipping.

    Deterministic given (seed, config, dataset): initialization and the
    per-epoch shuffle both come from one seeded stream. Epoch 0 in the
    history is the untrained loss. Raises TrainingDivergedError if a loss
    turns non-finite.
    """
    from . import attacks  # deferred: attacks is pure numpy over the model protocol

    X_train, y_train = dataset.train
    X_val, y_val = dataset.validation
    if len(y_train) == 0:
        raise ValueError("training split is empty")
    rng = Rng(config.seed)
    params = params0.copy() if params0 is not None else init_params(
        config.hidden_units, X_train.shape[2], rng
    )
    history = []
    train_mse, val_mse = _epoch_losses(params, X_train, y_train, X_val, y_val)
    if not np.isfinite(train_mse):
        raise TrainingDivergedError(0)
    history.append(HistoryRow(0, train_mse, val_mse))
    n = len(y_train)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            Xb, yb = X_train[idx], y_train[idx]
            if config.adversarial is not None:
                adv = config.adversarial
                if adv.kind == "fgsm":
                    Xa = attacks.fgsm(params, Xb, yb, adv.epsilon)
                else:
                    Xa = attacks.pgd(
                        params, Xb, yb,
                        attacks.AttackConfig(
                            epsilon=adv.epsilon,
                            alpha=adv.epsilon / 4.0,
                            iterations=adv.pgd_iterations,
                        ),
                    )
                Xb = np.concatenate([Xb, Xa], axis=0)
                yb = np.concatenate([yb, yb])
            grads = param_gradients(params, Xb, yb)
            norm = grads.global_norm()
            if not np.isfinite(norm):
                raise TrainingDivergedError(epoch)
            if norm > config.clip_threshold:
                grads.scale(config.clip_threshold / norm)
            lr = config.learning_rate
            for name in PARAM_FIELDS[:9]:
                arr = getattr(params, name)
                arr -= lr * getattr(grads, name)
            params.b_dense -= lr * grads.b_dense
        train_mse, val_mse = _epoch_losses(params, X_train, y_train, X_val, y_val)
        if not np.isfinite(train_mse) or (len(y_val) and not np.isfinite(val_mse)):
            raise TrainingDivergedError(epoch)
        history.append(HistoryRow(epoch, train_mse, val_mse))
    return TrainResult(params, history)


def write_history_csv(history: list[HistoryRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,train_mse,val_mse\n")
        for row in history:
            fh.write(f"{row.epoch},{row.train_mse!r},{row.val_mse!r}\n")
