"""Daily water-consumption series: CSV I/O, synthesis, scaling, windowing.

CSV schema (UTF-8, LF, header required):

    date,consumption_l,temp_c

``date`` is ISO-8601 (YYYY-MM-DD) on a strictly increasing daily cadence,
``consumption_l`` is litres per day (non-negative), ``temp_c`` is the daily
mean temperature. Feature order everywhere in the package is fixed:
column 0 = consumption, column 1 = temperature.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CadenceError, DataError, DegenerateFeatureError
from .numerics import Rng

CSV_HEADER = ("date", "consumption_l", "temp_c")
FEATURE_NAMES = ("consumption", "temperature")
N_FEATURES = 2
MIN_SYNTH_DAYS = 60


@dataclass
class RawSeries:
    """A validated daily series of consumption and temperature."""

    dates: list[dt.date]
    consumption: np.ndarray
    temperature: np.ndarray

    def __post_init__(self):
        self.consumption = np.asarray(self.consumption, dtype=np.float64)
        self.temperature = np.asarray(self.temperature, dtype=np.float64)
        n = len(self.dates)
        if n < 2:
            raise DataError(f"series needs at least 2 rows, got {n}")
        if self.consumption.shape != (n,) or self.temperature.shape != (n,):
            raise DataError(
                f"column lengths disagree: {n} dates, {self.consumption.shape[0]} "
                f"consumption, {self.temperature.shape[0]} temperature"
            )
        for prev, cur in zip(self.dates, self.dates[1:]):
            if (cur - prev).days != 1:
                raise CadenceError(f"dates must advance by exactly one day, broken at {cur}")
        if not np.all(np.isfinite(self.consumption)) or not np.all(np.isfinite(self.temperature)):
            raise DataError("series values must be finite")
        if np.any(self.consumption < 0):
            idx = int(np.argmax(self.consumption < 0))
            raise DataError(f"consumption must be non-negative, got {self.consumption[idx]} at row {idx}")

    def __len__(self) -> int:
        return len(self.dates)

    def features(self) -> np.ndarray:
        """(N, 2) array in the fixed [consumption, temperature] order."""
        return np.column_stack([self.consumption, self.temperature])


def load_csv(path) -> RawSeries:
    """Read and validate a series file; errors name the offending row."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty file")
    header = tuple(rows[0])
    if header != CSV_HEADER:
        raise DataError(f"{path}: expected header {','.join(CSV_HEADER)!r}, got {','.join(header)!r}")
    dates, cons, temp = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise DataError(f"{path}: row {lineno}: expected 3 fields, got {len(row)}")
        try:
            dates.append(dt.date.fromisoformat(row[0]))
        except ValueError as exc:
            raise DataError(f"{path}: row {lineno}: bad date {row[0]!r}") from exc
        try:
            cons.append(float(row[1]))
            temp.append(float(row[2]))
        except ValueError as exc:
            raise DataError(f"{path}: row {lineno}: non-numeric value") from exc
    try:
        return RawSeries(dates, np.array(cons), np.array(temp))
    except DataError:
        raise


def write_csv(series: RawSeries, path) -> None:
    """Write a series in the documented schema (floats via repr: lossless)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for d, c, t in zip(series.dates, series.consumption, series.temperature):
            fh.write(f"{d.isoformat()},{float(c)!r},{float(t)!r}\n")


@dataclass(frozen=True)
class SynthParams:
    """Components of the synthetic generator.

    Consumption is base + yearly sinusoid + weekly sinusoid + a coupling
    term proportional to the temperature deviation + Gaussian noise, floored
    at zero. Temperature is its own yearly sinusoid plus noise. Phases are
    taken modulo the period, so the noiseless signal is exactly periodic.
    """

    base: float = 400.0
    yearly_amplitude: float = 110.0
    weekly_amplitude: float = 90.0
    noise_std: float = 8.0
    temp_base: float = 16.0
    temp_amplitude: float = 9.0
    temp_noise_std: float = 1.5
    coupling: float = 4.0  # litres per degree of temperature deviation
    start: str = "2020-01-01"

    def __post_init__(self):
        if self.base <= 0:
            raise ValueError(f"base must be positive, got {self.base}")
        for name in ("yearly_amplitude", "weekly_amplitude", "noise_std", "temp_amplitude", "temp_noise_std"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        dt.date.fromisoformat(self.start)


def synthesize(rng: Rng, days: int, params: SynthParams = SynthParams()) -> RawSeries:
    """Generate a seeded synthetic daily series of the given length."""
    if days < MIN_SYNTH_DAYS:
        raise ValueError(f"days must be >= {MIN_SYNTH_DAYS}, got {days}")
    t = np.arange(days)
    yearly_phase = (t % 365) / 365.0
    weekly_phase = (t % 7) / 7.0
    temp_clean = params.temp_base + params.temp_amplitude * np.sin(2.0 * np.pi * yearly_phase)
    temp = temp_clean + (rng.normals(days, params.temp_noise_std) if params.temp_noise_std > 0 else 0.0)
    consumption = (
        params.base
        + params.yearly_amplitude * np.sin(2.0 * np.pi * yearly_phase)
        + params.weekly_amplitude * np.sin(2.0 * np.pi * weekly_phase)
        + params.coupling * (temp - params.temp_base)
    )
    if params.noise_std > 0:
        consumption = consumption + rng.normals(days, params.noise_std)
    consumption = np.maximum(consumption, 0.0)
    start = dt.date.fromisoformat(params.start)
    dates = [start + dt.timedelta(days=int(k)) for k in range(days)]
    return RawSeries(dates, consumption, temp)


@dataclass
class MinMaxScaler:
    """Per-feature affine map onto [0, 1], invertible."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        self.mins = np.asarray(self.mins, dtype=np.float64)
        self.maxs = np.asarray(self.maxs, dtype=np.float64)
        if self.mins.shape != self.maxs.shape or self.mins.ndim != 1:
            raise DataError(f"scaler bounds must be matching 1-D arrays, got {self.mins.shape} and {self.maxs.shape}")
        for k, (lo, hi) in enumerate(zip(self.mins, self.maxs)):
            if not hi > lo:
                name = FEATURE_NAMES[k] if k < len(FEATURE_NAMES) else str(k)
                raise DegenerateFeatureError(f"feature {name!r} is degenerate: min == max == {lo}")

    @classmethod
    def fit(cls, values: np.ndarray) -> "MinMaxScaler":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 2:
            raise DataError(f"fit expects an (N, F) array with N >= 2, got shape {values.shape}")
        return cls(values.min(axis=0), values.max(axis=0))

    @property
    def span(self) -> np.ndarray:
        return self.maxs - self.mins

    def transform(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        return (values - self.mins) / self.span

    def inverse(self, scaled: np.ndarray) -> np.ndarray:
        scaled = np.asarray(scaled, dtype=np.float64)
        return scaled * self.span + self.mins

    def inverse_feature(self, scaled, feature: int):
        """Invert a single feature column (e.g. consumption targets)."""
        scaled = np.asarray(scaled, dtype=np.float64)
        return scaled * self.span[feature] + self.mins[feature]


def fit_scale(series: RawSeries) -> tuple[MinMaxScaler, np.ndarray]:
    """Fit a scaler on the whole series and return (scaler, scaled values)."""
    scaler = MinMaxScaler.fit(series.features())
    return scaler, scaler.transform(series.features())


@dataclass
class WindowedDataset:
    """Sliding windows over a scaled series, split chronologically.

    X has shape (N, sequence_length, 2); y is the scaled consumption one step
    after each window. Sample i starts at row i, so splits that are contiguous
    in sample index are contiguous in time.
    """

    X: np.ndarray
    y: np.ndarray
    n_train: int
    n_val: int
    n_test: int
    sequence_length: int
    scaler: MinMaxScaler | None = None

    @property
    def train(self) -> tuple[np.ndarray, np.ndarray]:
        return self.X[: self.n_train], self.y[: self.n_train]

    @property
    def validation(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.n_train, self.n_train + self.n_val
        return self.X[lo:hi], self.y[lo:hi]

    @property
    def test(self) -> tuple[np.ndarray, np.ndarray]:
        lo = self.n_train + self.n_val
        return self.X[lo:], self.y[lo:]


def split_sizes(n_samples: int, fractions: tuple[float, float, float]) -> tuple[int, int, int]:
    """Floor the train and validation shares; the remainder goes to test."""
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ValueError(f"fractions must be three positive numbers, got {fractions}")
    if not math.isclose(sum(fractions), 1.0, rel_tol=0, abs_tol=1e-9):
        raise ValueError(f"fractions must sum to 1, got {fractions}")
    n_train = int(n_samples * fractions[0])
    n_val = int(n_samples * fractions[1])
    n_test = n_samples - n_train - n_val
    return n_train, n_val, n_test


DEFAULT_FRACTIONS = (0.7, 0.15, 0.15)


def _min_rows(sequence_length: int, fractions) -> int:
    n = 3
    while True:
        a, b, c = split_sizes(n, fractions)
        if a >= 1 and b >= 1 and c >= 1:
            return n + sequence_length
        n += 1


def window(
    scaled: np.ndarray,
    sequence_length: int,
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS,
    scaler: MinMaxScaler | None = None,
) -> WindowedDataset:
    """Cut a scaled (N, 2) series into windows and split chronologically."""
    scaled = np.asarray(scaled, dtype=np.float64)
    if scaled.ndim != 2 or scaled.shape[1] != N_FEATURES:
        raise DataError(f"expected an (N, {N_FEATURES}) scaled array, got shape {scaled.shape}")
    if sequence_length < 1:
        raise ValueError(f"sequence_length must be >= 1, got {sequence_length}")
    n_samples = scaled.shape[0] - sequence_length
    if n_samples < 3:
        raise DataError(
            f"need at least {_min_rows(sequence_length, fractions)} rows for one sample per split "
            f"(sequence_length={sequence_length}), got {scaled.shape[0]}"
        )
    n_train, n_val, n_test = split_sizes(n_samples, fractions)
    if min(n_train, n_val, n_test) < 1:
        raise DataError(
            f"need at least {_min_rows(sequence_length, fractions)} rows for one sample per split "
            f"with fractions {fractions}, got {scaled.shape[0]}"
        )
    X = np.empty((n_samples, sequence_length, N_FEATURES))
    for i in range(n_samples):
        X[i] = scaled[i : i + sequence_length]
    y = scaled[sequence_length:, 0].copy()
    return WindowedDataset(X, y, n_train, n_val, n_test, sequence_length, scaler)


def build_dataset(
    series: RawSeries,
    sequence_length: int,
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS,
    scaler: MinMaxScaler | None = None,
) -> WindowedDataset:
    """Scale a raw series and window it.

    When no scaler is given, one is fitted on the rows the training samples
    touch (windows plus targets), never on validation or test rows. Scaled
    values are clipped into [0, 1] so later splits cannot leave the unit box
    even when they exceed the training range slightly.
    """
    values = series.features()
    n_samples = len(series) - sequence_length
    if n_samples < 3:
        raise DataError(
            f"need at least {_min_rows(sequence_length, fractions)} rows "
            f"(sequence_length={sequence_length}), got {len(series)}"
        )
    if scaler is None:
        n_train, _, _ = split_sizes(n_samples, fractions)
        train_rows = n_train + sequence_length  # last training target sits at row n_train - 1 + L
        scaler = MinMaxScaler.fit(values[:train_rows])
    scaled = np.clip(scaler.transform(values), 0.0, 1.0)
    return window(scaled, sequence_length, fractions, scaler)
