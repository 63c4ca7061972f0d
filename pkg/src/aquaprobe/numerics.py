"""Dense float64 array helpers and the seeded random generator.

Matrices and vectors are plain numpy ndarrays (2-D and 1-D, row-major,
float64). The helpers here add the shape checking the rest of the package
relies on; heavy lifting stays in numpy. All randomness in the package flows
through ``Rng``, a thin wrapper over numpy's PCG64 bit generator, so a run is
fully replayable from a single integer seed.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .errors import NumericError, ShapeError

# Type aliases: a Matrix is a 2-D float64 ndarray, a Vector is 1-D.
Matrix = np.ndarray
Vector = np.ndarray


def as_array(values, name: str = "array") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    return arr


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Matrix product with an explicit shape check naming both operands."""
    a = as_array(a)
    b = as_array(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def _check_same_shape(a: np.ndarray, b: np.ndarray, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op} expects matching shapes, got {a.shape} and {b.shape}")


def add(a, b):
    a, b = as_array(a), as_array(b)
    _check_same_shape(a, b, "add")
    return a + b


def sub(a, b):
    a, b = as_array(a), as_array(b)
    _check_same_shape(a, b, "sub")
    return a - b


def mul(a, b):
    """Elementwise (Hadamard) product."""
    a, b = as_array(a), as_array(b)
    _check_same_shape(a, b, "mul")
    return a * b


def sigmoid(x):
    """Logistic function 1 / (1 + exp(-x)), numerically stable at extremes."""
    return expit(x)


tanh = np.tanh

# np.sign maps 0 to 0, which is exactly the convention gradient-sign attacks
# need: zero-gradient entries stay untouched.
sign = np.sign


def ensure_finite(x, context: str) -> np.ndarray:
    """Raise NumericError if any entry of x is NaN or infinite."""
    arr = np.asarray(x)
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values in {context}")
    return arr


class Rng:
    """Seeded random stream backed by numpy's PCG64 bit generator.

    The algorithm is pinned: identical seeds give identical draw sequences,
    so every stochastic component in the package (data synthesis, weight
    initialization, batch shuffling, action selection) replays exactly.
    """

    def __init__(self, seed: int):
        if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
            raise ValueError(f"seed must be an integer, got {seed!r}")
        if not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must be in [0, 2**64), got {seed}")
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, lo: float, hi: float) -> float:
        """One draw from the half-open interval [lo, hi)."""
        if not lo < hi:
            raise ValueError(f"uniform needs lo < hi, got [{lo}, {hi})")
        return lo + (hi - lo) * self._gen.random()

    def uniforms(self, shape, lo: float, hi: float) -> np.ndarray:
        if not lo < hi:
            raise ValueError(f"uniforms needs lo < hi, got [{lo}, {hi})")
        return lo + (hi - lo) * self._gen.random(shape)

    def normals(self, shape, std: float = 1.0) -> np.ndarray:
        return std * self._gen.standard_normal(shape)

    def pick(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n < 1:
            raise ValueError(f"pick needs n >= 1, got {n}")
        return int(self._gen.integers(n))

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice_weighted(self, weights) -> int:
        """Index drawn with probability proportional to the given weights."""
        w = as_array(weights, "weights")
        if w.ndim != 1 or w.size == 0:
            raise ValueError(f"weights must be a non-empty 1-D array, got shape {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        total = float(w.sum())
        if total <= 0.0:
            raise ValueError("weights must not all be zero")
        u = self._gen.random() * total
        idx = int(np.searchsorted(np.cumsum(w), u, side="right"))
        return min(idx, w.size - 1)
