"""Input validation helpers used across the package."""

import math

import numpy as np


def as_float_matrix(X, name="X"):
    """Coerce to a 2-D float64 array; reject non-finite entries."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if X.size and not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def as_label_vector(y, name="y"):
    """Coerce to a 1-D int64 array of class labels."""
    y = np.asarray(y)
    if y.ndim == 0:
        y = y.reshape(1)
    if y.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {y.shape}")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        as_int = y.astype(np.int64, casting="unsafe")
        if not np.array_equal(as_int, y):
            raise ValueError(f"{name} must contain integer class labels")
        y = as_int
    return y.astype(np.int64)


def check_positive_int(value, name):
    """Require a positive integer; return it as a plain int."""
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def round_half_up(x):
    """Round to the nearest integer with exact halves rounding up."""
    return int(math.floor(x + 0.5))
