"""Input checks shared by the solvers, kernels and estimators."""

from __future__ import annotations

import numpy as np

MEASURE_ATOL = 1e-12


class SinkhornDivergenceError(FloatingPointError):
    """Raised when a scaling update hits a vanishing or non-finite denominator."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class SupportValidationError(ValueError):
    """Raised when the cost polynomial leaves (0, 1) on the given supports."""

    def __init__(self, i, j, value):
        super().__init__(
            f"P(x_{i}, y_{j}) = {value!r} is outside the open interval (0, 1)"
        )
        self.i = i
        self.j = j
        self.value = value


def check_vector(v, name="vector", n=None, positive=False):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ValueError(f"{name} must have length {n}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    if positive and not np.all(v > 0):
        raise ValueError(f"{name} must be strictly positive")
    return v


def check_measure(w, name="measure", n=None):
    """Return ``w`` as a float array after checking it is a positive probability vector."""
    w = check_vector(w, name=name, n=n, positive=True)
    total = w.sum()
    if abs(total - 1.0) > MEASURE_ATOL:
        raise ValueError(f"{name} must sum to 1 (got {total!r})")
    return w


def check_points(z, name="points", dim=None):
    z = np.asarray(z, dtype=np.float64)
    if dim == 1:
        if z.ndim == 2 and z.shape[1] == 1:
            z = z[:, 0]
        if z.ndim != 1:
            raise ValueError(f"{name} must be a 1-D array of coordinates")
    elif dim is not None:
        if z.ndim != 2 or z.shape[1] != dim:
            raise ValueError(f"{name} must have shape (n, {dim}), got {z.shape}")
    if z.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(z)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return z


def check_power(L):
    """Validate the integer exponent ``L = 1/epsilon`` used by the fast kernels."""
    if isinstance(L, (bool, np.bool_)) or not isinstance(L, (int, np.integer)):
        raise TypeError(f"L must be an integer, got {type(L).__name__}")
    if L < 1:
        raise ValueError(f"L must be a positive integer, got {L}")
    return int(L)


def power_from_epsilon(epsilon, rtol=1e-12):
    """Return ``L`` with ``epsilon == 1/L``; reject regularizations with non-integer inverse."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    inv = 1.0 / epsilon
    L = int(round(inv))
    if L < 1 or abs(inv - L) > rtol * inv:
        raise ValueError(
            f"the fast kernel needs 1/epsilon to be a positive integer (1/epsilon = {inv!r})"
        )
    return L
