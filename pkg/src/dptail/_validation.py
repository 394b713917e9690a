"""Input validation helpers shared by every public entry point."""

import math

import numpy as np

NORMALIZATION_TOL = 1e-12


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DegenerateScaleError(DomainError):
    """A perturbation consumed the whole Dirichlet scale."""


def check_finite(x, name):
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return x


def check_positive(x, name):
    x = check_finite(x, name)
    if x <= 0:
        raise DomainError(f"{name} must be > 0, got {x!r}")
    return x


def check_unit_interval(x, name, open_left=False, open_right=False):
    x = check_finite(x, name)
    lo_bad = x <= 0 if open_left else x < 0
    hi_bad = x >= 1 if open_right else x > 1
    if lo_bad or hi_bad:
        left = "(" if open_left else "["
        right = ")" if open_right else "]"
        raise DomainError(f"{name} must lie in {left}0, 1{right}, got {x!r}")
    return x


def check_probability_vector(p, name, tol=NORMALIZATION_TOL):
    """Return ``p`` as a float array after checking it is a probability vector."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    if np.any(arr < 0):
        raise DomainError(f"{name} has negative entries")
    if abs(arr.sum() - 1.0) > tol:
        raise DomainError(f"{name} must sum to 1 (got {arr.sum()!r})")
    return arr


def check_nonneg_vector(x, name):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError(f"{name} must have finite non-negative entries")
    return arr
