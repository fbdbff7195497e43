"""Input validation helpers shared by the functional API and the estimators."""

import math

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ParameterError


def check_positive(value, name, *, strict=True):
    """Return ``value`` as a float, raising if it is not (strictly) positive."""
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(value) or value < 0 or (strict and value == 0):
        bound = "> 0" if strict else ">= 0"
        raise ParameterError(f"{name} must be finite and {bound}, got {value!r}")
    return value


def check_count(value, name, *, minimum=1):
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_probability(value, name="probability"):
    """Validate an open-interval probability ``0 < value < 1``."""
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be a real number, got {value!r}") from None
    if not 0.0 < value < 1.0:
        raise ParameterError(f"{name} must lie in (0, 1), got {value!r}")
    return value


def check_blocks(X, *, allow_single=False):
    """Validate a batch of sample blocks.

    Parameters
    ----------
    X : array-like of shape (n_blocks, n_samples)
        One row per sensing block. With ``allow_single`` a 1-D array is
        accepted and promoted to a single row.

    Returns
    -------
    ndarray of float64, shape (n_blocks, n_samples)
    """
    if allow_single and np.ndim(X) == 1:
        X = np.asarray(X, dtype=np.float64)[np.newaxis, :]
    return check_array(X, dtype=np.float64, ensure_all_finite=True)
