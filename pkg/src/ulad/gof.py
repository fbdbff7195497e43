"""Absolute-value pre-processing and the probability integral transform.

Every goodness-of-fit detector works on ``z_i = F0(|Y_i|)`` where ``F0`` is
the exponential CDF that ``|W|`` follows under H0. Under H0 the z-values are
uniform on [0, 1].
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ParameterError
from .signalgen import NoiseParams, SampleBlock
from .validation import check_blocks, check_positive

Z_FLOOR = 1e-300


@dataclass(frozen=True)
class ZBlock:
    z: np.ndarray
    x: np.ndarray
    noise: NoiseParams

    @property
    def n(self):
        return self.z.size


def _samples(block):
    return block.samples if isinstance(block, SampleBlock) else np.asarray(block, dtype=np.float64)


def flom_abs(block):
    """Lowest-order fractional moment pre-processing, ``x_i = |Y_i|``."""
    return np.abs(_samples(block))


def _rate(noise):
    return np.sqrt(2.0 / noise.variance_w)


def theoretical_cdf(x, noise):
    """``F0(x) = 1 - exp(-sqrt(2 / variance_w) * x)`` for ``x >= 0``."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ParameterError("theoretical_cdf is defined for x >= 0 only")
    out = -np.expm1(-_rate(noise) * x)
    return float(out) if out.ndim == 0 else out


def inverse_cdf(z, noise):
    """Map z-values back to magnitudes, ``x = -sqrt(variance_w / 2) * ln(1 - z)``."""
    z = np.asarray(z, dtype=np.float64)
    out = -np.log1p(-z) / _rate(noise)
    return float(out) if out.ndim == 0 else out


def empirical_cdf(x_values, query):
    """Right-continuous empirical CDF: fraction of ``x_values`` that are ``<= query``."""
    x = np.sort(np.asarray(x_values, dtype=np.float64))
    if x.size == 0:
        raise ParameterError("empirical_cdf needs a non-empty sample")
    out = np.searchsorted(x, query, side="right") / x.size
    return float(out) if np.ndim(out) == 0 else out


def z_values(y, noise):
    """Vectorised z-transform of raw samples of any shape, clamped to ``[Z_FLOOR, 1]``."""
    z = -np.expm1(-_rate(noise) * np.abs(y))
    return np.maximum(z, Z_FLOOR)


def z_transform(block, noise):
    x = flom_abs(block)
    return ZBlock(z=np.maximum(theoretical_cdf(x, noise), Z_FLOOR), x=x, noise=noise)


class ZTransformer(TransformerMixin, BaseEstimator):
    """Map each sample block to its z-values under the Laplacian null.

    Parameters
    ----------
    noise_var : float, default=1.0
        Known noise variance.
    """

    def __init__(self, noise_var=1.0):
        self.noise_var = noise_var

    def fit(self, X, y=None):
        X = check_blocks(X)
        self.noise_ = NoiseParams(check_positive(self.noise_var, "noise_var"))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "noise_")
        X = check_blocks(X)
        if X.shape[1] != self.n_features_in_:
            raise ParameterError(
                f"expected blocks of {self.n_features_in_} samples, got {X.shape[1]}"
            )
        return z_values(X, self.noise_)
