"""scikit-learn compatible detectors.

Each detector takes a 2-D array ``X`` of shape ``(n_blocks, n_samples)``, one
sensing block per row, and predicts ``1`` (primary user present, H1) or ``0``
(H0). ``score_samples`` returns the raw test statistic and
``decision_function`` its margin over the threshold.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .analytic import DEFAULT_K_MAX, threshold_from_pf
from .detectors import Detector, DetectorKind, compute_values
from .exceptions import ParameterError
from .montecarlo import empirical_threshold
from .signalgen import NoiseParams
from .threshold import DEFAULT_ZETA_PF, optimal_threshold
from .validation import check_blocks, check_positive, check_probability


class _BaseDetector(ClassifierMixin, BaseEstimator):
    def _kind(self):
        raise NotImplementedError

    def _validate(self, X):
        check_is_fitted(self, "threshold_")
        X = check_blocks(X)
        if X.shape[1] != self.n_features_in_:
            raise ParameterError(
                f"detector was fitted on blocks of {self.n_features_in_} samples, got {X.shape[1]}"
            )
        return X

    def score_samples(self, X):
        """Test statistic of every block."""
        X = self._validate(X)
        return compute_values((self.kind_,), X, self.noise_)[self.kind_]

    def decision_function(self, X):
        return self.score_samples(X) - self.threshold_

    def predict(self, X):
        return (self.score_samples(X) >= self.threshold_).astype(int)


class ULADDetector(_BaseDetector):
    """Unilateral left-tail Anderson-Darling detector with an analytic threshold.

    Parameters
    ----------
    noise_var : float, default=1.0
        Known Laplacian noise variance.
    pf : float, default=0.05
        Target false-alarm probability (``threshold="pf"``).
    threshold : {"pf", "optimal"} or float, default="pf"
        ``"pf"`` sets ``Q^-1(pf) sqrt(n)``. ``"optimal"`` minimises the total
        error rate at the SNR ``snr`` subject to ``Pf <= zeta_pf``. A float is
        used as is.
    snr : float, optional
        Linear signal power, required for ``threshold="optimal"``.
    zeta_pf : float, default=0.1
    k_max : int, default=1000
        Dilogarithm series terms used by the optimal threshold.

    Attributes
    ----------
    threshold_ : float
    n_features_in_ : int
        Block length ``n`` the threshold was computed for.
    """

    def __init__(self, noise_var=1.0, pf=0.05, threshold="pf", snr=None,
                 zeta_pf=DEFAULT_ZETA_PF, k_max=DEFAULT_K_MAX):
        self.noise_var = noise_var
        self.pf = pf
        self.threshold = threshold
        self.snr = snr
        self.zeta_pf = zeta_pf
        self.k_max = k_max

    def fit(self, X, y=None):
        """Record the block length and compute the threshold; ``y`` is ignored."""
        X = check_blocks(X)
        n = X.shape[1]
        self.noise_ = NoiseParams(check_positive(self.noise_var, "noise_var"))
        self.kind_ = DetectorKind(Detector.ULAD)
        if self.threshold == "pf":
            self.threshold_ = threshold_from_pf(self.pf, n)
        elif self.threshold == "optimal":
            if self.snr is None:
                raise ParameterError("threshold='optimal' needs snr")
            self.optimum_ = optimal_threshold(self.snr, n, self.noise_, self.zeta_pf, self.k_max)
            self.threshold_ = self.optimum_.gamma_star
        elif isinstance(self.threshold, (int, float)) and np.isfinite(self.threshold):
            self.threshold_ = float(self.threshold)
        else:
            raise ParameterError(f"unsupported threshold {self.threshold!r}")
        self.n_features_in_ = n
        self.classes_ = np.array([0, 1])
        return self


class CalibratedDetector(_BaseDetector):
    """Any of the seven detectors with a threshold calibrated on noise-only blocks.

    ``fit`` expects H0 blocks and sets the threshold to the empirical
    ``(1 - pf)`` quantile of their statistics.

    Parameters
    ----------
    detector : str, default="ulad"
        One of ``ulad, ks, cm, ad, ed, avc, pom``.
    pom_p : float, optional
        Exponent for ``detector="pom"``, in (0, 2).
    noise_var : float, default=1.0
    pf : float, default=0.05
    """

    def __init__(self, detector="ulad", pom_p=None, noise_var=1.0, pf=0.05):
        self.detector = detector
        self.pom_p = pom_p
        self.noise_var = noise_var
        self.pf = pf

    def fit(self, X, y=None):
        X = check_blocks(X)
        pf = check_probability(self.pf, "pf")
        if X.shape[0] < 1.0 / pf:
            raise ParameterError(f"need at least {int(np.ceil(1 / pf))} H0 blocks, got {X.shape[0]}")
        if y is not None and np.any(np.asarray(y) != 0):
            raise ParameterError("calibration blocks must all be noise-only (y == 0)")
        self.noise_ = NoiseParams(check_positive(self.noise_var, "noise_var"))
        self.kind_ = DetectorKind.parse(self.detector, self.pom_p)
        values = compute_values((self.kind_,), X, self.noise_)[self.kind_]
        self.threshold_ = empirical_threshold(values, pf)
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        return self
