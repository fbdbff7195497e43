"""Spectrum sensing under Laplacian noise with the unilateral left-tail
Anderson-Darling (ULAD) detector, its closed-form performance and optimal
threshold, baseline detectors and a Monte Carlo harness."""

from .analytic import (
    PdMode,
    UladAnalytic,
    h0_moments,
    h1_moments,
    pd_ulad,
    pf_ulad,
    q_function,
    q_inverse,
    threshold_from_pf,
)
from .detectors import (
    Decision,
    Detector,
    DetectorKind,
    DetectorStatistic,
    ad_statistic,
    cm_statistic,
    decide,
    ks_statistic,
    moment_statistic,
    ulad_statistic,
)
from .estimators import CalibratedDetector, ULADDetector
from .gof import ZBlock, ZTransformer, empirical_cdf, flom_abs, theoretical_cdf, z_transform
from .montecarlo import (
    ExperimentPlan,
    McEstimate,
    calibrate_threshold,
    estimate_rate,
    roc_sweep,
    total_error_sweep,
)
from .signalgen import (
    Hypothesis,
    NoiseParams,
    SampleBlock,
    SignalKind,
    SignalSpec,
    draw_laplacian,
    draw_signal,
    make_block,
)
from .threshold import (
    ThresholdOpt,
    gamma_star,
    gamma_unconstrained,
    opt_coefficients,
    optimal_threshold,
    total_error_rate,
)

__version__ = "0.1.0"
