"""Monte Carlo estimation of false-alarm and detection rates.

Trials run in fixed-size chunks. Chunk ``k`` of stream ``s`` draws from
``SeedSequence(seed, spawn_key=(s, k))``, so results depend only on the seed
and the chunk size, never on how many workers execute the chunks.
Calibration uses its own stream, disjoint from the evaluation streams.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import IntEnum
import math
import warnings

import numpy as np

from .analytic import threshold_from_pf
from .detectors import ULAD, Detector, DetectorKind, compute_values
from .exceptions import ParameterError, PrecisionWarning
from .signalgen import Hypothesis, NoiseParams, SignalSpec, db_to_linear, make_blocks
from .validation import check_count, check_probability

DEFAULT_TRIALS = 100_000
DEFAULT_CHUNK = 1024


class Stream(IntEnum):
    H0 = 0
    H1 = 1
    CALIBRATION = 2


@dataclass(frozen=True)
class ExperimentPlan:
    noise: NoiseParams = field(default_factory=NoiseParams)
    signal: SignalSpec = field(default_factory=SignalSpec)
    n: int = 1000
    trials: int = DEFAULT_TRIALS
    detector: DetectorKind = ULAD
    target_pf: float | None = None
    gamma_override: float | None = None
    seed: int = 0
    rho_grid_db: tuple | None = None
    gamma_grid: tuple | None = None
    calib_trials: int = DEFAULT_TRIALS
    chunk_size: int = DEFAULT_CHUNK
    workers: int = 1

    def __post_init__(self):
        check_count(self.n, "n")
        check_count(self.trials, "trials")
        check_count(self.calib_trials, "calib_trials")
        check_count(self.chunk_size, "chunk_size")
        check_count(self.workers, "workers")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.target_pf is not None:
            check_probability(self.target_pf, "target_pf")
        if self.target_pf is not None and self.gamma_override is not None:
            raise ParameterError("give either target_pf or gamma_override, not both")

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class McEstimate:
    p_hat: float
    trials: int
    std_err: float
    seed: int

    @classmethod
    def from_hits(cls, hits, trials, seed):
        p = hits / trials
        return cls(p, trials, math.sqrt(p * (1.0 - p) / trials), seed)


def _chunk_sizes(total, chunk):
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])


def _chunk_rng(seed, stream, index):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.PCG64(ss))


def sample_statistics(plan, truth, kinds=None, *, trials=None, stream=None, snr_linear=None):
    """Draw ``trials`` blocks under ``truth`` and score them.

    Returns a dict mapping each detector kind to a float array of statistics,
    in trial order.
    """
    truth = Hypothesis(truth)
    kinds = tuple(kinds) if kinds is not None else (plan.detector,)
    trials = plan.trials if trials is None else check_count(trials, "trials")
    if stream is None:
        stream = Stream.H1 if truth is Hypothesis.H1 else Stream.H0
    signal = plan.signal if snr_linear is None else plan.signal.with_snr(snr_linear)

    def run(args):
        index, size = args
        rng = _chunk_rng(plan.seed, stream, index)
        y = make_blocks(plan.noise, signal, truth, plan.n, size, rng)
        return compute_values(kinds, y, plan.noise)

    jobs = list(enumerate(_chunk_sizes(trials, plan.chunk_size)))
    if plan.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=plan.workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]
    return {k: np.concatenate([p[k] for p in parts]) for k in kinds}


def rate_at(values, threshold, seed):
    """Fraction of statistics at or above ``threshold``."""
    hits = int(np.count_nonzero(np.asarray(values) >= threshold))
    return McEstimate.from_hits(hits, len(values), seed)


def estimate_rate(plan, truth, threshold):
    """Empirical probability that the plan's detector declares H1 under ``truth``."""
    values = sample_statistics(plan, truth)[plan.detector]
    return rate_at(values, threshold, plan.seed)


def empirical_threshold(values, target_pf):
    """Order statistic at 1-based rank ``ceil((1 - pf) * T)`` of the H0 statistics."""
    s = np.sort(np.asarray(values, dtype=np.float64))
    rank = math.ceil((1.0 - target_pf) * s.size - 1e-9)
    return float(s[min(max(rank, 1), s.size) - 1])


def _check_calibration(target_pf, calib_trials):
    target_pf = check_probability(target_pf, "target_pf")
    if calib_trials < 1.0 / target_pf:
        raise ParameterError(
            f"calib_trials={calib_trials} is below 1/target_pf={1.0 / target_pf:g}"
        )
    if target_pf * calib_trials < 50:
        warnings.warn(
            f"only {target_pf * calib_trials:.0f} expected exceedances at Pf={target_pf:g}; "
            "the calibrated threshold will be imprecise",
            PrecisionWarning,
            stacklevel=3,
        )
    return target_pf


def calibrate_threshold(plan, target_pf, calib_trials=None):
    """Empirical H0 ``(1 - target_pf)`` quantile of the plan's detector statistic."""
    calib_trials = plan.calib_trials if calib_trials is None else check_count(calib_trials, "calib_trials")
    target_pf = _check_calibration(target_pf, calib_trials)
    values = sample_statistics(
        plan, Hypothesis.H0, trials=calib_trials, stream=Stream.CALIBRATION
    )[plan.detector]
    return empirical_threshold(values, target_pf)


def detection_thresholds(plan, kinds, pf_grid, *, analytic_ulad=True):
    """Thresholds per detector for each target Pf.

    ULAD uses the closed form unless ``analytic_ulad`` is false; all other
    detectors share one calibration batch.
    """
    pf_grid = [check_probability(p, "pf") for p in pf_grid]
    out = {}
    to_calibrate = [k for k in kinds if not (analytic_ulad and k.tag is Detector.ULAD)]
    if to_calibrate:
        for p in pf_grid:
            _check_calibration(p, plan.calib_trials)
        calib = sample_statistics(
            plan, Hypothesis.H0, to_calibrate, trials=plan.calib_trials, stream=Stream.CALIBRATION
        )
        for k in to_calibrate:
            out[k] = [empirical_threshold(calib[k], p) for p in pf_grid]
    for k in kinds:
        if k not in out:
            out[k] = [threshold_from_pf(p, plan.n) for p in pf_grid]
    return out


@dataclass(frozen=True)
class RocPoint:
    detector: DetectorKind
    target_pf: float
    threshold: float
    pd: McEstimate


def roc_sweep(plan, pf_grid, kinds=None, *, analytic_ulad=True):
    """Monte Carlo ROC: detection rate at the threshold for each target Pf."""
    kinds = tuple(kinds) if kinds is not None else (plan.detector,)
    thresholds = detection_thresholds(plan, kinds, pf_grid, analytic_ulad=analytic_ulad)
    h1 = sample_statistics(plan, Hypothesis.H1, kinds)
    return [
        RocPoint(k, float(p), g, rate_at(h1[k], g, plan.seed))
        for k in kinds
        for p, g in zip(pf_grid, thresholds[k])
    ]


@dataclass(frozen=True)
class ErrorPoint:
    gamma: float
    pf: McEstimate
    pd: McEstimate

    @property
    def p_error(self):
        return self.pf.p_hat + 1.0 - self.pd.p_hat


def _rates_on_grid(values, grid):
    s = np.sort(values)
    return (s.size - np.searchsorted(s, grid, side="left")) / s.size


def total_error_sweep(plan, gamma_grid):
    """Empirical ``Pf + 1 - Pd`` of the plan's detector over a threshold grid."""
    grid = np.asarray(gamma_grid, dtype=np.float64)
    if grid.size == 0:
        raise ParameterError("gamma grid must not be empty")
    h0 = sample_statistics(plan, Hypothesis.H0)[plan.detector]
    h1 = sample_statistics(plan, Hypothesis.H1)[plan.detector]
    pf, pd = _rates_on_grid(h0, grid), _rates_on_grid(h1, grid)
    t = plan.trials
    return [
        ErrorPoint(
            float(g),
            McEstimate(float(a), t, math.sqrt(a * (1 - a) / t), plan.seed),
            McEstimate(float(b), t, math.sqrt(b * (1 - b) / t), plan.seed),
        )
        for g, a, b in zip(grid, pf, pd)
    ]


@dataclass(frozen=True)
class SnrPoint:
    detector: DetectorKind
    snr_db: float
    threshold: float
    pd: McEstimate


def pd_vs_snr(plan, snr_grid_db, target_pf, kinds=None, *, analytic_ulad=True):
    """Detection rate against SNR at a fixed false-alarm target.

    Thresholds are fixed once per detector; every SNR point reuses the same
    noise realisations (common random numbers), which keeps curves smooth.
    """
    kinds = tuple(kinds) if kinds is not None else (plan.detector,)
    thresholds = detection_thresholds(plan, kinds, [target_pf], analytic_ulad=analytic_ulad)
    points = []
    for snr_db in snr_grid_db:
        h1 = sample_statistics(plan, Hypothesis.H1, kinds, snr_linear=db_to_linear(snr_db))
        for k in kinds:
            g = thresholds[k][0]
            points.append(SnrPoint(k, float(snr_db), g, rate_at(h1[k], g, plan.seed)))
    return points
