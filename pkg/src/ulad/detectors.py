"""Test statistics for the seven detectors and the threshold decision.

All statistics reject H0 for large values. Array functions (``*_values``)
work along the last axis so a whole batch of blocks is scored in one call;
the ``*_statistic`` functions wrap them for a single :class:`ZBlock`.
"""

from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
import math

import numpy as np

from .exceptions import ParameterError
from .gof import Z_FLOOR, ZBlock, z_values
from .signalgen import Hypothesis, SampleBlock

AD_Z_CEILING = 1.0 - 1e-15


class Detector(str, Enum):
    ULAD = "ulad"
    KS = "ks"
    CM = "cm"
    AD = "ad"
    ED = "ed"
    AVC = "avc"
    POM = "pom"


@dataclass(frozen=True)
class DetectorKind:
    tag: Detector
    pom_exponent: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "tag", Detector(self.tag))
        if self.tag is Detector.POM:
            if self.pom_exponent is None or not 0.0 < self.pom_exponent < 2.0:
                raise ParameterError(f"POM exponent must lie in (0, 2), got {self.pom_exponent!r}")
        elif self.pom_exponent is not None:
            raise ParameterError(f"{self.tag.name} takes no exponent")

    @classmethod
    def parse(cls, text, pom_p=None):
        """Parse ``"ulad"``, ``"pom"`` (with ``pom_p``) or ``"pom:1.5"``."""
        name, _, exponent = str(text).strip().lower().partition(":")
        if exponent:
            pom_p = float(exponent)
        try:
            tag = Detector(name)
        except ValueError:
            raise ParameterError(f"unknown detector {text!r}") from None
        return cls(tag, pom_p if tag is Detector.POM else None)

    @property
    def moment_order(self):
        """The ``p`` of ``sum |Y_i|^p`` for moment detectors, else ``None``."""
        return {Detector.ED: 2.0, Detector.AVC: 1.0, Detector.POM: self.pom_exponent}.get(self.tag)

    @property
    def is_gof(self):
        return self.moment_order is None

    def __str__(self):
        if self.tag is Detector.POM:
            return f"pom:{self.pom_exponent:g}"
        return self.tag.value


ULAD = DetectorKind(Detector.ULAD)
BASELINES = (
    DetectorKind(Detector.ED),
    DetectorKind(Detector.KS),
    DetectorKind(Detector.CM),
    DetectorKind(Detector.AD),
    DetectorKind(Detector.AVC),
    DetectorKind(Detector.POM, 0.05),
    DetectorKind(Detector.POM, 0.2),
    DetectorKind(Detector.POM, 1.5),
)


@dataclass(frozen=True)
class DetectorStatistic:
    value: float
    kind: DetectorKind
    n: int

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ParameterError(f"{self.kind} statistic is not finite: {self.value!r}")


@dataclass(frozen=True)
class Decision:
    verdict: Hypothesis
    statistic: DetectorStatistic
    threshold: float


# Operation counters, the testable shadow of the complexity table: ULAD
# touches the data once and never sorts, AD and CM sort once.
@dataclass
class OpCounts:
    sorts: int = 0
    passes: int = 0


_counts = None


@contextmanager
def count_operations():
    """Count sorts and data passes made by the statistics inside the block."""
    global _counts
    outer, _counts = _counts, OpCounts()
    try:
        yield _counts
    finally:
        _counts = outer


def _sort(z):
    if _counts is not None:
        _counts.sorts += 1
    return np.sort(z, axis=-1)


def _pass(v):
    if _counts is not None:
        _counts.passes += 1
    return np.sum(v, axis=-1)


def ulad_values(z):
    """``B_n = n + sum ln z_i``; no sorting."""
    z = np.asarray(z, dtype=np.float64)
    return z.shape[-1] + _pass(np.log(np.maximum(z, Z_FLOOR)))


def ks_from_sorted(zs):
    n = zs.shape[-1]
    i = np.arange(1, n + 1)
    return np.maximum(i / n - zs, zs - (i - 1) / n).max(axis=-1)


def cm_from_sorted(zs):
    n = zs.shape[-1]
    mid = (2 * np.arange(1, n + 1) - 1) / (2 * n)
    return _pass((zs - mid) ** 2) + 1.0 / (12 * n)


def ad_from_sorted(zs):
    n = zs.shape[-1]
    zc = np.clip(zs, Z_FLOOR, AD_Z_CEILING)
    w = 2 * np.arange(1, n + 1) - 1
    # pairs z_(i) with z_(n+1-i)
    return -_pass(w * (np.log(zc) + np.log1p(-zc[..., ::-1]))) / n - n


def ks_values(z):
    """Exact two-sided Kolmogorov-Smirnov distance of z to the uniform CDF."""
    return ks_from_sorted(_sort(np.asarray(z, dtype=np.float64)))


def cm_values(z):
    return cm_from_sorted(_sort(np.asarray(z, dtype=np.float64)))


def ad_values(z):
    return ad_from_sorted(_sort(np.asarray(z, dtype=np.float64)))


def moment_values(y, p):
    """``sum |Y_i|^p``; ED is ``p = 2``, AVC is ``p = 1``."""
    if not p > 0:
        raise ParameterError(f"moment order must be positive, got {p!r}")
    x = np.abs(np.asarray(y, dtype=np.float64))
    if p == 1:
        return _pass(x)
    if p == 2:
        return _pass(x * x)
    return _pass(x**p)


_GOF_SORTED = {Detector.KS: ks_from_sorted, Detector.CM: cm_from_sorted, Detector.AD: ad_from_sorted}


def compute_values(kinds, y, noise):
    """Score raw blocks ``y`` (shape ``(..., n)``) with several detectors.

    The z-transform and the sort are shared between detectors that need them.
    Returns a dict keyed by :class:`DetectorKind`.
    """
    out = {}
    z = zs = None
    for kind in kinds:
        if kind.moment_order is not None:
            out[kind] = moment_values(y, kind.moment_order)
            continue
        if z is None:
            z = z_values(y, noise)
        if kind.tag is Detector.ULAD:
            out[kind] = ulad_values(z)
        else:
            if zs is None:
                zs = _sort(z)
            out[kind] = _GOF_SORTED[kind.tag](zs)
    return out


def _wrap(value, kind, n):
    return DetectorStatistic(float(value), kind, int(n))


def ulad_statistic(zb: ZBlock) -> DetectorStatistic:
    return _wrap(ulad_values(zb.z), ULAD, zb.n)


def ks_statistic(zb: ZBlock) -> DetectorStatistic:
    return _wrap(ks_values(zb.z), DetectorKind(Detector.KS), zb.n)


def cm_statistic(zb: ZBlock) -> DetectorStatistic:
    return _wrap(cm_values(zb.z), DetectorKind(Detector.CM), zb.n)


def ad_statistic(zb: ZBlock) -> DetectorStatistic:
    return _wrap(ad_values(zb.z), DetectorKind(Detector.AD), zb.n)


def moment_statistic(block, p, kind=None):
    samples = block.samples if isinstance(block, SampleBlock) else np.asarray(block, dtype=np.float64)
    value = moment_values(samples, p)
    if kind is None:
        if p == 2:
            kind = DetectorKind(Detector.ED)
        elif p == 1:
            kind = DetectorKind(Detector.AVC)
        else:
            kind = DetectorKind(Detector.POM, float(p))
    return _wrap(value, kind, samples.size)


def decide(stat: DetectorStatistic, threshold: float) -> Decision:
    """H1 iff the statistic reaches the threshold (boundary inclusive)."""
    threshold = float(threshold)
    if math.isnan(threshold):
        raise ParameterError("threshold must not be NaN")
    verdict = Hypothesis.H1 if stat.value >= threshold else Hypothesis.H0
    return Decision(verdict, stat, threshold)
