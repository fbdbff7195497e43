"""Laplacian noise, primary-user signals and labelled sample blocks.

Under H0 a block is pure noise, ``Y_i = W_i``; under H1 it is
``Y_i = sqrt(rho) * S_i + W_i`` with unit-power ``S_i``. ``rho`` is the signal
power itself, so the SNR seen by a detector is ``rho / variance_w``; the two
only coincide for unit noise variance.
"""

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from .exceptions import ParameterError
from .validation import check_count, check_positive


class Hypothesis(str, Enum):
    H0 = "H0"
    H1 = "H1"

    @property
    def label(self):
        """Integer class label used by the estimators (H0 -> 0, H1 -> 1)."""
        return int(self is Hypothesis.H1)


class SignalKind(str, Enum):
    BPSK = "bpsk"
    GAUSSIAN = "gauss"
    SINE = "sine"


@dataclass(frozen=True)
class NoiseParams:
    variance_w: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "variance_w", check_positive(self.variance_w, "variance_w"))

    @property
    def scale(self):
        """Laplace scale ``b = sqrt(variance_w / 2)``."""
        return math.sqrt(self.variance_w / 2.0)


@dataclass(frozen=True)
class SignalSpec:
    """Primary-user signal description.

    ``snr_linear`` is the received signal power rho: the block is
    ``sqrt(rho) * S + W`` with unit-power ``S``. It equals the SNR only when
    the noise variance is 1; otherwise the SNR is ``rho / variance_w``.

    ``sine_phase`` of ``None`` draws a uniform phase per block; a float fixes
    it for every block.
    """

    kind: SignalKind = SignalKind.BPSK
    snr_linear: float = 0.0
    sine_normalized_freq: float = 0.05
    sine_phase: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SignalKind(self.kind))
        object.__setattr__(
            self, "snr_linear", check_positive(self.snr_linear, "snr_linear", strict=False)
        )
        if not 0.0 < self.sine_normalized_freq < 0.5:
            raise ParameterError(
                f"sine_normalized_freq must lie in (0, 0.5), got {self.sine_normalized_freq!r}"
            )

    @classmethod
    def from_db(cls, snr_db, kind=SignalKind.BPSK, **kwargs):
        return cls(kind=kind, snr_linear=db_to_linear(snr_db), **kwargs)

    def with_snr(self, snr_linear):
        return SignalSpec(self.kind, snr_linear, self.sine_normalized_freq, self.sine_phase)


@dataclass(frozen=True)
class SampleBlock:
    samples: np.ndarray
    truth: Hypothesis
    n: int = field(init=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ParameterError("a sample block must be a non-empty 1-D sequence")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "truth", Hypothesis(self.truth))
        object.__setattr__(self, "n", samples.size)


def db_to_linear(snr_db):
    out = np.power(10.0, np.asarray(snr_db, dtype=np.float64) / 10.0)
    return float(out) if out.ndim == 0 else out


def open_uniform(rng, size):
    """Uniform variates strictly inside (0, 1), built from 53 random bits."""
    k = rng.integers(0, 1 << 53, size=size, dtype=np.int64)
    return (k + 0.5) * (1.0 / (1 << 53))


def laplace_cdf(y, params):
    """CDF of the zero-mean Laplacian noise with variance ``params.variance_w``."""
    y = np.asarray(y, dtype=np.float64)
    half_tail = 0.5 * np.exp(-np.abs(y) / params.scale)
    return np.where(y < 0, half_tail, 1.0 - half_tail)


def draw_laplacian(params, n, rng):
    """Draw Laplacian noise by inverting its CDF.

    ``n`` may be an int or a shape tuple. One uniform is consumed per sample,
    ``W = -sign(U - 1/2) * b * ln(1 - 2|U - 1/2|)``.
    """
    shape = (check_count(n, "n"),) if np.ndim(n) == 0 else tuple(n)
    u = open_uniform(rng, shape) - 0.5
    return -np.sign(u) * params.scale * np.log1p(-2.0 * np.abs(u))


def draw_signal(spec, n, rng):
    """Unit-power primary signal samples ``S_1..S_n``.

    For a shape ``(blocks, n)`` the sine kind draws one phase per row.
    """
    shape = (check_count(n, "n"),) if np.ndim(n) == 0 else tuple(n)
    if spec.kind is SignalKind.BPSK:
        return np.where(rng.integers(0, 2, size=shape) == 1, 1.0, -1.0)
    if spec.kind is SignalKind.GAUSSIAN:
        return rng.standard_normal(shape)
    lead = shape[:-1] + (1,)
    if spec.sine_phase is None:
        phase = rng.uniform(0.0, 2.0 * math.pi, size=lead)
    else:
        phase = np.full(lead, float(spec.sine_phase))
    i = np.arange(1, shape[-1] + 1)
    return math.sqrt(2.0) * np.sin(2.0 * math.pi * spec.sine_normalized_freq * i + phase)


def make_blocks(noise, signal, truth, n, count, rng):
    """Generate ``count`` blocks of length ``n`` as an array ``(count, n)``.

    Noise is drawn first, so H0 and H1 batches built from equal seeds share
    their noise realisation.
    """
    truth = Hypothesis(truth)
    y = draw_laplacian(noise, (check_count(count, "count"), check_count(n, "n")), rng)
    if truth is Hypothesis.H1:
        y += math.sqrt(signal.snr_linear) * draw_signal(signal, y.shape, rng)
    return y


def make_block(noise, signal, truth, n, rng):
    truth = Hypothesis(truth)
    return SampleBlock(make_blocks(noise, signal, truth, n, 1, rng)[0], truth)
