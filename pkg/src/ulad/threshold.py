"""Total-error-rate optimal ULAD threshold under a false-alarm constraint.

Setting the derivative of ``Pf + (1 - Pd~)`` to zero gives the quadratic
``alpha g^2 + beta g + mu = 0`` with

    alpha = w^2 - 1
    beta  = 2 n (1 + E)
    mu    = -n^2 [(1 + E)^2 + (w^2 / n) ln w^2]

where ``E`` is the H1 mean of ``ln z`` and ``w^2`` its approximate variance.
The minimiser is ``(-beta + sqrt(beta^2 - 4 alpha mu)) / (2 alpha)``, or
``-mu / beta`` when ``alpha`` vanishes.
"""

from dataclasses import dataclass, replace
import math

import numpy as np

from .analytic import (
    DEFAULT_K_MAX,
    PdMode,
    UladAnalytic,
    h1_moments,
    pd_ulad,
    pf_ulad,
    threshold_from_pf,
)
from .exceptions import InfeasibleThresholdError
from .signalgen import NoiseParams
from .validation import check_count, check_probability

DEFAULT_ZETA_PF = 0.1
ALPHA_ZERO_TOL = 1e-9


@dataclass(frozen=True)
class ThresholdOpt:
    n: int
    moments: UladAnalytic
    alpha: float
    beta: float
    mu: float
    delta: float
    omega: float
    gamma_min: float | None = None
    gamma_star: float | None = None
    pf_at_gamma_min: float | None = None
    pf_at_gamma_star: float | None = None
    zeta_pf: float | None = None

    @property
    def constraint_binds(self):
        return self.gamma_star is not None and self.gamma_star != self.gamma_min


def total_error_rate(gamma, n, moments):
    """``Pf + 1 - Pd`` with the approximate-variance detection probability."""
    return pf_ulad(gamma, n) + 1.0 - pd_ulad(gamma, n, moments, PdMode.APPROX)


def opt_coefficients(n, moments):
    n = check_count(n, "n")
    omega2 = moments.var_lnz_h1_approx
    if not omega2 > 0:
        raise InfeasibleThresholdError(f"approximate variance must be positive, got {omega2!r}")
    e = moments.mean_lnz_h1
    alpha = omega2 - 1.0
    beta = 2.0 * n * (1.0 + e)
    mu = -(n**2) * ((1.0 + e) ** 2 + omega2 / n * math.log(omega2))
    return ThresholdOpt(
        n=n,
        moments=moments,
        alpha=alpha,
        beta=beta,
        mu=mu,
        delta=beta * beta - 4.0 * alpha * mu,
        omega=math.sqrt(omega2),
    )


def _stationary_root(c):
    if abs(c.alpha) < ALPHA_ZERO_TOL:
        if not c.beta > 0:
            raise InfeasibleThresholdError(f"linear branch needs beta > 0, got {c.beta!r}")
        return -c.mu / c.beta
    if c.delta < 0:
        raise InfeasibleThresholdError(
            f"stationarity quadratic has no real root (delta = {c.delta!r})"
        )
    sq = math.sqrt(c.delta)
    # (-beta + sqrt(delta)) / (2 alpha) without cancellation between beta and sqrt(delta)
    if c.beta > 0:
        return -2.0 * c.mu / (c.beta + sq)
    return (-c.beta + sq) / (2.0 * c.alpha)


def gamma_unconstrained(coeffs):
    """Stationary point of the total error rate, checked to be a minimum."""
    gamma = _stationary_root(coeffs)
    eps = 1e-3 * max(1.0, math.sqrt(coeffs.n))
    here = total_error_rate(gamma, coeffs.n, coeffs.moments)
    left = total_error_rate(gamma - eps, coeffs.n, coeffs.moments)
    right = total_error_rate(gamma + eps, coeffs.n, coeffs.moments)
    if left < here or right < here:
        raise InfeasibleThresholdError(f"stationary point {gamma!r} is not a minimum")
    return gamma


def gamma_star(coeffs, n=None, zeta_pf=DEFAULT_ZETA_PF):
    """Constrained optimum: the unconstrained minimiser if it meets ``Pf <= zeta_pf``,
    else the threshold that puts ``Pf`` exactly at ``zeta_pf``."""
    n = coeffs.n if n is None else check_count(n, "n")
    zeta_pf = check_probability(zeta_pf, "zeta_pf")
    g_min = gamma_unconstrained(coeffs)
    pf_min = float(pf_ulad(g_min, n))
    g_star = g_min if pf_min <= zeta_pf else threshold_from_pf(zeta_pf, n)
    return replace(
        coeffs,
        gamma_min=g_min,
        gamma_star=g_star,
        pf_at_gamma_min=pf_min,
        pf_at_gamma_star=float(pf_ulad(g_star, n)),
        zeta_pf=zeta_pf,
    )


def optimal_threshold(rho, n, noise=NoiseParams(), zeta_pf=DEFAULT_ZETA_PF, k_max=DEFAULT_K_MAX):
    """Convenience wrapper: moments, coefficients and the constrained optimum."""
    return gamma_star(opt_coefficients(n, h1_moments(rho, noise, k_max)), n, zeta_pf)


def error_rate_derivative(gamma, n, moments):
    """Analytic derivative of :func:`total_error_rate` with respect to ``gamma``."""
    omega = math.sqrt(moments.var_lnz_h1_approx)
    a = np.asarray(gamma, dtype=np.float64) / math.sqrt(n)
    b = (gamma - n - n * moments.mean_lnz_h1) / (math.sqrt(n) * omega)
    k = 1.0 / math.sqrt(2.0 * n * math.pi)
    return -k * np.exp(-a * a / 2.0) + k / omega * np.exp(-b * b / 2.0)
