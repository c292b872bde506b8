"""Finite-blocklength primitives for the quasi-static Rayleigh channel.

Normal approximation of the achievable rate and the matching decoding error
probability.  Every function here accepts plain floats; the ones used inside
the solvers (``q_func``, ``capacity``, ``dispersion``, ``f_metric``,
``decode_error_prob``) also broadcast over numpy arrays.

The approximation is only trustworthy for blocklengths of roughly 100 and up;
shorter blocks are accepted but should be read with that caveat in mind.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import special

LN2 = math.log(2.0)
SQRT2 = math.sqrt(2.0)
SQRT_2PI = math.sqrt(2.0 * math.pi)

# Smallest positive double; tail probabilities never round to exactly zero.
TINY_PROB = math.ulp(0.0)


def _is_scalar(x) -> bool:
    return np.ndim(x) == 0


def _out(value):
    """Unwrap 0-d results to float so scalar callers get scalars back."""
    if np.ndim(value) == 0:
        return float(value)
    return value


def _check_finite(x, name: str) -> None:
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite, got {x!r}")


def _check_snr(gamma, strict: bool) -> None:
    _check_finite(gamma, "gamma")
    bad = np.any(np.asarray(gamma) <= 0.0) if strict else np.any(np.asarray(gamma) < 0.0)
    if bad:
        if strict:
            raise ValueError("f-metric is singular at gamma = 0 (zero dispersion); gamma must be > 0")
        raise ValueError(f"gamma must be nonnegative, got {gamma!r}")


def _check_blocklength(n) -> None:
    _check_finite(n, "n")
    if np.any(np.asarray(n) < 1):
        raise ValueError(f"blocklength must be >= 1, got {n!r}")


def q_func(x):
    """Gaussian upper tail ``Q(x) = erfc(x / sqrt(2)) / 2``.

    Results are floored at the smallest positive double so deep-tail values
    stay strictly positive.
    """
    _check_finite(x, "x")
    if _is_scalar(x):
        return max(0.5 * math.erfc(float(x) / SQRT2), TINY_PROB)
    return np.maximum(0.5 * special.erfc(np.asarray(x, dtype=float) / SQRT2), TINY_PROB)


def _acklam_quantile(p: float) -> float:
    """Rational approximation of the standard normal quantile (rel. err ~1e-9)."""
    a = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
         1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
    b = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
         6.680131188771972e01, -1.328068155288572e01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
         -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
    d = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
         3.754408661907416e00)
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    if p > 1.0 - p_low:
        q = math.sqrt(-2.0 * math.log1p(-p))
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)


def _q_inv_bisect(p: float) -> float:
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if q_func(mid) > p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return 0.5 * (lo + hi)


def q_inv(p: float) -> float:
    """Inverse of :func:`q_func` on the open unit interval."""
    p = float(p)
    if not (0.0 < p < 1.0):
        raise ValueError(f"q_inv needs 0 < p < 1, got {p!r}")
    if p == 0.5:
        return 0.0
    x = -_acklam_quantile(p)
    for _ in range(2):
        dens = math.exp(-0.5 * x * x) / SQRT_2PI
        if dens == 0.0:
            return _q_inv_bisect(p)
        x_new = x + (q_func(x) - p) / dens
        if not math.isfinite(x_new) or not (0.0 < q_func(x_new) < 1.0):
            return _q_inv_bisect(p)
        x = x_new
    return x


def capacity(gamma):
    """Shannon capacity ``log2(1 + gamma)`` in bps/Hz."""
    return _out(np.log1p(gamma) / LN2)


def dispersion(gamma):
    """Channel dispersion ``V = 1 - (1 + gamma)^-2``; exactly 0 at gamma = 0."""
    _check_snr(gamma, strict=False)
    g = np.asarray(gamma, dtype=float)
    # gamma (2 + gamma) / (1 + gamma)^2 avoids cancellation at low SNR
    return _out(g * (2.0 + g) / (1.0 + g) ** 2)


def f_metric(gamma, n, r):
    """Normalised back-off ``ln2 * sqrt(n / V) * (log2(1 + gamma) - r)``.

    Raises ``ValueError`` at gamma = 0, where the dispersion vanishes.
    """
    _check_snr(gamma, strict=True)
    _check_blocklength(n)
    g = np.asarray(gamma, dtype=float)
    return _out(np.sqrt(np.asarray(n, dtype=float) / dispersion(g)) * (np.log1p(g) - LN2 * np.asarray(r, dtype=float)))


def f_slope_rate(gamma, n):
    """Magnitude of df/dr, i.e. ``sqrt(n) * ln2 / sqrt(V)`` (always positive)."""
    _check_snr(gamma, strict=True)
    return _out(LN2 * np.sqrt(np.asarray(n, dtype=float) / dispersion(gamma)))


def decode_error_prob(gamma, n, r):
    """Block error probability ``Q(f(gamma, n, r))``.

    Not clipped to the 0.5 operating regime; rates above capacity give
    values above one half.
    """
    return q_func(f_metric(gamma, n, r))


class AchievableRate(NamedTuple):
    rate: float
    raw: float
    clamped: bool


def achievable_rate(gamma: float, n: float, eps: float) -> AchievableRate:
    """Normal-approximation rate at target error ``eps``.

    Negative values (low SNR, short blocks, tiny ``eps``) are clamped to 0
    and flagged through ``clamped``; ``raw`` keeps the unclamped number.
    """
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")
    _check_snr(gamma, strict=True)
    _check_blocklength(n)
    raw = capacity(gamma) - math.sqrt(dispersion(gamma) / n) * q_inv(eps) / LN2
    if raw < 0.0:
        return AchievableRate(0.0, raw, True)
    return AchievableRate(raw, raw, False)
