"""Two-user downlink NOMA with imperfect SIC at the strong user.

All powers, gains and SNRs are linear.  User 1 is the stronger user; it first
tries to decode and cancel user 2's message, and its own decoding error is the
mixture of the SIC-success and SIC-failure branches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fbl


class ConstraintError(ValueError):
    """A decision violates the power budget."""


@dataclass(frozen=True)
class ChannelGains:
    """Noise-normalised power gains ``|h|^2 / sigma^2``, strong user first."""

    h1: float
    h2: float

    def __post_init__(self):
        for name in ("h1", "h2"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0.0:
                raise ValueError(f"{name} must be a positive finite gain, got {v!r}")
        if not self.h1 > self.h2:
            raise ValueError(f"user 1 must be the stronger user: need h1 > h2, got h1={self.h1}, h2={self.h2}")


@dataclass(frozen=True)
class SystemParams:
    n: int
    p_total: float
    t0: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not (math.isfinite(self.p_total) and self.p_total > 0.0):
            raise ValueError(f"p_total must be positive, got {self.p_total!r}")
        if not (math.isfinite(self.t0) and self.t0 >= 0.0):
            raise ValueError(f"t0 must be nonnegative, got {self.t0!r}")


@dataclass(frozen=True)
class NomaDecision:
    p1: float
    p2: float
    r1: float
    r2: float

    def __post_init__(self):
        for name in ("p1", "p2", "r1", "r2"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be nonnegative and finite, got {v!r}")


@dataclass(frozen=True)
class NomaEvaluation:
    gamma21: float
    gamma1: float
    gamma1_prime: float
    gamma2: float
    eps21: float
    eps1: float
    eps1_prime: float
    eps2: float
    eps_bar1: float
    t1_bar: float
    t2_bar: float


def sinr(p_signal, p_interference, h):
    """``p_signal * h / (p_interference * h + 1)``; broadcasts over arrays."""
    return p_signal * h / (p_interference * h + 1.0)


def sinr_x2_at_u1(gains: ChannelGains, d: NomaDecision) -> float:
    return sinr(d.p2, d.p1, gains.h1)


def snr_x1_sic(gains: ChannelGains, d: NomaDecision) -> float:
    return d.p1 * gains.h1


def sinr_x1_nosic(gains: ChannelGains, d: NomaDecision) -> float:
    return sinr(d.p1, d.p2, gains.h1)


def sinr_x2_at_u2(gains: ChannelGains, d: NomaDecision) -> float:
    return sinr(d.p2, d.p1, gains.h2)


def error_prob(gamma: float, n: int, r: float) -> float:
    """Decoding error probability with the zero-SNR corner defined as certain failure."""
    if gamma == 0.0:
        return 1.0
    return fbl.decode_error_prob(gamma, n, r)


def eps1_prime_value(gamma1_prime, n, r1):
    """Error probability of x1 when SIC failed; 1 when r1 exceeds the interference-limited capacity."""
    g = np.asarray(gamma1_prime, dtype=float)
    r = np.asarray(r1, dtype=float)
    above = r > fbl.capacity(g)
    safe_g = np.where(g > 0.0, g, 1.0)
    eps = np.where(above | (g == 0.0), 1.0, fbl.decode_error_prob(safe_g, n, np.minimum(r, fbl.capacity(safe_g))))
    return float(eps) if eps.ndim == 0 else eps


def eps1_prime(gains: ChannelGains, d: NomaDecision, n: int) -> float:
    return eps1_prime_value(sinr_x1_nosic(gains, d), n, d.r1)


def evaluate_noma(gains: ChannelGains, d: NomaDecision, params: SystemParams) -> NomaEvaluation:
    """SINRs, error probabilities and effective throughputs of a NOMA decision.

    With ``p2 = 0`` there is nothing to cancel, so the SIC outage is taken as
    0; with ``r2 = 0`` as well user 2's error and throughput are both 0.
    """
    if d.p1 + d.p2 > params.p_total * (1.0 + 1e-9):
        raise ConstraintError(
            f"power budget exceeded: p1 + p2 = {d.p1 + d.p2} > p_total = {params.p_total}")
    n = params.n
    g21 = sinr_x2_at_u1(gains, d)
    g1 = snr_x1_sic(gains, d)
    g1p = sinr_x1_nosic(gains, d)
    g2 = sinr_x2_at_u2(gains, d)

    if d.p2 == 0.0:
        e21 = 0.0
        e2 = 0.0 if d.r2 == 0.0 else 1.0
    else:
        e21 = error_prob(g21, n, d.r2)
        e2 = error_prob(g2, n, d.r2)
    e1 = error_prob(g1, n, d.r1)
    e1p = eps1_prime_value(g1p, n, d.r1)
    eps_bar1 = e1 - e1 * e21 + e21 * e1p
    return NomaEvaluation(
        gamma21=g21, gamma1=g1, gamma1_prime=g1p, gamma2=g2,
        eps21=e21, eps1=e1, eps1_prime=e1p, eps2=e2, eps_bar1=eps_bar1,
        t1_bar=d.r1 * (1.0 - eps_bar1), t2_bar=d.r2 * (1.0 - e2),
    )
