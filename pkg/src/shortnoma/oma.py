"""Time-division OMA benchmark with joint slot, power and rate design.

For a slot split ``N1 + N2 = N`` user 2 gets the least power meeting ``T0``
at its best rate, user 1 gets the rest of the energy budget ``N P``, and the
split itself is found by exhaustive search over integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import fbl
from .noma import ChannelGains, SystemParams
from .noma_opt import DEFAULT_TOL, Tolerances, r2_ddagger, throughput_u2_of_r2

# SNR search range for the per-slot power bisection; log-spaced.
_SNR_FLOOR = 1e-12
_SNR_CEIL = 1e40


@dataclass(frozen=True)
class OmaDecision:
    n1: int
    n2: int
    p1: float
    p2: float
    r1: float
    r2: float


@dataclass(frozen=True)
class OmaSolution:
    decision: OmaDecision
    t1_bar: float
    t2_bar: float
    feasible: bool

    @property
    def objective(self) -> float:
        return self.t1_bar if self.feasible else 0.0


def oma_throughput(h: float, p: float, n_i: int, n_total: int, r: float) -> float:
    """Effective throughput ``(N_i / N) R (1 - eps)`` of one user in its own slot."""
    if p == 0.0:
        if r != 0.0:
            raise ValueError("a zero-power slot can only carry rate 0")
        return 0.0
    eps = fbl.decode_error_prob(p * h, n_i, r)
    return n_i / n_total * r * (1.0 - eps)


def _best_rate(gamma, n_i):
    """Throughput-maximising rate and its ``R (1 - eps)`` at each SNR."""
    r = np.asarray(r2_ddagger(gamma, n_i))
    return r, np.asarray(throughput_u2_of_r2(gamma, n_i, r))


@lru_cache(maxsize=256)
def _min_snr_table(n_total: int, t0: float, xtol: float) -> np.ndarray:
    """Least per-symbol SNR meeting ``t0`` for every ``N2 = 1 .. N-1``; inf if unreachable.

    Depends only on ``(N, T0)``, so Monte Carlo runs reuse it across channel
    draws; the user-2 power is this SNR divided by ``h2``.
    """
    n2 = np.arange(1, n_total, dtype=float)
    need = t0 * n_total / n2  # required R (1 - eps) inside the slot
    lo = np.full(n2.shape, math.log(_SNR_FLOOR))
    hi = np.full(n2.shape, math.log(_SNR_CEIL))
    reachable = _best_rate(np.exp(hi), n2)[1] >= need
    while np.max(hi - lo) > xtol:
        mid = 0.5 * (lo + hi)
        ok = _best_rate(np.exp(mid), n2)[1] >= need
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    table = np.where(reachable, np.exp(hi), np.inf)
    table.setflags(write=False)
    return table


def oma_step1_p2_r2(h2: float, n2: int, n_total: int, t0: float, p_max: float,
                    tol: Tolerances = DEFAULT_TOL):
    """Least user-2 power and its best rate meeting ``T0`` in ``n2`` symbols.

    Returns ``(p2, r2)`` or None if ``p_max`` is not enough.  The bisection
    runs on the slot SNR ``p2 * h2`` (same monotone search, rescaled).
    """
    if t0 == 0.0:
        return 0.0, 0.0
    if not 1 <= n2 < n_total:
        raise ValueError(f"need 1 <= n2 < n_total, got n2={n2}, n_total={n_total}")
    gamma = _min_snr_table(int(n_total), float(t0), _snr_xtol(tol))[n2 - 1]
    p2 = gamma / h2
    if not p2 <= p_max:
        return None
    r2, _ = _best_rate(gamma, n2)
    return float(p2), float(r2)


def oma_step2_r1(h1: float, p1: float, n1: int) -> float:
    """Throughput-maximising rate of user 1 at power ``p1`` over ``n1`` symbols."""
    if p1 == 0.0:
        return 0.0
    return float(r2_ddagger(p1 * h1, n1))


def _snr_xtol(tol: Tolerances) -> float:
    # log-domain width; relative SNR error ~1e-13 keeps T2 within any sane throughput_tol
    return min(1e-13, tol.throughput_tol)


def _solve_slots(gains: ChannelGains, params: SystemParams, n2: np.ndarray,
                 tol: Tolerances, r1_fixed: float | None = None) -> OmaSolution:
    n, p, t0 = params.n, params.p_total, params.t0
    n1 = n - n2
    if t0 == 0.0:
        p2 = np.zeros(n2.shape)
        r2 = np.zeros(n2.shape)
        feasible = np.ones(n2.shape, dtype=bool)
    else:
        gamma2 = _min_snr_table(n, float(t0), _snr_xtol(tol))[n2 - 1]
        p2 = gamma2 / gains.h2
        feasible = p2 < n * p / n2
        g_safe = np.where(feasible, gamma2, 1.0)
        r2, _ = _best_rate(g_safe, n2)
        p2 = np.where(feasible, p2, 0.0)
        r2 = np.where(feasible, r2, 0.0)
    p1 = np.where(feasible, (n * p - n2 * p2) / n1, 0.0)
    g1 = np.where(p1 > 0.0, p1 * gains.h1, 1.0)
    if r1_fixed is None:
        r1, t1_inner = _best_rate(g1, n1)
    else:
        r1 = np.full(n2.shape, float(r1_fixed))
        t1_inner = r1 * (1.0 - np.asarray(fbl.decode_error_prob(g1, n1, r1)))
    ok = feasible & (p1 > 0.0)
    t1 = np.where(ok, n1 / n * t1_inner, 0.0)
    if not ok.any():
        k = 0
        d = OmaDecision(int(n1[k]), int(n2[k]), 0.0, 0.0, 0.0, 0.0)
        return OmaSolution(d, 0.0, 0.0, False)
    k = int(np.argmax(t1))  # first (smallest N2) on ties
    d = OmaDecision(n1=int(n1[k]), n2=int(n2[k]), p1=float(p1[k]), p2=float(p2[k]),
                    r1=float(r1[k]), r2=float(r2[k]))
    t2 = 0.0 if d.p2 == 0.0 else oma_throughput(gains.h2, d.p2, d.n2, n, d.r2)
    t1_bar = oma_throughput(gains.h1, d.p1, d.n1, n, d.r1)
    return OmaSolution(d, t1_bar, t2, True)


def optimize_oma(gains: ChannelGains, params: SystemParams,
                 tol: Tolerances = DEFAULT_TOL) -> OmaSolution:
    """Best slot split ``N2 in {1, ..., N-1}`` with optimal powers and rates."""
    if params.n < 2:
        raise ValueError("OMA needs N >= 2 so each user gets a slot")
    return _solve_slots(gains, params, np.arange(1, params.n), tol)


def optimize_oma_fixed_slots(gains: ChannelGains, params: SystemParams,
                             tol: Tolerances = DEFAULT_TOL) -> OmaSolution:
    """OMA with equal slots; odd N gives user 1 the extra symbol."""
    if params.n < 2:
        raise ValueError("OMA needs N >= 2 so each user gets a slot")
    return _solve_slots(gains, params, np.array([params.n // 2]), tol)


def oma_with_r1(gains: ChannelGains, params: SystemParams, r1: float, fixed_slots: bool = False,
                tol: Tolerances = DEFAULT_TOL) -> OmaSolution:
    """OMA design with user 1's rate pinned to ``r1``; slots and powers still optimised."""
    if params.n < 2:
        raise ValueError("OMA needs N >= 2 so each user gets a slot")
    n2 = np.array([params.n // 2]) if fixed_slots else np.arange(1, params.n)
    return _solve_slots(gains, params, n2, tol, r1_fixed=r1)
