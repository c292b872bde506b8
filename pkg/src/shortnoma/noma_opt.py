"""Optimal rate and power design for two-user short-packet NOMA.

The design runs in four stages:

1. user 2's rate: the smaller root of ``R2 (1 - eps2(R2)) = T0``, found by
   fixed-point iteration (bisection if the iteration stalls);
2. user 1's rate: first-order condition of the two-branch throughput,
   solved by bisection on each branch;
3. the smallest user-2 power for which ``T0`` is reachable at all;
4. a scan over user-2 power in ``[P2_lower, P]`` (all power is used), refined
   by golden-section search around the best scan point.

Stages 1 and 2 are vectorised so the whole scan is evaluated in one pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import fbl
from .fbl import SQRT_2PI
from .noma import (ChannelGains, NomaDecision, NomaEvaluation, SystemParams,
                   eps1_prime_value, evaluate_noma, sinr)
from .search import bisect, golden_max

# Bisection width for rate roots; far below any tolerance a caller can ask for.
RATE_XTOL = 1e-13


@dataclass(frozen=True)
class Tolerances:
    rate_tol: float = 1e-9
    power_tol: float | None = None  # None -> 1e-6 * P
    throughput_tol: float = 1e-7
    max_fixed_point_iters: int = 200
    max_bisection_iters: int = 200
    scan_points: int = 200

    def __post_init__(self):
        for name in ("rate_tol", "throughput_tol", "max_fixed_point_iters",
                     "max_bisection_iters", "scan_points"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.power_tol is not None and not self.power_tol > 0:
            raise ValueError("power_tol must be strictly positive")
        if self.scan_points < 3:
            raise ValueError("scan_points must be at least 3")

    def power_tol_for(self, p_total: float) -> float:
        return self.power_tol if self.power_tol is not None else 1e-6 * p_total


DEFAULT_TOL = Tolerances()


@dataclass
class SolveReport:
    decision: NomaDecision
    evaluation: NomaEvaluation | None
    objective: float
    feasible: bool
    iterations: dict = field(default_factory=dict)
    convexity_gate: bool = False
    p2_lower: float | None = None
    r2_ddagger: float | None = None


# ---------------------------------------------------------------------------
# user-2 throughput as a function of its rate

def throughput_u2_of_r2(gamma2, n, r2):
    """``R2 (1 - Q(f(gamma2, n, R2)))``, concave in ``R2`` up to capacity."""
    return fbl._out(np.asarray(r2, dtype=float) * (1.0 - fbl.decode_error_prob(gamma2, n, r2)))


def u_condition(x, n, r):
    """d/dr of ``r (1 - Q(f(x, n, r)))``; decreasing in ``r`` up to capacity."""
    f = np.asarray(fbl.f_metric(x, n, r))
    b = fbl.f_slope_rate(x, n)
    val = 1.0 - fbl.q_func(f) - np.asarray(r) * b * np.exp(-0.5 * f * f) / SQRT_2PI
    return fbl._out(val)


d_throughput_u2_dr2 = u_condition


def r2_ddagger(gamma2, n, xtol: float = RATE_XTOL):
    """Rate maximising ``R (1 - eps(R))`` on ``[0, log2(1 + gamma2)]``.

    Returns the stationary point when it lies inside the interval, otherwise
    capacity itself (at very low SNR the throughput is still rising there).
    """
    g = np.asarray(gamma2, dtype=float)
    if np.any(g <= 0.0):
        raise ValueError("r2_ddagger needs gamma2 > 0")
    cap = np.asarray(fbl.capacity(g))
    br = bisect(lambda r: u_condition(g, n, r), np.zeros_like(cap), cap, xtol)
    root = 0.5 * (np.asarray(br.lo) + np.asarray(br.hi))
    return fbl._out(root)


def max_throughput(gamma, n):
    """Largest ``R (1 - eps(R))`` over rates; 0 where ``gamma == 0``."""
    g = np.asarray(gamma, dtype=float)
    safe = np.where(g > 0.0, g, 1.0)
    r = np.asarray(r2_ddagger(safe, n))
    t = np.asarray(throughput_u2_of_r2(safe, n, r))
    return fbl._out(np.where(g > 0.0, t, 0.0)), fbl._out(np.where(g > 0.0, r, 0.0))


class R2Solution(NamedTuple):
    rate: float | None
    iterations: int
    fallback: bool


def _r2_fixed_point_batch(gamma2, n, t0, tol: Tolerances):
    """Vectorised fixed-point solve; rate is NaN where ``T0`` is unreachable."""
    g = np.atleast_1d(np.asarray(gamma2, dtype=float))
    r_dd = np.atleast_1d(np.asarray(r2_ddagger(g, n)))
    t_max = np.atleast_1d(np.asarray(throughput_u2_of_r2(g, n, r_dd)))
    feasible = t_max >= t0 - tol.throughput_tol
    if t0 == 0.0:
        rate = np.where(feasible, 0.0, np.nan)
        return rate, np.zeros(g.shape, dtype=int), np.zeros(g.shape, dtype=bool), r_dd

    r = np.full(g.shape, float(t0))
    iters = np.zeros(g.shape, dtype=int)
    active = feasible.copy()
    for _ in range(tol.max_fixed_point_iters):
        if not active.any():
            break
        ga, ra = g[active], r[active]
        r_new = t0 / (1.0 - fbl.q_func(fbl.f_metric(ga, n, ra)))
        r_new = np.minimum(r_new, r_dd[active])
        done = np.abs(r_new - ra) < tol.rate_tol
        r[active] = r_new
        iters[active] += 1
        idx = np.flatnonzero(active)
        active[idx[done]] = False

    fallback = active  # still iterating -> not converged
    if fallback.any():
        gf = g[fallback]
        br = bisect(lambda x: throughput_u2_of_r2(gf, n, x) - t0,
                    np.zeros_like(gf), r_dd[fallback], RATE_XTOL, tol.max_bisection_iters)
        r[fallback] = br.hi
    rate = np.where(feasible, r, np.nan)
    return rate, iters, fallback, r_dd


def solve_r2_fixed_point(gamma2: float, n: int, t0: float,
                         tol: Tolerances = DEFAULT_TOL) -> R2Solution:
    """Smaller root of ``R (1 - eps(R)) = t0`` via ``R <- t0 / (1 - eps(R))``.

    ``rate`` is None when ``t0`` exceeds the best achievable throughput.
    """
    if t0 < 0.0:
        raise ValueError("t0 must be nonnegative")
    if t0 == 0.0:
        return R2Solution(0.0, 0, False)
    rate, iters, fb, _ = _r2_fixed_point_batch(gamma2, n, t0, tol)
    value = float(rate[0])
    return R2Solution(None if math.isnan(value) else value, int(iters[0]), bool(fb[0]))


def fixed_point_map_slope(gamma2, n, t0, r2):
    """Derivative of ``R -> t0 / (1 - eps(R))`` (non-negative)."""
    f = np.asarray(fbl.f_metric(gamma2, n, r2))
    b = fbl.f_slope_rate(gamma2, n)
    val = t0 * b / SQRT_2PI * np.exp(-0.5 * f * f) / (1.0 - fbl.q_func(f)) ** 2
    return fbl._out(val)


# ---------------------------------------------------------------------------
# user-1 rate

def _t1_branch_values(r, g1, g1p, eps21, n):
    """Throughput of user 1 at rate ``r`` on the SIC-failure-decodable branch and the other one."""
    ok = 1.0 - fbl.q_func(fbl.f_metric(g1, n, r))
    low = r * ((1.0 - eps21) * ok + eps21 * (1.0 - fbl.q_func(fbl.f_metric(g1p, n, r))))
    high = r * (1.0 - eps21) * ok
    return low, high


def _r1_batch(g1, g1p, eps21, n):
    """Vectorised maximiser of user 1's throughput over ``[0, log2(1 + g1)]``.

    Requires ``g1 >= g1p > 0``.  Returns ``(rate, throughput)``.
    """
    g1 = np.asarray(g1, dtype=float)
    g1p = np.asarray(g1p, dtype=float)
    eps21 = np.asarray(eps21, dtype=float)
    g1, g1p, eps21 = np.broadcast_arrays(g1, g1p, eps21)
    c1 = np.asarray(fbl.capacity(g1))
    cb = np.asarray(fbl.capacity(g1p))

    def d_low(r):
        return (1.0 - eps21) * u_condition(g1, n, r) + eps21 * u_condition(g1p, n, r)

    r_low = np.asarray(bisect(d_low, np.zeros_like(cb), cb, RATE_XTOL).lo)

    u_at_cb = np.asarray(u_condition(g1, n, cb))
    br = bisect(lambda r: u_condition(g1, n, r), cb, c1, RATE_XTOL)
    r_high = np.where(u_at_cb <= 0.0, cb, np.asarray(br.lo))

    t_low, _ = _t1_branch_values(r_low, g1, g1p, eps21, n)
    _, t_high = _t1_branch_values(r_high, g1, g1p, eps21, n)
    # ties go to the smaller rate
    slack = 1e-12 * np.maximum(1.0, t_low)
    use_high = t_high > t_low + slack
    return np.where(use_high, r_high, r_low), np.where(use_high, t_high, t_low)


def t1_of_r1(r1, g1, g1p, eps21, n):
    """User 1 effective throughput ``R1 (1 - eps_bar1)`` for arrays of inputs."""
    e1 = fbl.decode_error_prob(g1, n, r1)
    e1p = eps1_prime_value(g1p, n, r1)
    return np.asarray(r1) * (1.0 - (e1 - e1 * eps21 + eps21 * e1p))


def solve_r1(gains: ChannelGains, p1: float, p2: float, n: int, eps21: float) -> float:
    """Rate maximising user 1's effective throughput for a fixed power split."""
    if p1 == 0.0:
        return 0.0
    g1 = sinr(p1, 0.0, gains.h1)
    g1p = sinr(p1, p2, gains.h1)
    rate, _ = _r1_batch(g1, g1p, eps21, n)
    return float(rate)


# ---------------------------------------------------------------------------
# user-2 power floor and convexity check

class PowerBound(NamedTuple):
    p2: float | None
    iterations: int


def p2_lower_bound(gains: ChannelGains, params: SystemParams,
                   tol: Tolerances = DEFAULT_TOL) -> PowerBound:
    """Smallest user-2 power (with ``P1 = P - P2``) that can deliver ``T0``.

    Bisection on the increasing map ``P2 -> max_R T2``; the returned value is
    the feasible end of the final bracket.  ``p2`` is None when even
    ``P2 = P`` falls short.
    """
    t0, p, n = params.t0, params.p_total, params.n
    if t0 == 0.0:
        return PowerBound(0.0, 0)

    def gap(p2):
        t, _ = max_throughput(sinr(p2, p - p2, gains.h2), n)
        return t - t0

    if gap(p) < 0.0:
        return PowerBound(None, 0)
    lo, hi = 0.0, p
    ptol = tol.power_tol_for(p)
    it = 0
    while it < tol.max_bisection_iters:
        if hi - lo <= ptol and gap(hi) <= tol.throughput_tol:
            break
        if hi - lo <= 1e-15 * p:
            break
        mid = 0.5 * (lo + hi)
        if gap(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
        it += 1
    return PowerBound(hi, it)


def convexity_gate(gains: ChannelGains, d: NomaDecision, n: int) -> bool:
    """Sufficient condition for concavity of user 1's throughput in ``P1``."""
    g1 = sinr(d.p1, 0.0, gains.h1)
    g1p = sinr(d.p1, d.p2, gains.h1)
    g2 = sinr(d.p2, d.p1, gains.h2)
    g21 = sinr(d.p2, d.p1, gains.h1)
    cond_r1 = fbl.capacity(g1p) < d.r1 <= fbl.capacity(g1)
    r2_cap = min(fbl.capacity(g2), fbl.capacity(g21) - 2.0 / (n * gains.h1 * fbl.LN2))
    return bool(cond_r1 and d.r2 <= r2_cap)


# ---------------------------------------------------------------------------
# power search

@dataclass
class CandidateBatch:
    p2: np.ndarray
    r2: np.ndarray
    eps21: np.ndarray
    r1: np.ndarray
    objective: np.ndarray
    fixed_point_iters: np.ndarray
    fallbacks: np.ndarray
    r2_ddagger: np.ndarray


def evaluate_power_candidates(gains: ChannelGains, params: SystemParams, p2,
                              tol: Tolerances = DEFAULT_TOL, r1_fixed=None) -> CandidateBatch:
    """Stages 1-2 for every candidate user-2 power, with ``P1 = P - P2``.

    Candidates where ``T0`` cannot be met get objective 0 and NaN rates.
    With ``r1_fixed`` user 1's rate is pinned instead of optimised.
    """
    n, p, t0 = params.n, params.p_total, params.t0
    p2 = np.atleast_1d(np.asarray(p2, dtype=float))
    p1 = p - p2
    positive = p2 > 0.0
    g2 = sinr(p2, p1, gains.h2)
    g2_safe = np.where(positive, g2, 1.0)
    r2, iters, fallback, r_dd = _r2_fixed_point_batch(g2_safe, n, t0, tol)
    if t0 > 0.0:
        r2 = np.where(positive, r2, np.nan)
    else:
        r2 = np.where(positive, r2, 0.0)
    r_dd = np.where(positive, r_dd, np.nan)
    feasible = ~np.isnan(r2)

    g21 = sinr(p2, p1, gains.h1)
    r2_safe = np.where(feasible, r2, 0.0)
    eps21 = np.where(positive & feasible,
                     fbl.decode_error_prob(np.where(positive, g21, 1.0), n, r2_safe), 0.0)

    has_p1 = p1 > 0.0
    g1 = np.where(has_p1, sinr(p1, 0.0, gains.h1), 1.0)
    g1p = np.where(has_p1, sinr(p1, p2, gains.h1), 1.0)
    if r1_fixed is None:
        r1, t1 = _r1_batch(g1, g1p, eps21, n)
    else:
        r1 = np.full(p2.shape, float(r1_fixed))
        t1 = t1_of_r1(r1, g1, g1p, eps21, n)
    ok = feasible & has_p1
    return CandidateBatch(
        p2=p2, r2=r2, eps21=eps21,
        r1=np.where(ok, r1, 0.0), objective=np.where(ok, t1, 0.0),
        fixed_point_iters=iters, fallbacks=fallback & feasible, r2_ddagger=r_dd,
    )


def _single_user_report(gains, params, tol) -> SolveReport:
    r1 = solve_r1(gains, params.p_total, 0.0, params.n, 0.0)
    d = NomaDecision(p1=params.p_total, p2=0.0, r1=r1, r2=0.0)
    ev = evaluate_noma(gains, d, params)
    return SolveReport(decision=d, evaluation=ev, objective=ev.t1_bar, feasible=True,
                       iterations={"p2_lower_bound": 0, "scan": 0, "golden": 0},
                       convexity_gate=convexity_gate(gains, d, params.n), p2_lower=0.0)


def _infeasible_report(iterations) -> SolveReport:
    return SolveReport(decision=NomaDecision(0.0, 0.0, 0.0, 0.0), evaluation=None,
                       objective=0.0, feasible=False, iterations=iterations)


def optimize_noma(gains: ChannelGains, params: SystemParams,
                  tol: Tolerances = DEFAULT_TOL) -> SolveReport:
    """Maximise user 1's effective throughput subject to ``T2 >= T0``.

    ``T0 = 0`` bypasses the user-2 stages and gives all power to user 1.
    Infeasible targets return ``feasible=False`` with objective 0.
    """
    if params.t0 == 0.0:
        return _single_user_report(gains, params, tol)
    p = params.p_total
    bound = p2_lower_bound(gains, params, tol)
    iterations = {"p2_lower_bound": bound.iterations}
    if bound.p2 is None:
        return _infeasible_report(iterations)
    p2_lo = bound.p2

    grid = np.linspace(p2_lo, p, tol.scan_points)
    batch = evaluate_power_candidates(gains, params, grid, tol)
    best = int(np.argmax(batch.objective))  # first index on ties
    iterations.update(scan=tol.scan_points,
                      fixed_point_max=int(batch.fixed_point_iters.max()),
                      fixed_point_fallbacks=int(batch.fallbacks.sum()))
    if batch.objective[best] <= 0.0:
        return _infeasible_report(iterations)

    def objective(p2):
        return float(evaluate_power_candidates(gains, params, [p2], tol).objective[0])

    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, len(grid) - 1)]
    gold = golden_max(objective, a, b, tol.power_tol_for(p))
    iterations["golden"] = gold.iterations
    p2_star = gold.x if gold.value > batch.objective[best] else grid[best]

    final = evaluate_power_candidates(gains, params, [p2_star], tol)
    d = NomaDecision(p1=float(p - p2_star), p2=float(p2_star), r1=float(final.r1[0]), r2=float(final.r2[0]))
    ev = evaluate_noma(gains, d, params)
    return SolveReport(decision=d, evaluation=ev, objective=ev.t1_bar, feasible=True,
                       iterations=iterations, convexity_gate=convexity_gate(gains, d, params.n),
                       p2_lower=p2_lo, r2_ddagger=float(final.r2_ddagger[0]))


# ---------------------------------------------------------------------------
# partial optimisations used by the figure sweeps

def power_for_rate_u2(gains: ChannelGains, params: SystemParams, r2: float,
                      tol: Tolerances = DEFAULT_TOL) -> float | None:
    """User-2 power putting ``T2`` exactly on ``T0`` at rate ``r2`` (with ``P1 = P - P2``).

    None when ``r2 <= T0`` or even ``P2 = P`` is not enough.
    """
    n, p, t0 = params.n, params.p_total, params.t0
    if r2 <= t0:
        return None

    def gap(p2):
        p2 = np.asarray(p2, dtype=float)
        g2 = sinr(p2, p - p2, gains.h2)
        t2 = np.asarray(throughput_u2_of_r2(np.where(p2 > 0.0, g2, 1.0), n, r2))
        return np.where(p2 > 0.0, t2, 0.0) - t0

    if gap(p) < 0.0:
        return None
    br = bisect(gap, 0.0, p, 1e-13 * p, tol.max_bisection_iters)
    return float(br.hi)


def noma_with_r2(gains: ChannelGains, params: SystemParams, r2: float,
                 tol: Tolerances = DEFAULT_TOL) -> SolveReport:
    """Best NOMA design with user 2's rate pinned to ``r2``."""
    p2 = power_for_rate_u2(gains, params, r2, tol)
    if p2 is None:
        return _infeasible_report({})
    p1 = params.p_total - p2
    eps21 = fbl.decode_error_prob(sinr(p2, p1, gains.h1), params.n, r2)
    r1 = solve_r1(gains, p1, p2, params.n, eps21)
    d = NomaDecision(p1=p1, p2=p2, r1=r1, r2=float(r2))
    ev = evaluate_noma(gains, d, params)
    return SolveReport(decision=d, evaluation=ev, objective=ev.t1_bar, feasible=True,
                       convexity_gate=convexity_gate(gains, d, params.n))


def noma_with_r1(gains: ChannelGains, params: SystemParams, r1: float,
                 tol: Tolerances = DEFAULT_TOL) -> SolveReport:
    """Best NOMA design with user 1's rate pinned to ``r1`` (power and ``R2`` optimised)."""
    p = params.p_total
    if params.t0 == 0.0:
        grid_lo = 0.0
    else:
        bound = p2_lower_bound(gains, params, tol)
        if bound.p2 is None:
            return _infeasible_report({})
        grid_lo = bound.p2
    grid = np.linspace(grid_lo, p, tol.scan_points)
    batch = evaluate_power_candidates(gains, params, grid, tol, r1_fixed=r1)
    best = int(np.argmax(batch.objective))
    if batch.objective[best] <= 0.0:
        return _infeasible_report({})

    def objective(p2):
        return float(evaluate_power_candidates(gains, params, [p2], tol, r1_fixed=r1).objective[0])

    gold = golden_max(objective, grid[max(best - 1, 0)], grid[min(best + 1, len(grid) - 1)],
                      tol.power_tol_for(p))
    p2_star = gold.x if gold.value > batch.objective[best] else grid[best]
    final = evaluate_power_candidates(gains, params, [p2_star], tol, r1_fixed=r1)
    d = NomaDecision(p1=float(p - p2_star), p2=float(p2_star), r1=float(r1), r2=float(final.r2[0]))
    ev = evaluate_noma(gains, d, params)
    return SolveReport(decision=d, evaluation=ev, objective=ev.t1_bar, feasible=True,
                       convexity_gate=convexity_gate(gains, d, params.n))
