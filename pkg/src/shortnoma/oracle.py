"""Brute-force grid maximisers used to check the solvers.

Built only on the primitives in :mod:`shortnoma.fbl`; none of the solver
stages are reused.  Feasibility is the plain inequality ``T2 >= T0``.
Slow by design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fbl import capacity, decode_error_prob
from .noma import ChannelGains, SystemParams


@dataclass(frozen=True)
class GridSpec:
    p2_points: int = 201
    r2_points: int = 201
    r1_points: int = 201

    def __post_init__(self):
        for name in ("p2_points", "r2_points", "r1_points"):
            if getattr(self, name) < 2:
                raise ValueError(f"{name} must be >= 2")


@dataclass(frozen=True)
class OracleReport:
    objective: float
    feasible: bool
    p1: float = 0.0
    p2: float = 0.0
    r1: float = 0.0
    r2: float = 0.0
    n1: int | None = None
    n2: int | None = None
    t2_bar: float = 0.0
    resolution_slack: float = 0.0


def _err(gamma, n, r):
    return decode_error_prob(gamma, n, r)


def _neighbour_spread(values: np.ndarray, k: int) -> float:
    lo, hi = max(k - 1, 0), min(k + 2, len(values))
    window = values[lo:hi]
    window = window[np.isfinite(window)]
    return float(np.max(np.abs(window - values[k]))) if window.size else 0.0


def grid_optimize_noma(gains: ChannelGains, params: SystemParams,
                       grid: GridSpec = GridSpec()) -> OracleReport:
    """Exhaustive search over ``(P2, R2, R1)`` with ``P1 = P - P2``."""
    n, p, t0 = params.n, params.p_total, params.t0
    h1, h2 = gains.h1, gains.h2
    p2_grid = np.linspace(0.0, p, grid.p2_points)
    row_best = np.full(p2_grid.shape, -np.inf)
    row_r2_slack = np.zeros(p2_grid.shape)
    best = None

    for i, p2 in enumerate(p2_grid):
        p1 = p - p2
        if p1 <= 0.0:
            continue
        g1 = p1 * h1
        g1p = p1 * h1 / (p2 * h1 + 1.0)
        r1 = np.linspace(0.0, capacity(g1), grid.r1_points)
        e1 = _err(g1, n, r1)
        if p2 == 0.0:
            if t0 > 0.0:
                continue
            r2 = np.array([0.0])
            e21 = np.array([0.0])
            t2 = np.array([0.0])
            e1p = e1
        else:
            g2 = p2 * h2 / (p1 * h2 + 1.0)
            g21 = p2 * h1 / (p1 * h1 + 1.0)
            r2 = np.linspace(0.0, capacity(g2), grid.r2_points)
            t2 = r2 * (1.0 - _err(g2, n, r2))
            ok = t2 >= t0
            if not ok.any():
                continue
            r2, t2 = r2[ok], t2[ok]
            e21 = _err(g21, n, r2)
            below = r1 <= capacity(g1p)
            e1p = np.where(below, _err(g1p, n, np.where(below, r1, 0.0)), 1.0)
        # rows: R2 candidates, columns: R1 candidates
        e_bar = e1[None, :] - e1[None, :] * e21[:, None] + e21[:, None] * e1p[None, :]
        t1 = r1[None, :] * (1.0 - e_bar)
        per_r2 = t1.max(axis=1)
        j = int(np.argmax(per_r2))
        k = int(np.argmax(t1[j]))
        row_best[i] = per_r2[j]
        row_r2_slack[i] = _neighbour_spread(per_r2, j)
        if best is None or per_r2[j] > best[0]:
            best = (per_r2[j], i, p1, p2, r1[k], r2[j], t2[j])

    if best is None:
        return OracleReport(objective=0.0, feasible=False)
    value, i, p1, p2, r1, r2, t2 = best
    slack = max(_neighbour_spread(row_best, i), row_r2_slack[i])
    return OracleReport(objective=float(value), feasible=True, p1=float(p1), p2=float(p2),
                        r1=float(r1), r2=float(r2), t2_bar=float(t2), resolution_slack=slack)


def _oma_slot_best(gains, params, n2, grid, p2_grid):
    """Best feasible user-1 throughput for one slot split, by grid; (value, p2, r2, r1, t2, spread)."""
    n, p, t0 = params.n, params.p_total, params.t0
    n1 = n - n2
    p1 = (n * p - n2 * p2_grid) / n1
    # user 2: feasible P2 rows
    if t0 == 0.0:
        feas = np.ones(p2_grid.shape, dtype=bool)
        r2_pick = np.zeros(p2_grid.shape)
        t2_pick = np.zeros(p2_grid.shape)
    else:
        g2 = np.where(p2_grid > 0.0, p2_grid * gains.h2, 1.0)[:, None]
        frac = np.linspace(0.0, 1.0, grid.r2_points)[None, :]
        r2 = frac * capacity(g2)
        t2 = n2 / n * r2 * (1.0 - _err(g2, n2, r2))
        t2 = np.where(p2_grid[:, None] > 0.0, t2, 0.0)
        ok = t2 >= t0
        feas = ok.any(axis=1)
        first = np.argmax(ok, axis=1)
        rows = np.arange(len(p2_grid))
        r2_pick = r2[rows, first]
        t2_pick = t2[rows, first]
    feas &= p1 > 0.0
    if not feas.any():
        return None
    g1 = np.where(p1 > 0.0, p1 * gains.h1, 1.0)[:, None]
    frac = np.linspace(0.0, 1.0, grid.r1_points)[None, :]
    r1 = frac * capacity(g1)
    t1 = n1 / n * r1 * (1.0 - _err(g1, n1, r1))
    per_p2 = np.where(feas, t1.max(axis=1), -np.inf)
    i = int(np.argmax(per_p2))
    k = int(np.argmax(t1[i]))
    return per_p2[i], p1[i], p2_grid[i], r2_pick[i], r1[i, k], t2_pick[i], _neighbour_spread(per_p2, i)


def grid_optimize_oma(gains: ChannelGains, params: SystemParams, grid: GridSpec = GridSpec(),
                      n2_values=None) -> OracleReport:
    """Exhaustive search over ``(N2, P2, R2, R1)``; ``P1`` uses the rest of the energy ``N P``.

    ``n2_values`` restricts the slot splits (e.g. ``[N // 2]`` for equal slots).
    """
    n, p = params.n, params.p_total
    if n2_values is None:
        n2_values = range(1, n)
    per_n2 = []
    best = None
    for n2 in n2_values:
        p2_grid = np.linspace(0.0, n * p / n2, grid.p2_points)
        res = _oma_slot_best(gains, params, n2, grid, p2_grid)
        per_n2.append(-np.inf if res is None else res[0])
        if res is not None and (best is None or res[0] > best[0][0]):
            best = (res, n2, len(per_n2) - 1)
    if best is None:
        return OracleReport(objective=0.0, feasible=False)
    (value, p1, p2, r2, r1, t2, spread), n2, idx = best
    slack = max(spread, _neighbour_spread(np.asarray(per_n2), idx))
    return OracleReport(objective=float(value), feasible=True, p1=float(p1), p2=float(p2),
                        r1=float(r1), r2=float(r2), n1=n - n2, n2=n2, t2_bar=float(t2),
                        resolution_slack=slack)


# ---------------------------------------------------------------------------
# solver-vs-oracle comparison

@dataclass(frozen=True)
class OracleComparison:
    scheme: str
    solver_objective: float
    oracle_objective: float
    slack: float
    rel_tol: float

    @property
    def deviation(self) -> float:
        return abs(self.solver_objective - self.oracle_objective)

    @property
    def allowed(self) -> float:
        scale = max(abs(self.solver_objective), abs(self.oracle_objective))
        return max(self.rel_tol * scale, self.slack)

    @property
    def ok(self) -> bool:
        return self.deviation <= self.allowed


def random_instances(seed: int, count: int, snr_db=(20.0, 40.0), n=(100, 500), t0=(0.5, 3.0),
                     ratio=(4.0, 100.0), h1=(0.25, 1.0)):
    """Random ``(gains, params)`` pairs; ``h1/h2`` is log-uniform over ``ratio``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        g1 = rng.uniform(*h1)
        g2 = g1 / math.exp(rng.uniform(math.log(ratio[0]), math.log(ratio[1])))
        p = 10.0 ** (rng.uniform(*snr_db) / 10.0)
        out.append((ChannelGains(g1, g2),
                    SystemParams(n=int(rng.integers(n[0], n[1] + 1)), p_total=p, t0=rng.uniform(*t0))))
    return out


def compare_noma(gains: ChannelGains, params: SystemParams, grid: GridSpec = GridSpec(),
                 rel_tol: float = 0.005) -> OracleComparison:
    from .noma_opt import optimize_noma
    rep = optimize_noma(gains, params)
    ref = grid_optimize_noma(gains, params, grid)
    return OracleComparison("noma", rep.objective if rep.feasible else 0.0, ref.objective,
                            ref.resolution_slack, rel_tol)


def compare_oma(gains: ChannelGains, params: SystemParams, grid: GridSpec = GridSpec(),
                rel_tol: float = 0.005) -> OracleComparison:
    from .oma import optimize_oma
    sol = optimize_oma(gains, params)
    ref = grid_optimize_oma(gains, params, grid)
    return OracleComparison("oma", sol.objective, ref.objective, ref.resolution_slack, rel_tol)
