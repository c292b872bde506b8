"""Channel gains for the experiments: fixed magnitudes or Rayleigh fading with path loss.

Fading draws use a counter-based generator keyed by ``(seed, index)`` so any
realization can be regenerated on its own, in any order or process.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .noma import ChannelGains, SystemParams
from .noma_opt import DEFAULT_TOL, Tolerances, optimize_noma
from .oma import optimize_oma, optimize_oma_fixed_slots

WORKERS_ENV = "SHORTNOMA_WORKERS"

SOLVERS = ("noma", "oma", "oma-fixed")


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class ScenarioFixed:
    h1_mag: float
    h2_mag: float
    sigma1_sq: float = 1.0
    sigma2_sq: float = 1.0

    def gains(self) -> ChannelGains:
        return ChannelGains(self.h1_mag ** 2 / self.sigma1_sq, self.h2_mag ** 2 / self.sigma2_sq)


@dataclass(frozen=True)
class ScenarioFading:
    d1: float
    d2: float
    alpha: float = 2.0
    seed: int = 0
    realizations: int = 1
    sigma1_sq: float = 1.0
    sigma2_sq: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.d1 < self.d2:
            raise ValueError(f"need 0 < d1 < d2, got d1={self.d1}, d2={self.d2}")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")


def _rng(seed: int, index: int) -> np.random.Generator:
    # index lives in the top counter word, so streams of different indices never overlap
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, index]))


def sample_fading_raw(scenario: ScenarioFading, index: int) -> tuple[float, float]:
    """Normalised gains of the near and far user for one realization, unsorted."""
    if not 0 <= index < scenario.realizations:
        raise IndexError(f"realization index {index} out of range")
    z = _rng(scenario.seed, index).standard_normal(4)
    # unit-variance circularly symmetric complex Gaussian: |h|^2 = (x^2 + y^2) / 2
    mag1 = 0.5 * (z[0] ** 2 + z[1] ** 2)
    mag2 = 0.5 * (z[2] ** 2 + z[3] ** 2)
    h1 = scenario.d1 ** (-2.0 * scenario.alpha) * mag1 / scenario.sigma1_sq
    h2 = scenario.d2 ** (-2.0 * scenario.alpha) * mag2 / scenario.sigma2_sq
    return float(h1), float(h2)


def sample_fading_pair(scenario: ScenarioFading, index: int) -> ChannelGains:
    """One realization as ``ChannelGains``; users are relabelled if the far user drew the stronger link."""
    h1, h2 = sample_fading_raw(scenario, index)
    if h1 < h2:
        h1, h2 = h2, h1
    return ChannelGains(h1, h2)


def solve_objective(gains: ChannelGains, params: SystemParams, solver: str,
                    tol: Tolerances = DEFAULT_TOL) -> float:
    """User-1 objective of the named scheme; infeasible counts as 0."""
    if solver == "noma":
        r = optimize_noma(gains, params, tol)
        return r.objective if r.feasible else 0.0
    if solver == "oma":
        return optimize_oma(gains, params, tol).objective
    if solver == "oma-fixed":
        return optimize_oma_fixed_slots(gains, params, tol).objective
    raise ValueError(f"unknown solver {solver!r}; expected one of {SOLVERS}")


class MonteCarloResult(NamedTuple):
    mean: float
    stderr: float
    values: np.ndarray


def _one(args) -> float:
    scenario, params, solver, tol, index = args
    return solve_objective(sample_fading_pair(scenario, index), params, solver, tol)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def monte_carlo_values(scenario: ScenarioFading, params: SystemParams, solver: str,
                       tol: Tolerances = DEFAULT_TOL, workers: int | None = None) -> np.ndarray:
    """Per-realization objectives in index order."""
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}; expected one of {SOLVERS}")
    workers = worker_count() if workers is None else workers
    jobs = [(scenario, params, solver, tol, i) for i in range(scenario.realizations)]
    if workers <= 1:
        values = [_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return np.asarray(values, dtype=float)


def summarize(values: np.ndarray) -> MonteCarloResult:
    values = np.asarray(values, dtype=float)
    mean = float(np.sum(values) / values.size)  # numpy sums pairwise, in index order
    stderr = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return MonteCarloResult(mean, stderr, values)


def monte_carlo_average(scenario: ScenarioFading, params: SystemParams, solver: str,
                        tol: Tolerances = DEFAULT_TOL, workers: int | None = None) -> MonteCarloResult:
    """Mean and standard error of the optimal objective over fading draws."""
    return summarize(monte_carlo_values(scenario, params, solver, tol, workers))
