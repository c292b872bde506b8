"""Bracketing root finders and a golden-section maximiser.

``bisect`` works elementwise on numpy arrays so a whole batch of independent
problems (one per search candidate) shares a single loop.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class Bracket(NamedTuple):
    lo: np.ndarray | float
    hi: np.ndarray | float
    iterations: int


def bisect(fn: Callable, lo, hi, tol: float, max_iter: int = 200) -> Bracket:
    """Shrink ``[lo, hi]`` around a sign change of ``fn``.

    ``lo`` keeps the sign ``fn`` has at the initial lower end.  The caller is
    responsible for making sure a sign change exists; elements without one
    converge to ``hi``.
    """
    scalar = np.ndim(lo) == 0 and np.ndim(hi) == 0
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    sign_lo = np.sign(fn(lo))
    it = 0
    while it < max_iter and np.max(hi - lo, initial=0.0) > tol:
        mid = 0.5 * (lo + hi)
        same = np.sign(fn(mid)) == sign_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
        it += 1
    if scalar:
        return Bracket(float(lo), float(hi), it)
    return Bracket(lo, hi, it)


class GoldenResult(NamedTuple):
    x: float
    value: float
    iterations: int


def golden_max(fn: Callable[[float], float], a: float, b: float, tol: float,
               max_iter: int = 200) -> GoldenResult:
    """Maximise a unimodal scalar function on ``[a, b]``.

    The endpoints are evaluated too and win if they beat the interior point,
    so a monotone function returns its boundary maximum.
    """
    fa, fb = fn(a), fn(b)
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = fn(x1), fn(x2)
    lo, hi = a, b
    it = 0
    while it < max_iter and hi - lo > tol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = fn(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = fn(x2)
        it += 1
    best_x, best_f = (x1, f1) if f1 >= f2 else (x2, f2)
    if fa > best_f:
        best_x, best_f = a, fa
    if fb > best_f:
        best_x, best_f = b, fb
    return GoldenResult(best_x, best_f, it)
