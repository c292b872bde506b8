"""Parameter sweeps over the NOMA and OMA designs, with CSV and plot output.

A sweep varies one quantity (``p2``, ``r2``, ``r1``, ``t0``, ``n`` or
``snr_db``), optionally for several ``series`` of parameter overrides, and
solves every point for every requested scheme.  Rows come back in sweep
order whatever the worker count.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .channel import (SOLVERS, ScenarioFading, ScenarioFixed, db_to_linear, monte_carlo_average,
                      worker_count)
from .noma import ChannelGains, NomaDecision, SystemParams, evaluate_noma
from .noma_opt import (DEFAULT_TOL, SolveReport, Tolerances, evaluate_power_candidates,
                       noma_with_r1, noma_with_r2, optimize_noma)
from .oma import OmaSolution, oma_with_r1, optimize_oma, optimize_oma_fixed_slots

SWEEP_VARS = ("p2", "r2", "r1", "t0", "n", "snr_db")
NOMA_ONLY_VARS = ("p2", "r2")
CSV_COLUMNS = ("sweep_var", "value", "scheme", "objective", "t2_bar", "p1", "p2", "r1", "r2",
               "n1", "n2", "feasible", "stderr", "series")
# fields a series entry may override
SERIES_KEYS = ("t0", "snr_db", "n", "h1_mag", "h2_mag")


@dataclass(frozen=True)
class SweepSpec:
    sweep_var: str
    start: float
    stop: float
    points: int
    schemes: tuple[str, ...] = ("noma",)
    n: int = 100
    snr_db: float = 40.0
    t0: float = 1.0
    h1_mag: float = 0.8
    h2_mag: float = 0.2
    fading: ScenarioFading | None = None
    series: tuple[dict, ...] = ()
    plot_field: str = "objective"
    description: str = ""

    def __post_init__(self):
        if self.sweep_var not in SWEEP_VARS:
            raise ValueError(f"sweep_var must be one of {SWEEP_VARS}, got {self.sweep_var!r}")
        if not self.points >= 1:
            raise ValueError("points must be >= 1")
        if not self.start < self.stop:
            raise ValueError(f"sweep range needs start < stop, got {self.start} >= {self.stop}")
        if not self.schemes:
            raise ValueError("schemes must name at least one scheme")
        for s in self.schemes:
            if s not in SOLVERS:
                raise ValueError(f"schemes: unknown scheme {s!r}; expected a subset of {SOLVERS}")
        if self.sweep_var in NOMA_ONLY_VARS and self.schemes != ("noma",):
            raise ValueError(f"schemes: a {self.sweep_var} sweep only applies to noma")
        if self.fading is not None and self.sweep_var not in ("t0", "n", "snr_db"):
            raise ValueError("sweep_var: fading scenarios support t0, n and snr_db sweeps only")
        for entry in self.series:
            bad = set(entry) - set(SERIES_KEYS)
            if bad:
                raise ValueError(f"series: unknown keys {sorted(bad)}; allowed {SERIES_KEYS}")
        if self.plot_field not in CSV_COLUMNS:
            raise ValueError(f"plot_field must be a CSV column, got {self.plot_field!r}")

    def values(self) -> np.ndarray:
        if self.points == 1:
            v = np.array([float(self.start)])
        else:
            v = np.linspace(self.start, self.stop, self.points)
        if self.sweep_var == "n":
            v = np.round(v)
        return v

    def series_list(self) -> tuple[dict, ...]:
        return self.series if self.series else ({},)


@dataclass(frozen=True)
class ResultRow:
    sweep_var: str
    value: float
    scheme: str
    objective: float
    feasible: bool
    t2_bar: float | None = None
    p1: float | None = None
    p2: float | None = None
    r1: float | None = None
    r2: float | None = None
    n1: int | None = None
    n2: int | None = None
    stderr: float | None = None
    series: str = ""


@dataclass(frozen=True)
class PointSetup:
    """Everything needed to solve one sweep point, picklable for the worker pool."""

    sweep_var: str
    value: float
    scheme: str
    series: str
    params: SystemParams
    gains: ChannelGains | None
    fading: ScenarioFading | None
    tol: Tolerances = field(default=DEFAULT_TOL)


def series_label(entry: dict) -> str:
    return ";".join(f"{k}={entry[k]!r}" for k in sorted(entry))


def _setups(spec: SweepSpec, tol: Tolerances) -> list[PointSetup]:
    out = []
    for entry in spec.series_list():
        base = {k: getattr(spec, k) for k in SERIES_KEYS}
        base.update(entry)
        label = series_label(entry)
        for value in spec.values():
            cfg = dict(base)
            if spec.sweep_var in ("t0", "n", "snr_db"):
                cfg[spec.sweep_var] = int(value) if spec.sweep_var == "n" else float(value)
            params = SystemParams(n=int(cfg["n"]), p_total=db_to_linear(cfg["snr_db"]), t0=float(cfg["t0"]))
            gains = None
            if spec.fading is None:
                gains = ScenarioFixed(cfg["h1_mag"], cfg["h2_mag"]).gains()
            for scheme in spec.schemes:
                out.append(PointSetup(spec.sweep_var, float(value), scheme, label, params, gains,
                                      spec.fading, tol))
    return out


def _noma_row(s: PointSetup, d: NomaDecision | None) -> ResultRow:
    if d is None:
        return ResultRow(s.sweep_var, s.value, s.scheme, 0.0, False, series=s.series)
    ev = evaluate_noma(s.gains, d, s.params)
    return ResultRow(s.sweep_var, s.value, s.scheme, ev.t1_bar, True, t2_bar=ev.t2_bar,
                     p1=d.p1, p2=d.p2, r1=d.r1, r2=d.r2, series=s.series)


def _report_row(s: PointSetup, rep: SolveReport) -> ResultRow:
    return _noma_row(s, rep.decision if rep.feasible else None)


def _oma_row(s: PointSetup, sol: OmaSolution) -> ResultRow:
    if not sol.feasible:
        return ResultRow(s.sweep_var, s.value, s.scheme, 0.0, False, series=s.series)
    d = sol.decision
    return ResultRow(s.sweep_var, s.value, s.scheme, sol.t1_bar, True, t2_bar=sol.t2_bar,
                     p1=d.p1, p2=d.p2, r1=d.r1, r2=d.r2, n1=d.n1, n2=d.n2, series=s.series)


def _solve_fixed(s: PointSetup) -> ResultRow:
    gains, params, tol = s.gains, s.params, s.tol
    if s.sweep_var == "p2":
        p2 = s.value
        if not 0.0 <= p2 <= params.p_total:
            return ResultRow(s.sweep_var, s.value, s.scheme, 0.0, False, series=s.series)
        batch = evaluate_power_candidates(gains, params, [p2], tol)
        if batch.objective[0] <= 0.0:
            return _noma_row(s, None)
        d = NomaDecision(p1=float(params.p_total - p2), p2=float(p2), r1=float(batch.r1[0]),
                         r2=float(batch.r2[0]))
        return _noma_row(s, d)
    if s.sweep_var == "r2":
        return _report_row(s, noma_with_r2(gains, params, s.value, tol))
    if s.sweep_var == "r1":
        if s.scheme == "noma":
            return _report_row(s, noma_with_r1(gains, params, s.value, tol))
        return _oma_row(s, oma_with_r1(gains, params, s.value, s.scheme == "oma-fixed", tol))
    if s.scheme == "noma":
        return _report_row(s, optimize_noma(gains, params, tol))
    if s.scheme == "oma":
        return _oma_row(s, optimize_oma(gains, params, tol))
    return _oma_row(s, optimize_oma_fixed_slots(gains, params, tol))


def solve_point(s: PointSetup, mc_workers: int = 1) -> ResultRow:
    """One row; any solver exception becomes an infeasible row."""
    try:
        if s.fading is not None:
            mc = monte_carlo_average(s.fading, s.params, s.scheme, s.tol, workers=mc_workers)
            return ResultRow(s.sweep_var, s.value, s.scheme, mc.mean, bool(mc.mean > 0.0),
                             stderr=mc.stderr, series=s.series)
        return _solve_fixed(s)
    except (ValueError, ArithmeticError, FloatingPointError):
        return ResultRow(s.sweep_var, s.value, s.scheme, 0.0, False, series=s.series)


def run_sweep(spec: SweepSpec, tol: Tolerances = DEFAULT_TOL, workers: int | None = None) -> list[ResultRow]:
    """Solve every (series, value, scheme) point; rows in sweep order."""
    setups = _setups(spec, tol)
    workers = worker_count() if workers is None else max(1, workers)
    if spec.fading is not None:
        # parallelise over realizations instead of points
        return [solve_point(s, workers) for s in setups]
    if workers <= 1 or len(setups) <= 1:
        return [solve_point(s) for s in setups]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(solve_point, setups))


# ---------------------------------------------------------------------------
# output

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return repr(v) if math.isfinite(v) else ""


def rows_to_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.sweep_var, _fmt(r.value), r.scheme, _fmt(r.objective), _fmt(r.t2_bar),
                    _fmt(r.p1), _fmt(r.p2), _fmt(r.r1), _fmt(r.r2), _fmt(r.n1), _fmt(r.n2),
                    _fmt(r.feasible), _fmt(r.stderr), r.series])
    return buf.getvalue()


def write_csv(rows: list[ResultRow], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))


def read_csv(path: str | os.PathLike) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def write_plot(rows: list[ResultRow], path: str | os.PathLike, y_field: str = "objective",
               title: str = "") -> bool:
    """Line plot of ``y_field`` against the sweep value; returns False if plotting failed."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        curves: dict[tuple[str, str], list[tuple[float, float]]] = {}
        for r in rows:
            y = getattr(r, y_field)
            curves.setdefault((r.series, r.scheme), []).append((r.value, math.nan if y is None else float(y)))
        for (series, scheme), pts in curves.items():
            xs, ys = zip(*pts)
            label = scheme if not series else f"{scheme} ({series})"
            ax.plot(xs, ys, marker="o", markersize=3, label=label)
        if rows:
            ax.set_xlabel(rows[0].sweep_var)
        ax.set_ylabel(y_field)
        if title:
            ax.set_title(title)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
        return True
    except Exception:  # plots are a convenience; the CSV is already on disk
        return False


# ---------------------------------------------------------------------------
# presets

FIG9_SCENARIO = ScenarioFading(d1=20.0, d2=60.0, alpha=2.0, seed=0, realizations=200)

ALL_SCHEMES = ("noma", "oma", "oma-fixed")

PRESETS: dict[str, SweepSpec] = {
    "fig2": SweepSpec(
        "p2", 0.0, 1e4, 201, ("noma",), n=100, snr_db=40.0, h1_mag=0.8, h2_mag=0.2,
        series=({"t0": 1.0}, {"t0": 1.5}, {"t0": 2.0}),
        description="T1 of NOMA vs P2; |h1|=0.8, |h2|=0.2, snr=40dB, N=100, T0 in {1, 1.5, 2}"),
    "fig3": SweepSpec(
        "r2", 2.0, 12.0, 201, ("noma",), n=200, t0=2.0, h1_mag=0.8, h2_mag=0.1,
        series=({"snr_db": 30.0}, {"snr_db": 35.0}, {"snr_db": 40.0}),
        description="T1 of NOMA vs R2; T0=2, N=200, |h1|=0.8, |h2|=0.1, snr in {30, 35, 40} dB"),
    "fig4": SweepSpec(
        "r1", 0.5, 14.0, 109, ALL_SCHEMES, n=200, snr_db=40.0, t0=3.0, h1_mag=0.8, h2_mag=0.1,
        description="T1 vs R1 for NOMA, OMA and OMA N1=N2; T0=3, snr=40dB, N=200, |h1|=0.8, |h2|=0.1"),
    "fig5": SweepSpec(
        "t0", 0.25, 5.0, 20, ALL_SCHEMES, n=200, snr_db=40.0, h1_mag=0.8,
        series=({"h2_mag": 0.1}, {"h2_mag": 0.2}),
        description="T1* vs T0; snr=40dB, |h1|=0.8, N=200, |h2| in {0.1, 0.2}"),
    "fig6": SweepSpec(
        "n", 100, 1000, 10, ("oma",), h1_mag=0.8, h2_mag=0.1,
        series=({"t0": 1.0, "snr_db": 40.0}, {"t0": 2.0, "snr_db": 40.0}, {"t0": 2.0, "snr_db": 30.0}),
        plot_field="n1",
        description="N1* of OMA vs N; |h1|=0.8 and |h2|=0.1, (T0, snr) in {(1, 40dB), (2, 40dB), (2, 30dB)}"),
    "fig7": SweepSpec(
        "n", 50, 1000, 20, ALL_SCHEMES, snr_db=40.0, t0=2.0, h1_mag=0.8, h2_mag=0.1,
        description="T1* vs N; snr=40dB, |h1|=0.8, |h2|=0.1, T0=2"),
    "fig8": SweepSpec(
        "n", 100, 1000, 19, ALL_SCHEMES, snr_db=30.0, t0=2.0, h1_mag=0.8, h2_mag=0.4,
        description="T1* vs N; snr=30dB, |h1|=0.8, |h2|=0.4, T0=2"),
    "fig9": SweepSpec(
        "snr_db", 20.0, 120.0, 11, ALL_SCHEMES, n=200, t0=2.0, fading=FIG9_SCENARIO,
        description="mean T1* vs snr under Rayleigh fading; d1=20m, d2=60m, alpha=2, T0=2, N=200, "
                    "200 realizations, seed 0"),
}


def get_preset(name: str) -> SweepSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"preset: unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def list_presets() -> str:
    lines = []
    for name, spec in PRESETS.items():
        lines.append(f"{name}: {spec.description}")
        lines.append(f"    sweep {spec.sweep_var} from {spec.start!r} to {spec.stop!r} "
                     f"({spec.points} points); schemes {', '.join(spec.schemes)}")
    return "\n".join(lines) + "\n"


def spec_with(spec: SweepSpec, **changes) -> SweepSpec:
    """Copy of ``spec`` with the given fields replaced (validated again)."""
    known = {f.name for f in fields(SweepSpec)}
    bad = set(changes) - known
    if bad:
        raise ValueError(f"unknown sweep fields {sorted(bad)}")
    return replace(spec, **changes)
