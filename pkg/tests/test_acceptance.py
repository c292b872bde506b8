"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``.  Criteria 3 and 7 are
known to fail for reasons recorded in the project notes; they are run at
their stated settings regardless.
"""

import math
from collections import defaultdict

import numpy as np
import pytest

from shortnoma.channel import ScenarioFading, ScenarioFixed, db_to_linear, monte_carlo_average
from shortnoma.experiments import get_preset, run_sweep, spec_with
from shortnoma.fbl import capacity, decode_error_prob
from shortnoma.noma import ChannelGains, NomaDecision, SystemParams, evaluate_noma, sinr
from shortnoma.noma_opt import (DEFAULT_TOL, convexity_gate, d_throughput_u2_dr2, fixed_point_map_slope,
                                max_throughput, optimize_noma, r2_ddagger, t1_of_r1, throughput_u2_of_r2,
                                u_condition)
from shortnoma.oma import optimize_oma
from shortnoma.oracle import GridSpec, compare_noma, compare_oma, random_instances

TOL = DEFAULT_TOL.throughput_tol


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {detail}")
        return ok
    return emit


def _fixed(h1, h2, snr_db, n, t0):
    return ScenarioFixed(h1, h2).gains(), SystemParams(n, db_to_linear(snr_db), t0)


# ---------------------------------------------------------------------------

def test_criterion_1_latency_fig8(report):
    gains, params = _fixed(0.8, 0.4, 30.0, 100, 2.0)
    noma_100 = optimize_noma(gains, params).objective

    def oma_at(n):
        return optimize_oma(gains, SystemParams(n, params.p_total, 2.0)).objective

    oma_560 = oma_at(560)
    agree = abs(noma_100 - oma_560) <= 0.02 * max(noma_100, oma_560)
    # first N with OMA >= NOMA(100): coarse scan, then unit steps inside the bracket
    coarse = list(range(100, 1001, 20))
    hit = next((n for n in coarse if oma_at(n) >= noma_100), None)
    first = None
    if hit is not None:
        first = next(n for n in range(max(hit - 19, 2), hit + 1) if oma_at(n) >= noma_100)
    in_range = first is not None and 500 <= first <= 620
    ok = agree and in_range
    report(1, ok, f"NOMA(N=100)={noma_100:.4f}, OMA(N=560)={oma_560:.4f} "
                  f"(rel diff {abs(noma_100 - oma_560) / noma_100:.2%}, need <= 2%); "
                  f"first OMA N reaching NOMA(100) = {first} (need 500..620)")
    assert ok


def test_criterion_2_fig7(report):
    spec = get_preset("fig7")
    gains, params = _fixed(spec.h1_mag, spec.h2_mag, spec.snr_db, 50, spec.t0)
    noma_50 = optimize_noma(gains, params).objective
    oma_2000 = optimize_oma(gains, SystemParams(2000, params.p_total, spec.t0)).objective
    ok = noma_50 >= 9.5 * 0.98 and oma_2000 < noma_50
    report(2, ok, f"T0={spec.t0}: NOMA(N=50)={noma_50:.4f} (need >= 9.5 within 2%), "
                  f"OMA(N=2000)={oma_2000:.4f} (need < NOMA(N=50))")
    assert ok


FIG9_DOMINANCE_REALIZATIONS = 50


def test_criterion_3_dominance(report):
    violations = []
    checked = 0
    for name in ("fig4", "fig5", "fig7", "fig8", "fig9"):
        spec = get_preset(name)
        if spec.fading is not None:
            spec = spec_with(spec, fading=spec_with_realizations(spec.fading, FIG9_DOMINANCE_REALIZATIONS))
        by_point = defaultdict(dict)
        for r in run_sweep(spec):
            by_point[(r.series, r.value)][r.scheme] = r.objective
        for (series, value), obj in by_point.items():
            checked += 1
            if obj["noma"] < obj["oma"] - TOL:
                violations.append(f"{name} {series or '-'} {spec.sweep_var}={value:g}: "
                                  f"noma {obj['noma']:.4f} < oma {obj['oma']:.4f}")
            if obj["oma"] < obj["oma-fixed"] - TOL:
                violations.append(f"{name} {series or '-'} {spec.sweep_var}={value:g}: "
                                  f"oma {obj['oma']:.4f} < oma-fixed {obj['oma-fixed']:.4f}")
    ok = not violations
    per_preset = {name: sum(v.startswith(name + " ") for v in violations)
                  for name in ("fig4", "fig5", "fig7", "fig8", "fig9")}
    shown = "; ".join(violations[:3]) + (f"; ... ({len(violations)} total)" if len(violations) > 3 else "")
    report(3, ok, f"{checked} sweep points on fig4/5/7/8/9 (fig9 at {FIG9_DOMINANCE_REALIZATIONS} draws); "
                  f"violations per preset {per_preset}: {shown or 'none'}")
    assert ok


def spec_with_realizations(scenario: ScenarioFading, count: int) -> ScenarioFading:
    return ScenarioFading(scenario.d1, scenario.d2, scenario.alpha, scenario.seed, count,
                          scenario.sigma1_sq, scenario.sigma2_sq)


def test_criterion_4_structure(report):
    notes, ok = [], True
    fig2 = get_preset("fig2")
    for entry in fig2.series:
        gains, params = _fixed(fig2.h1_mag, fig2.h2_mag, fig2.snr_db, fig2.n, entry["t0"])
        rep = optimize_noma(gains, params)
        good = rep.feasible and rep.decision.p2 > rep.p2_lower
        ok &= good
        notes.append(f"fig2 T0={entry['t0']}: P2*-P2l={rep.decision.p2 - (rep.p2_lower or 0):.2f}")
    fig3 = get_preset("fig3")
    for entry in fig3.series:
        gains, params = _fixed(fig3.h1_mag, fig3.h2_mag, entry["snr_db"], fig3.n, fig3.t0)
        rep = optimize_noma(gains, params)
        good = rep.feasible and rep.decision.r2 < r2_ddagger(rep.evaluation.gamma2, params.n)
        ok &= good
        notes.append(f"fig3 {entry['snr_db']:g}dB: R2*={rep.decision.r2:.6f} < "
                     f"R2dd={r2_ddagger(rep.evaluation.gamma2, params.n):.6f}")
    fig6 = get_preset("fig6")
    n1 = defaultdict(dict)
    for r in run_sweep(fig6):
        n1[r.series][r.value] = r.n1
    for series, curve in n1.items():
        vals = [curve[v] for v in sorted(curve)]
        good = None not in vals and all(b >= a for a, b in zip(vals, vals[1:]))
        ok &= good
        notes.append(f"fig6 {series}: N1* monotone={good}")
    low, high = n1["snr_db=40.0;t0=1.0"], n1["snr_db=40.0;t0=2.0"]
    dec_t0 = all(low[v] > high[v] for v in low)
    ok &= dec_t0
    notes.append(f"fig6 N1* decreasing in T0 at every N={dec_t0}")
    report(4, ok, "; ".join(notes))
    assert ok


ORACLE_INSTANCES = 20
ORACLE_SEED = 2024


def test_criterion_5_oracle(report):
    results = []
    for gains, params in random_instances(ORACLE_SEED, ORACLE_INSTANCES):
        results.append(compare_noma(gains, params, GridSpec(201, 201, 201)))
        results.append(compare_oma(gains, params, GridSpec(201, 201, 201)))
    bad = [c for c in results if not c.ok]
    feasible = sum(c.oracle_objective > 0 for c in results)
    worst = max(results, key=lambda c: c.deviation / max(c.allowed, 1e-300))
    lowest = min(c.solver_objective - c.oracle_objective for c in results)
    ok = not bad
    report(5, ok, f"{ORACLE_INSTANCES} instances x 2 schemes ({feasible} feasible); mismatches={len(bad)}; "
                  f"worst {worst.scheme} deviation {worst.deviation:.2e} vs allowed {worst.allowed:.2e}; "
                  f"min(solver - oracle) = {lowest:+.2e}")
    assert ok


def _property_checks():
    rng = np.random.default_rng(99)
    out = {}

    samples = [(10 ** rng.uniform(-3, 4), int(rng.integers(50, 2001)), rng.uniform(0, 1)) for _ in range(200)]
    mono_g = mono_r = slope = True
    for g, n, frac in samples:
        r = frac * capacity(g)
        e0 = decode_error_prob(g, n, r)
        e1 = decode_error_prob(g + 1e-6 * g, n, r)
        mono_g &= e1 < e0 if e0 > 1e-290 else e1 <= e0
        e2 = decode_error_prob(g, n, r + 1e-3 * capacity(g))
        mono_r &= e2 > e0 if e0 > 1e-290 else e2 >= e0
    out["error probability decreasing in SNR"] = mono_g
    out["error probability increasing in rate"] = mono_r

    conc2 = conc1 = contraction = fd_ok = True
    for g, n, _ in samples[:100]:
        c = capacity(g)
        h = c / 400
        r = np.linspace(h, c - h, 398)
        conc2 &= bool(np.all(throughput_u2_of_r2(g, n, r + h) - 2 * throughput_u2_of_r2(g, n, r)
                             + throughput_u2_of_r2(g, n, r - h) <= 1e-8))
        t_max, r_dd = max_throughput(g, n)
        grid = np.linspace(0.0, r_dd, 400)[:-1]
        contraction &= bool(np.all(np.abs(fixed_point_map_slope(g, n, rng.uniform(0.05, 0.95) * t_max, grid)) < 1))
        for x in (g, 10 * g):  # user-2 derivative at gamma2, user-1 condition at a larger SNR
            rr = rng.uniform(0.02, 0.98) * capacity(x)
            step = 1e-6 * max(rr, 1e-3)
            fd = (throughput_u2_of_r2(x, n, rr + step) - throughput_u2_of_r2(x, n, rr - step)) / (2 * step)
            an = d_throughput_u2_dr2(x, n, rr) if x == g else u_condition(x, n, rr)
            fd_ok &= abs(an - fd) <= 1e-6 * max(abs(fd), 1.0)
    out["user-2 throughput concave in R2"] = conc2
    out["fixed-point map is a contraction"] = contraction
    out["analytic rate derivatives match finite differences"] = fd_ok

    for _ in range(100):
        h1 = rng.uniform(0.05, 1)
        p = 10 ** rng.uniform(1, 5)
        split = rng.uniform(0.05, 0.95)
        eps21 = rng.uniform(0, 1)
        n = int(rng.integers(50, 2001))
        p1, p2 = p * split, p * (1 - split)
        g1, g1p = p1 * h1, sinr(p1, p2, h1)
        for lo, hi in ((0.0, capacity(g1p)), (capacity(g1p), capacity(g1))):
            step = (hi - lo) / 404
            r = np.linspace(lo + 2 * step, hi - 2 * step, 400)
            t = lambda x: t1_of_r1(x, g1, g1p, eps21, n)
            conc1 &= bool(np.all(t(r + step) - 2 * t(r) + t(r - step) <= 1e-8))
    out["user-1 throughput concave in R1 on each branch"] = conc1

    reports_ok = gate_concave = True
    gate_cases = 0
    for gains, params in random_instances(7, 20):
        rep = optimize_noma(gains, params)
        if rep.feasible:
            d = rep.decision
            reports_ok &= abs(d.p1 + d.p2 - params.p_total) <= 1e-9 * params.p_total
            reports_ok &= abs(rep.evaluation.t2_bar - params.t0) <= TOL
            if rep.convexity_gate:
                hstep = 1e-4 * d.p1
                vals = []
                for k in range(-3, 4):
                    dd = NomaDecision(d.p1 + k * hstep, d.p2, d.r1, d.r2)
                    if not convexity_gate(gains, dd, params.n):
                        break
                    vals.append(evaluate_noma(gains, dd, SystemParams(params.n, dd.p1 + dd.p2, params.t0)).t1_bar)
                else:
                    v = np.array(vals)
                    gate_cases += 1
                    gate_concave &= bool(np.all(v[2:] - 2 * v[1:-1] + v[:-2] <= 1e-8))
    out["power and throughput constraints active on feasible reports"] = reports_ok
    out[f"user-1 throughput concave in P1 where the gate holds ({gate_cases} cases)"] = gate_concave and gate_cases > 0
    return out


def test_criterion_6_properties(report):
    checks = _property_checks()
    failed = [k for k, v in checks.items() if not v]
    ok = not failed
    report(6, ok, f"{len(checks) - len(failed)}/{len(checks)} property suites hold"
                  + (f"; failing: {', '.join(failed)}" if failed else ""))
    assert ok


MC_REALIZATIONS = 2000
MC_SNRS = (20.0, 30.0, 40.0)


def test_criterion_7_fading(report):
    spec = get_preset("fig9")
    scenario = spec_with_realizations(spec.fading, MC_REALIZATIONS)
    means, parts, ok = {}, [], True
    for snr_db in MC_SNRS:
        params = SystemParams(spec.n, db_to_linear(snr_db), spec.t0)
        res = {s: monte_carlo_average(scenario, params, s) for s in ("noma", "oma", "oma-fixed")}
        means[snr_db] = res
        diff = res["noma"].values - res["oma"].values
        se = float(np.std(diff, ddof=1) / math.sqrt(diff.size))
        margin = float(diff.mean())
        ok &= margin > 2 * se and margin > 0
        parts.append(f"{snr_db:g}dB noma={res['noma'].mean:.4f} oma={res['oma'].mean:.4f} "
                     f"fixed={res['oma-fixed'].mean:.4f} (noma-oma={margin:.4f}, 2se={2 * se:.4f})")
    gaps = [means[s]["noma"].mean - means[s]["oma-fixed"].mean for s in MC_SNRS]
    increasing = all(b > a for a, b in zip(gaps, gaps[1:]))
    ok &= increasing
    report(7, ok, "; ".join(parts) + f"; noma-fixed gap increasing={increasing}")
    assert ok
