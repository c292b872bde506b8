"""Monte Carlo mean of user 1's optimised throughput under Rayleigh fading.

Prints, per average SNR, the mean and standard error of each scheme plus the
paired NOMA - OMA margin.  Defaults follow the fig9 preset geometry.

    python3 scripts/fading_trend.py --snr 20 30 40 60 80 100 --realizations 2000
"""

import argparse
import math

import numpy as np

from shortnoma.channel import SOLVERS, ScenarioFading, db_to_linear, monte_carlo_values, summarize
from shortnoma.experiments import get_preset
from shortnoma.noma import SystemParams


def main():
    base = get_preset("fig9")
    f = base.fading
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--snr", type=float, nargs="+", default=[20.0, 30.0, 40.0, 60.0, 80.0, 100.0])
    ap.add_argument("--realizations", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=f.seed)
    ap.add_argument("--n", type=int, default=base.n)
    ap.add_argument("--t0", type=float, default=base.t0)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    scenario = ScenarioFading(f.d1, f.d2, f.alpha, args.seed, args.realizations, f.sigma1_sq, f.sigma2_sq)
    print(f"d1={f.d1} d2={f.d2} alpha={f.alpha} N={args.n} T0={args.t0} draws={args.realizations}")
    print(f"{'snr_db':>7} " + " ".join(f"{s:>20}" for s in SOLVERS) + f" {'noma-oma (2se)':>22}")
    for snr_db in args.snr:
        params = SystemParams(args.n, db_to_linear(snr_db), args.t0)
        vals = {s: monte_carlo_values(scenario, params, s, workers=args.workers) for s in SOLVERS}
        cells = []
        for s in SOLVERS:
            res = summarize(vals[s])
            cells.append(f"{res.mean:10.4f} +- {res.stderr:6.4f}")
        diff = vals["noma"] - vals["oma"]
        se = float(np.std(diff, ddof=1) / math.sqrt(diff.size))
        print(f"{snr_db:7.1f} " + " ".join(f"{c:>20}" for c in cells)
              + f" {diff.mean():12.4f} ({2 * se:.4f})")


if __name__ == "__main__":
    main()
