"""Compare both optimisers with the brute-force grid oracle on random instances.

    python3 scripts/oracle_check.py --instances 20 --seed 2024 --grid 201
"""

import argparse
import math

from shortnoma.oracle import GridSpec, compare_noma, compare_oma, random_instances


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=20)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--grid", type=int, default=201, help="points per grid axis")
    args = ap.parse_args()

    grid = GridSpec(args.grid, args.grid, args.grid)
    bad = 0
    print(f"{'#':>3} {'scheme':>6} {'N':>4} {'snr_dB':>7} {'T0':>5} {'solver':>10} {'oracle':>10} "
          f"{'dev':>9} {'allowed':>9}")
    for i, (gains, params) in enumerate(random_instances(args.seed, args.instances)):
        for c in (compare_noma(gains, params, grid), compare_oma(gains, params, grid)):
            bad += not c.ok
            snr_db = 10 * math.log10(params.p_total)
            print(f"{i:3d} {c.scheme:>6} {params.n:4d} {snr_db:7.2f} {params.t0:5.2f} "
                  f"{c.solver_objective:10.5f} {c.oracle_objective:10.5f} {c.deviation:9.2e} {c.allowed:9.2e}"
                  f"{'' if c.ok else '  MISMATCH'}")
    print(f"mismatches: {bad}")
    raise SystemExit(1 if bad else 0)


if __name__ == "__main__":
    main()
