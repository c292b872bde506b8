"""Run the built-in sweep presets and write one CSV and one PNG per preset.

    python3 scripts/run_figures.py --out results
    python3 scripts/run_figures.py fig7 fig8 --out results
    python3 scripts/run_figures.py fig9 --realizations 50 --out results
"""

import argparse
import time
from pathlib import Path

from shortnoma.channel import ScenarioFading
from shortnoma.experiments import PRESETS, get_preset, run_sweep, spec_with, write_csv, write_plot


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("presets", nargs="*", default=list(PRESETS), help="preset names (default: all)")
    ap.add_argument("--out", default="results", help="output directory")
    ap.add_argument("--realizations", type=int, default=None, help="override draws for fading presets")
    ap.add_argument("--workers", type=int, default=None, help="process count (default: SHORTNOMA_WORKERS or CPUs)")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.presets:
        spec = get_preset(name)
        if spec.fading is not None and args.realizations is not None:
            f = spec.fading
            spec = spec_with(spec, fading=ScenarioFading(f.d1, f.d2, f.alpha, f.seed, args.realizations,
                                                         f.sigma1_sq, f.sigma2_sq))
        start = time.perf_counter()
        rows = run_sweep(spec, workers=args.workers)
        write_csv(rows, out / f"{name}.csv")
        plotted = write_plot(rows, out / f"{name}.png", y_field=spec.plot_field, title=spec.description)
        print(f"{name}: {len(rows)} rows in {time.perf_counter() - start:.1f}s"
              f"{'' if plotted else ' (plot skipped)'}")


if __name__ == "__main__":
    main()
