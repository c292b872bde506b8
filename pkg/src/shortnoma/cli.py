"""Command-line front end: ``solve``, ``sweep``, ``presets`` and ``oracle-check``.

Settings come from an optional TOML file; command-line flags override it.
Exit codes: 0 success, 2 configuration error, 3 infeasible single solve.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .channel import SOLVERS, ScenarioFading, ScenarioFixed, db_to_linear
from .experiments import (PRESETS, SWEEP_VARS, ResultRow, SweepSpec, get_preset, list_presets,
                          run_sweep, write_csv, write_plot)
from .noma import ChannelGains, SystemParams
from .noma_opt import optimize_noma
from .oma import optimize_oma, optimize_oma_fixed_slots
from .oracle import GridSpec, compare_noma, compare_oma, random_instances

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


class ConfigError(Exception):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# ---------------------------------------------------------------------------
# config handling

def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"malformed TOML in {path}: {exc}") from None


def _lookup(cfg: dict, section: str, key: str, flag_value, default=None):
    """Flag value if given, else ``cfg[section][key]``, else ``default``."""
    if flag_value is not None:
        return flag_value
    sec = cfg.get(section, {})
    if not isinstance(sec, dict):
        raise ConfigError(section, "must be a table")
    return sec.get(key, default)


def _as_float(field: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ConfigError(field, f"expected a number, got {value!r}")
    try:
        v = float(value)
    except ValueError:
        raise ConfigError(field, f"expected a number, got {value!r}") from None
    if not math.isfinite(v):
        raise ConfigError(field, f"must be finite, got {value!r}")
    return v


def _as_int(field: str, value) -> int:
    v = _as_float(field, value)
    if v != int(v):
        raise ConfigError(field, f"expected an integer, got {value!r}")
    return int(v)


def _required(field: str, value):
    if value is None:
        raise ConfigError(field, "missing (give it in the config file or as a flag)")
    return value


def _system(cfg: dict, args) -> tuple[int, float, float]:
    n = _as_int("system.n", _required("system.n", _lookup(cfg, "system", "n", args.n)))
    snr_db = _as_float("system.snr_db", _required("system.snr_db",
                                                  _lookup(cfg, "system", "snr_db", args.snr_db)))
    t0 = _as_float("system.t0", _required("system.t0", _lookup(cfg, "system", "t0", args.t0)))
    if n < 1:
        raise ConfigError("system.n", f"must be a positive integer, got {n}")
    if t0 < 0.0:
        raise ConfigError("system.t0", f"must be nonnegative, got {t0}")
    return n, snr_db, t0


def _magnitudes(cfg: dict, args, required: bool = True) -> tuple[float | None, float | None]:
    h1 = _lookup(cfg, "channel", "h1", args.h1)
    h2 = _lookup(cfg, "channel", "h2", args.h2)
    if required:
        _required("channel.h1", h1)
        _required("channel.h2", h2)
    h1 = None if h1 is None else _as_float("channel.h1", h1)
    h2 = None if h2 is None else _as_float("channel.h2", h2)
    for name, v in (("channel.h1", h1), ("channel.h2", h2)):
        if v is not None and v <= 0.0:
            raise ConfigError(name, f"must be a positive magnitude, got {v}")
    if h1 is not None and h2 is not None and not h1 > h2:
        raise ConfigError("channel.h2", f"must be smaller than channel.h1 (user 1 is the stronger user); "
                                        f"got h1={h1}, h2={h2}")
    return h1, h2


# ---------------------------------------------------------------------------
# solve

def _solve_rows(scheme: str, gains: ChannelGains, params: SystemParams) -> tuple[ResultRow, str]:
    if scheme == "noma":
        rep = optimize_noma(gains, params)
        d = rep.decision
        row = ResultRow("none", 0.0, scheme, rep.objective, rep.feasible,
                        t2_bar=rep.evaluation.t2_bar if rep.evaluation else None,
                        p1=d.p1, p2=d.p2, r1=d.r1, r2=d.r2)
        lines = [f"scheme: noma", f"  feasible: {str(rep.feasible).lower()}",
                 f"  objective T1: {rep.objective!r}"]
        if rep.feasible:
            ev = rep.evaluation
            lines += [f"  T2: {ev.t2_bar!r}",
                      f"  P1: {d.p1!r}  P2: {d.p2!r}", f"  R1: {d.r1!r}  R2: {d.r2!r}",
                      f"  eps_bar1: {ev.eps_bar1!r}  eps21: {ev.eps21!r}  eps2: {ev.eps2!r}",
                      f"  P2 lower bound: {rep.p2_lower!r}",
                      f"  convexity gate: {str(rep.convexity_gate).lower()}"]
        if params.t0 == 0.0:
            lines.append("  note: T0 = 0, single-user design (all power to user 1)")
        lines.append(f"  iterations: {rep.iterations}")
        return row, "\n".join(lines)
    sol = (optimize_oma if scheme == "oma" else optimize_oma_fixed_slots)(gains, params)
    d = sol.decision
    row = ResultRow("none", 0.0, scheme, sol.objective, sol.feasible,
                    t2_bar=sol.t2_bar if sol.feasible else None,
                    p1=d.p1, p2=d.p2, r1=d.r1, r2=d.r2, n1=d.n1, n2=d.n2)
    lines = [f"scheme: {scheme}", f"  feasible: {str(sol.feasible).lower()}",
             f"  objective T1: {sol.objective!r}"]
    if sol.feasible:
        lines += [f"  T2: {sol.t2_bar!r}", f"  N1: {d.n1}  N2: {d.n2}",
                  f"  P1: {d.p1!r}  P2: {d.p2!r}", f"  R1: {d.r1!r}  R2: {d.r2!r}"]
    return row, "\n".join(lines)


def cmd_solve(args, cfg: dict) -> int:
    n, snr_db, t0 = _system(cfg, args)
    h1, h2 = _magnitudes(cfg, args)
    scheme = _lookup(cfg, "solve", "scheme", args.scheme, "noma")
    schemes = SOLVERS if scheme == "all" else (scheme,)
    for s in schemes:
        if s not in SOLVERS:
            raise ConfigError("solve.scheme", f"unknown scheme {s!r}; expected one of {SOLVERS} or 'all'")
    if n < 2 and any(s != "noma" for s in schemes):
        raise ConfigError("system.n", "OMA schemes need n >= 2")
    gains = ScenarioFixed(h1, h2).gains()
    params = SystemParams(n=n, p_total=db_to_linear(snr_db), t0=t0)
    rows = []
    for s in schemes:
        row, text = _solve_rows(s, gains, params)
        print(text)
        rows.append(row)
    csv_path = _lookup(cfg, "output", "csv", args.csv)
    if csv_path:
        write_csv(rows, csv_path)
    return EXIT_OK if all(r.feasible for r in rows) else EXIT_INFEASIBLE


# ---------------------------------------------------------------------------
# sweep

def _schemes(field: str, value) -> tuple[str, ...]:
    if isinstance(value, str):
        value = [v.strip() for v in value.split(",") if v.strip()]
    if not isinstance(value, (list, tuple)):
        raise ConfigError(field, f"expected a list of schemes, got {value!r}")
    return tuple(value)


def build_sweep_spec(cfg: dict, args) -> SweepSpec:
    preset = _lookup(cfg, "sweep", "preset", args.preset)
    if preset is not None:
        try:
            spec = get_preset(preset)
        except ValueError as exc:
            raise ConfigError("sweep.preset", str(exc).split(": ", 1)[1]) from None
    else:
        spec = None

    changes = {}
    sweep_keys = {"var": ("sweep_var", str), "start": ("start", float), "stop": ("stop", float),
                  "points": ("points", int)}
    for key, (name, kind) in sweep_keys.items():
        v = _lookup(cfg, "sweep", key, getattr(args, key))
        if v is not None:
            fld = f"sweep.{key}"
            changes[name] = str(v) if kind is str else (_as_int(fld, v) if kind is int else _as_float(fld, v))
    v = _lookup(cfg, "sweep", "schemes", args.schemes)
    if v is not None:
        changes["schemes"] = _schemes("sweep.schemes", v)
    v = _lookup(cfg, "sweep", "plot_field", None)
    if v is not None:
        changes["plot_field"] = str(v)
    series = _lookup(cfg, "sweep", "series", None)
    if series is not None:
        if not isinstance(series, list) or not all(isinstance(e, dict) for e in series):
            raise ConfigError("sweep.series", "expected an array of tables, e.g. [{t0 = 1.0}]")
        changes["series"] = tuple(series)

    for key, section, flag in (("n", "system", args.n), ("snr_db", "system", args.snr_db),
                               ("t0", "system", args.t0)):
        v = _lookup(cfg, section, key, flag)
        if v is not None:
            fld = f"{section}.{key}"
            changes[key] = _as_int(fld, v) if key == "n" else _as_float(fld, v)
    h1, h2 = _magnitudes(cfg, args, required=False)
    if h1 is not None:
        changes["h1_mag"] = h1
    if h2 is not None:
        changes["h2_mag"] = h2

    fading_cfg = cfg.get("fading")
    fading_flags = {k: getattr(args, k) for k in ("d1", "d2", "alpha", "seed", "realizations")}
    if fading_cfg is not None or any(v is not None for v in fading_flags.values()):
        base = spec.fading if spec is not None and spec.fading is not None else None
        values = {}
        for k, flag in fading_flags.items():
            v = _lookup(cfg, "fading", k, flag, getattr(base, k) if base is not None else None)
            if v is None and k in ("d1", "d2"):
                raise ConfigError(f"fading.{k}", "missing")
            if v is not None:
                values[k] = _as_int(f"fading.{k}", v) if k in ("seed", "realizations") else _as_float(f"fading.{k}", v)
        if "seed" not in values:
            raise ConfigError("fading.seed", "missing; fading runs need an explicit seed")
        try:
            changes["fading"] = ScenarioFading(**values)
        except ValueError as exc:
            raise ConfigError("fading", str(exc)) from None

    if spec is None:
        for key in ("sweep_var", "start", "stop", "points"):
            if key not in changes:
                name = "var" if key == "sweep_var" else key
                raise ConfigError(f"sweep.{name}", "missing (or give sweep.preset)")
        try:
            return SweepSpec(**changes)
        except ValueError as exc:
            raise ConfigError("sweep", str(exc)) from None
    try:
        return replace(spec, **changes)
    except ValueError as exc:
        raise ConfigError("sweep", str(exc)) from None


def cmd_sweep(args, cfg: dict) -> int:
    spec = build_sweep_spec(cfg, args)
    csv_path = _required("output.csv", _lookup(cfg, "output", "csv", args.csv))
    plot_path = _lookup(cfg, "output", "plot", args.plot)
    rows = run_sweep(spec, workers=args.workers)
    write_csv(rows, csv_path)
    print(f"wrote {len(rows)} rows to {csv_path}")
    if plot_path:
        if write_plot(rows, plot_path, spec.plot_field, spec.description):
            print(f"wrote plot to {plot_path}")
        else:
            print(f"warning: plot could not be written to {plot_path}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# presets and oracle check

def cmd_presets(args, cfg: dict) -> int:
    sys.stdout.write(list_presets())
    return EXIT_OK


def cmd_oracle_check(args, cfg: dict) -> int:
    count = _as_int("oracle.instances", _lookup(cfg, "oracle", "instances", args.instances, 20))
    seed = _as_int("oracle.seed", _lookup(cfg, "oracle", "seed", args.seed, 0))
    points = _as_int("oracle.grid_points", _lookup(cfg, "oracle", "grid_points", args.grid_points, 201))
    if count < 1:
        raise ConfigError("oracle.instances", "must be >= 1")
    try:
        grid = GridSpec(points, points, points)
    except ValueError as exc:
        raise ConfigError("oracle.grid_points", str(exc)) from None
    worst = {"noma": 0.0, "oma": 0.0}
    failures = 0
    for i, (gains, params) in enumerate(random_instances(seed, count)):
        for cmp in (compare_noma(gains, params, grid), compare_oma(gains, params, grid)):
            worst[cmp.scheme] = max(worst[cmp.scheme], cmp.deviation)
            failures += not cmp.ok
            print(f"{i:3d} {cmp.scheme:4s} solver={cmp.solver_objective:.6f} oracle={cmp.oracle_objective:.6f} "
                  f"dev={cmp.deviation:.2e} allowed={cmp.allowed:.2e} {'ok' if cmp.ok else 'MISMATCH'}")
    print(f"max deviation: noma {worst['noma']:.3e}, oma {worst['oma']:.3e}; mismatches: {failures}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shortnoma", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def system_flags(p):
        p.add_argument("--config", help="TOML config file; flags override it")
        p.add_argument("--n", type=int, help="blocklength N")
        p.add_argument("--snr-db", dest="snr_db", type=float, help="transmit SNR P / sigma^2 in dB")
        p.add_argument("--t0", type=float, help="user-2 throughput target T0")
        p.add_argument("--h1", type=float, help="|h1| channel magnitude (stronger user)")
        p.add_argument("--h2", type=float, help="|h2| channel magnitude (weaker user)")
        p.add_argument("--csv", help="CSV output path")

    p = sub.add_parser("solve", help="solve a single instance")
    system_flags(p)
    p.add_argument("--scheme", choices=SOLVERS + ("all",), help="scheme (default noma)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run a parameter sweep, write CSV and plot")
    system_flags(p)
    p.add_argument("--preset", help=f"start from a preset ({', '.join(PRESETS)})")
    p.add_argument("--var", choices=SWEEP_VARS, help="swept quantity")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--schemes", help="comma-separated subset of " + ",".join(SOLVERS))
    p.add_argument("--plot", help="plot image path (format from extension)")
    p.add_argument("--workers", type=int, help="worker processes (default from SHORTNOMA_WORKERS)")
    p.add_argument("--d1", type=float, help="fading: distance of user 1 in meters")
    p.add_argument("--d2", type=float, help="fading: distance of user 2 in meters")
    p.add_argument("--alpha", type=float, help="fading: path-loss exponent")
    p.add_argument("--seed", type=int, help="fading: RNG seed")
    p.add_argument("--realizations", type=int, help="fading: channel draws per point")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("presets", help="list the built-in sweep presets")
    p.set_defaults(func=cmd_presets, config=None)

    p = sub.add_parser("oracle-check", help="compare the solvers with the brute-force grid oracle")
    p.add_argument("--config", help="TOML config file with an [oracle] table")
    p.add_argument("--instances", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--grid-points", dest="grid_points", type=int)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
