"""Command-line front end: simulate, run, sweep, stats.

Every command writes ``manifest.cfg`` next to its outputs. The manifest holds
the complete configuration including the command's own arguments, so
``sigmaod <command> DIR/manifest.cfg --out OTHER`` reproduces the files.
"""
import argparse
import logging
import os
import sys

import numpy as np

from ..errors import ConfigError, SigmaODError
from ..filters import FilterKind
from .config import FILTER_PARAM_KEYS, load_config, parse_value
from .emit import (RUNTIME_FILE, emit_results, ensure_dir, measurement_labels, read_error_table,
                   read_track_stats, write_manifest, write_scenario, write_sweep,
                   write_track_stats)
from .montecarlo import run_monte_carlo
from .scenario import synthesize
from .stats import compute_stats, error_table
from .sweep import sweep_parameter, sweep_values

__all__ = ["main", "build_parser"]

log = logging.getLogger("sigmaod")

_PARAM_ALIASES = {"w": "w_threshold", "threshold": "w_threshold", "d": "delta",
                  "kappa_t": "kappa"}


def _overrides(pairs):
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise ConfigError(f"--set expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        out[k.strip()] = parse_value(v)
    return out


def _load(args, extra):
    over = _overrides(args.set)
    over.update({k: v for k, v in extra.items() if v is not None})
    return load_config(args.config, over)


def cmd_simulate(args):
    seed = args.seed
    cfg = _load(args, {"simulate.seed": seed})
    seed = int(cfg.raw.get("simulate.seed", cfg.seed))
    ensure_dir(args.out)
    scn = synthesize(cfg, seed)
    labels = measurement_labels(cfg.sensor, scn.z.shape[0])
    write_scenario(args.out, scn, labels)
    write_manifest(args.out, dict(cfg.raw, **{"simulate.seed": seed}))
    print(f"{scn.times.size} measurements in {scn.n_tracks} track(s), seed {seed}")
    for i, (a, b) in enumerate(scn.track_bounds(), 1):
        print(f"  track {i}: {a:.1f} s to {b:.1f} s")
    return 0


def _print_stats(stats, out=sys.stdout):
    print(f"{'filter':<12} {'track':>5} {'trials':>6} {'pos_rmse':>14} {'vel_rmse':>12}", file=out)
    for s in stats:
        print(f"{s.filter:<12} {s.track:>5} {s.n_trials:>6} {s.pos_rmse:>14.6f} "
              f"{s.vel_rmse:>12.6f}", file=out)


def cmd_run(args):
    filters = [f.strip() for f in args.filters.split(",")] if args.filters else None
    cfg = _load(args, {"filters.list": filters, "run.trials": args.trials})
    ensure_dir(args.out)
    done = []

    def progress(r):
        done.append(r)
        bad = [k for k, v in r.runs.items() if v.status != "ok"]
        log.info("trial %d done%s", r.trial, f" (not ok: {', '.join(bad)})" if bad else "")

    results = run_monte_carlo(cfg, workers=args.workers, progress=progress)
    table = error_table(results)
    stats = compute_stats(table)
    emit_results(args.out, cfg, results, stats, table)
    _print_stats(stats)
    print("mean runtime per trial (s):")
    for k in cfg.filters:
        rt = [r.runs[k.label].runtime for r in results]
        ok = sum(r.runs[k.label].status == "ok" for r in results)
        print(f"  {k.label:<12} {np.mean(rt):.4f}   ok {ok}/{len(results)}")
    return 0


def cmd_sweep(args):
    cfg = _load(args, {"sweep.filter": args.filter, "sweep.param": args.param,
                       "sweep.min": args.min, "sweep.max": args.max, "sweep.count": args.count})
    raw = cfg.raw
    missing = [k for k in ("sweep.filter", "sweep.param", "sweep.min", "sweep.max", "sweep.count")
               if k not in raw]
    if missing:
        raise ConfigError(f"sweep needs {', '.join(missing)} (options or manifest keys)")
    param = _PARAM_ALIASES.get(str(raw["sweep.param"]), str(raw["sweep.param"]))
    if param not in FILTER_PARAM_KEYS:
        raise ConfigError(f"unknown filter parameter {param!r}")
    FilterKind.parse(str(raw["sweep.filter"]))
    values = sweep_values(float(raw["sweep.min"]), float(raw["sweep.max"]), int(raw["sweep.count"]))
    ensure_dir(args.out)

    def progress(pt):
        log.info("%s = %r: ok %d diverged %d failed %d resets %d", pt.param, pt.value, pt.n_ok,
                 pt.n_diverged, pt.n_failed, pt.resets)

    pts = sweep_parameter(cfg, str(raw["sweep.filter"]), param, values, workers=args.workers,
                          progress=progress)
    write_sweep(os.path.join(args.out, "sweep.csv"), pts)
    write_manifest(args.out, raw)
    conv = sum(p.converged for p in pts)
    print(f"{conv}/{len(pts)} values converged; {len({_key(p) for p in pts})} distinct outcome(s)")
    return 0


def _key(pt):
    return tuple((s.track, s.pos_rmse, s.vel_rmse) for s in pt.stats)


def cmd_stats(args):
    table = read_error_table(args.results)
    stats = compute_stats(table)
    _print_stats(stats)
    path = os.path.join(args.results, "track_stats.csv")
    if os.path.exists(path):
        stored = {(s.filter, s.track): s for s in read_track_stats(path)}
        diff = [s for s in stats if (s.filter, s.track) not in stored
                or stored[(s.filter, s.track)].pos_rmse != s.pos_rmse
                or stored[(s.filter, s.track)].vel_rmse != s.vel_rmse]
        if diff or len(stored) != len(stats):
            print("recomputed statistics differ from track_stats.csv", file=sys.stderr)
            return 1
        print("track_stats.csv matches the per-epoch tables")
    else:
        nz = table.resid.shape[1]
        write_track_stats(path, stats, measurement_labels("", nz))
    rt = os.path.join(args.results, RUNTIME_FILE)
    if os.path.exists(rt):
        import csv
        with open(rt, newline="") as fh:
            rows = list(csv.DictReader(fh))
        print("mean runtime per trial (s):")
        for f in dict.fromkeys(r["filter"] for r in rows):
            v = [float(r["runtime_s"]) for r in rows if r["filter"] == f]
            print(f"  {f:<12} {np.mean(v):.4f}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="sigmaod", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="scenario config or a manifest.cfg")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable)")

    s = sub.add_parser("simulate", help="synthesize truth and measurements for one seed")
    common(s)
    s.add_argument("--seed", type=int, help="trial seed (default run.seed)")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("run", help="Monte-Carlo run of several filters")
    common(r)
    r.add_argument("--filters", help="comma-separated filter names (default filters.list)")
    r.add_argument("--trials", type=int, help="number of trials (default run.trials)")
    r.add_argument("--workers", type=int, default=1, help="parallel trial processes")
    r.set_defaults(func=cmd_run)

    w = sub.add_parser("sweep", help="sweep one filter parameter")
    common(w)
    w.add_argument("--filter", help="filter kind, e.g. W_HOUSE")
    w.add_argument("--param", help="parameter: w_threshold (w), delta, kappa, ...")
    w.add_argument("--min", type=float)
    w.add_argument("--max", type=float)
    w.add_argument("--count", type=int)
    w.add_argument("--workers", type=int, default=1)
    w.set_defaults(func=cmd_sweep)

    st = sub.add_parser("stats", help="recompute statistics from a results directory")
    st.add_argument("results")
    st.set_defaults(func=cmd_stats)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SigmaODError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
