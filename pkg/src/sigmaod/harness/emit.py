"""CSV and manifest output.

Floats are written with ``repr`` so a file read back reproduces every value
bit for bit. Column layouts:

``errors.csv``       filter, trial, status, time, track, x, y, z, vx, vy, vz
``residuals.csv``    filter, trial, status, time, track, one column per measurement component
``track_stats.csv``  filter, track, n_trials, n_samples, pos_rmse, vel_rmse,
                     rmse_<component> (6), resid_rms_<measurement component>
``filter_runs.csv``  trial, seed, filter, status, resets, fail_epoch, cause
``runtimes.csv``     trial, filter, runtime_s   (wall clock, not reproducible)
``sweep.csv``        param, value, track, converged, n_ok, n_diverged, n_failed,
                     resets, pos_rmse, vel_rmse
``truth.csv``        time, track, x, y, z, vx, vy, vz
``measurements.csv`` time, track, one column per measurement component
``manifest.cfg``     the full flat configuration; feed it back to replay the run
"""
import csv
import os

import numpy as np

from ..errors import SigmaODError
from .config import format_config, parse_config
from .stats import STATE_LABELS, ErrorTable, TrackStats

__all__ = ["OutputError", "measurement_labels", "write_csv", "read_csv", "write_errors",
           "read_error_table", "write_track_stats", "read_track_stats", "write_runs",
           "write_runtimes", "write_sweep", "write_scenario", "write_manifest", "emit_results",
           "ensure_dir", "MANIFEST", "RUNTIME_FILE"]

MANIFEST = "manifest.cfg"
RUNTIME_FILE = "runtimes.csv"
_KEYS = ["filter", "trial", "status", "time", "track"]
_MEAS = {"radar": ("range", "range_rate", "ra", "dec"), "radec": ("ra", "dec"),
         "azel": ("az", "el")}


class OutputError(SigmaODError):
    """Reading or writing a result file failed."""


def measurement_labels(sensor, n=None):
    labels = _MEAS.get(sensor)
    if labels is None or (n is not None and len(labels) != n):
        labels = tuple(f"z{i}" for i in range(n or 0))
    return labels


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def write_csv(path, header, rows):
    """Write ``rows`` (iterables) under ``header``; returns ``path``."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path):
    """(header, list of string rows)."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise OutputError(f"{path}: empty file")
    return rows[0], rows[1:]


def write_errors(out_dir, table, meas_labels):
    e = write_csv(os.path.join(out_dir, "errors.csv"), _KEYS + list(STATE_LABELS),
                  _table_rows(table, table.err))
    r = write_csv(os.path.join(out_dir, "residuals.csv"), _KEYS + list(meas_labels),
                  _table_rows(table, table.resid))
    return e, r


def _table_rows(table, values):
    for i in range(len(table)):
        yield [table.filter[i], table.trial[i], table.status[i], table.time[i],
               table.track[i], *values[i]]


def read_error_table(out_dir):
    """Rebuild the ErrorTable from ``errors.csv`` and ``residuals.csv``."""
    _, erows = read_csv(os.path.join(out_dir, "errors.csv"))
    rhead, rrows = read_csv(os.path.join(out_dir, "residuals.csv"))
    if len(erows) != len(rrows):
        raise OutputError(f"{out_dir}: errors.csv and residuals.csv row counts differ")
    nz = len(rhead) - len(_KEYS)
    if not erows:
        return ErrorTable(np.zeros(0, dtype=object), np.zeros(0, dtype=int),
                          np.zeros(0, dtype=object), np.zeros(0), np.zeros(0, dtype=int),
                          np.zeros((0, 6)), np.zeros((0, nz)))
    try:
        return ErrorTable(
            np.array([r[0] for r in erows], dtype=object),
            np.array([int(r[1]) for r in erows]),
            np.array([r[2] for r in erows], dtype=object),
            np.array([float(r[3]) for r in erows]),
            np.array([int(r[4]) for r in erows]),
            np.array([[float(v) for v in r[5:]] for r in erows]).reshape(-1, 6),
            np.array([[float(v) for v in r[5:]] for r in rrows]).reshape(-1, nz),
        )
    except (ValueError, IndexError) as exc:
        raise OutputError(f"{out_dir}: malformed error table: {exc}") from exc


def write_track_stats(path, stats, meas_labels):
    header = (["filter", "track", "n_trials", "n_samples", "pos_rmse", "vel_rmse"]
              + [f"rmse_{c}" for c in STATE_LABELS]
              + [f"resid_rms_{c}" for c in meas_labels])
    rows = ([s.filter, s.track, s.n_trials, s.n_samples, s.pos_rmse, s.vel_rmse,
             *s.comp_rmse, *s.resid_rms] for s in stats)
    return write_csv(path, header, rows)


def read_track_stats(path):
    header, rows = read_csv(path)
    nz = len(header) - 12
    out = []
    for r in rows:
        vals = [float(v) for v in r[4:]]
        out.append(TrackStats(r[0], r[1], int(r[2]), int(r[3]), vals[0], vals[1],
                              np.array(vals[2:8]), np.array(vals[8:8 + nz])))
    return out


def write_runs(path, results):
    rows = []
    for res in results:
        for label, run in res.runs.items():
            resets = int(run.resets.sum()) if run.resets is not None else 0
            rows.append([res.trial, res.seed, label, run.status, resets, run.fail_epoch,
                         run.cause])
    return write_csv(path, ["trial", "seed", "filter", "status", "resets", "fail_epoch",
                            "cause"], rows)


def write_runtimes(path, results):
    rows = ([res.trial, label, run.runtime] for res in results for label, run in res.runs.items())
    return write_csv(path, ["trial", "filter", "runtime_s"], rows)


def write_sweep(path, sweep):
    rows = []
    for pt in sweep:
        for s in pt.stats:
            rows.append([pt.param, pt.value, s.track, pt.converged,
                         pt.n_ok, pt.n_diverged, pt.n_failed, pt.resets, s.pos_rmse, s.vel_rmse])
    return write_csv(path, ["param", "value", "track", "converged", "n_ok", "n_diverged",
                            "n_failed", "resets", "pos_rmse", "vel_rmse"], rows)


def write_scenario(out_dir, scn, meas_labels):
    t = write_csv(os.path.join(out_dir, "truth.csv"), ["time", "track", *STATE_LABELS],
                  ([scn.times[k], scn.tracks[k], *scn.truth[:, k]] for k in range(scn.times.size)))
    m = write_csv(os.path.join(out_dir, "measurements.csv"), ["time", "track", *meas_labels],
                  ([scn.times[k], scn.tracks[k], *scn.z[:, k]] for k in range(scn.times.size)))
    return t, m


def write_manifest(out_dir, raw, header=None):
    """Write the flat config ``raw`` so that loading it replays the run."""
    path = os.path.join(out_dir, MANIFEST)
    text = format_config(raw, header)
    # the manifest must parse back to the same values
    if parse_config(text) != {k: _normal(v) for k, v in raw.items()}:
        raise OutputError("configuration does not survive a manifest round trip")
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def _normal(v):
    # the value parse_value returns for format_value(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_normal(x) for x in v]
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, (np.integer, np.bool_)):
        return v.item()
    return v


def ensure_dir(out_dir):
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out_dir}: {exc}") from exc


def emit_results(out_dir, cfg, results, stats, table):
    """Write every file of a ``run``; returns the list of paths."""
    ensure_dir(out_dir)
    labels = measurement_labels(cfg.sensor, table.resid.shape[1] or None)
    paths = list(write_errors(out_dir, table, labels))
    paths.append(write_track_stats(os.path.join(out_dir, "track_stats.csv"), stats, labels))
    paths.append(write_runs(os.path.join(out_dir, "filter_runs.csv"), results))
    paths.append(write_runtimes(os.path.join(out_dir, RUNTIME_FILE), results))
    paths.append(write_manifest(out_dir, cfg.raw))
    return paths
