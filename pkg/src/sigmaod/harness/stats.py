"""Per-track error statistics over Monte-Carlo trials.

Statistics are computed from an :class:`ErrorTable`, a flat per-epoch table
that is also what ``errors.csv``/``residuals.csv`` hold, so every emitted
figure can be recomputed exactly from the files.
"""
from dataclasses import dataclass

import numpy as np

__all__ = ["ErrorTable", "TrackStats", "error_table", "compute_stats", "stats_lookup"]

STATE_LABELS = ("x", "y", "z", "vx", "vy", "vz")


@dataclass(eq=False)
class ErrorTable:
    """Per-epoch errors stacked over trials and filters (row-aligned).

    Only runs that produced an estimate sequence appear; ``status`` tells
    ok and diverged runs apart.
    """

    filter: np.ndarray    # (R,) str
    trial: np.ndarray     # (R,) int
    status: np.ndarray    # (R,) str
    time: np.ndarray      # (R,) float
    track: np.ndarray     # (R,) int
    err: np.ndarray       # (R, 6)
    resid: np.ndarray     # (R, n_z)

    def __len__(self):
        return self.trial.shape[0]

    def filters(self):
        """Filter labels in order of first appearance."""
        seen = []
        for f in self.filter:
            if f not in seen:
                seen.append(f)
        return seen


def error_table(results):
    """Stack a list of TrialResult into an ErrorTable (trial order, then filter order)."""
    cols = {k: [] for k in ("filter", "trial", "status", "time", "track", "err", "resid")}
    nz = 0
    for res in results:
        for label, run in res.runs.items():
            if run.errors is None:
                continue
            k = run.errors.shape[1]
            nz = run.residuals.shape[0]
            cols["filter"].append(np.full(k, label, dtype=object))
            cols["trial"].append(np.full(k, res.trial))
            cols["status"].append(np.full(k, run.status, dtype=object))
            cols["time"].append(np.asarray(res.times, dtype=float))
            cols["track"].append(np.asarray(res.tracks, dtype=int))
            cols["err"].append(run.errors.T)
            cols["resid"].append(run.residuals.T)
    if not cols["trial"]:
        return ErrorTable(np.zeros(0, dtype=object), np.zeros(0, dtype=int),
                          np.zeros(0, dtype=object), np.zeros(0), np.zeros(0, dtype=int),
                          np.zeros((0, 6)), np.zeros((0, nz)))
    return ErrorTable(np.concatenate(cols["filter"]), np.concatenate(cols["trial"]),
                      np.concatenate(cols["status"]), np.concatenate(cols["time"]),
                      np.concatenate(cols["track"]), np.concatenate(cols["err"]),
                      np.concatenate(cols["resid"]))


@dataclass(eq=False)
class TrackStats:
    """Pooled RMSE of one filter over one track (or 'all') and the counted trials.

    ``pos_rmse`` is the root of the summed x/y/z mean squares, likewise
    ``vel_rmse``; ``comp_rmse`` holds the six component RMSEs and
    ``resid_rms`` the post-fit residual RMS per measurement component.
    """

    filter: str
    track: str
    n_trials: int
    n_samples: int
    pos_rmse: float
    vel_rmse: float
    comp_rmse: np.ndarray
    resid_rms: np.ndarray


def _rows(sel, table, label, track):
    e = table.err[sel]
    r = table.resid[sel]
    n = e.shape[0]
    if n:
        ms = np.mean(e * e, axis=0)
        rs = np.sqrt(np.mean(r * r, axis=0))
    else:
        ms = np.full(6, np.nan)
        rs = np.full(table.resid.shape[1], np.nan)
    return TrackStats(label, track, int(np.unique(table.trial[sel]).size), n,
                      float(np.sqrt(ms[:3].sum())), float(np.sqrt(ms[3:].sum())),
                      np.sqrt(ms), rs)


def compute_stats(table, include_diverged=False):
    """TrackStats per filter for every track label and for 'all' epochs.

    Parameters
    ----------
    table : ErrorTable
    include_diverged : bool
        Diverged runs are left out of the averages unless set.

    Returns
    -------
    list of TrackStats
        Ordered by filter (first appearance) then track, 'all' last.
    """
    out = []
    keep = np.ones(len(table), dtype=bool) if include_diverged else table.status == "ok"
    tracks = sorted(int(t) for t in np.unique(table.track)) if len(table) else []
    for label in table.filters():
        mine = keep & (table.filter == label)
        for t in tracks:
            out.append(_rows(mine & (table.track == t), table, label, str(t)))
        out.append(_rows(mine, table, label, "all"))
    return out


def stats_lookup(stats):
    """``{(filter, track): TrackStats}``."""
    return {(s.filter, s.track): s for s in stats}
