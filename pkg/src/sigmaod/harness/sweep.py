"""One-parameter sweeps of a single filter kind."""
from dataclasses import dataclass

import numpy as np

from .config import filter_kinds
from .montecarlo import run_monte_carlo
from .scenario import synthesize
from .stats import compute_stats, error_table

__all__ = ["SweepPoint", "sweep_parameter", "sweep_values"]


@dataclass(eq=False)
class SweepPoint:
    """Result of the full Monte-Carlo run at one parameter value.

    ``converged`` is True when every trial finished with status 'ok'.
    ``reset_signature`` lists the per-step w-mode reset counts of every
    trial, so two values with the same signature took identical branches.
    """

    param: str
    value: float
    stats: list
    converged: bool
    n_ok: int
    n_diverged: int
    n_failed: int
    resets: int
    reset_signature: tuple
    results: list


def sweep_values(lo, hi, count):
    """``count`` evenly spaced values from ``lo`` to ``hi`` inclusive."""
    return [float(v) for v in np.linspace(lo, hi, int(count))]


def sweep_parameter(cfg, kind, param, values, workers=1, progress=None):
    """Run ``cfg`` once per value of ``kind``'s parameter ``param``.

    Parameters
    ----------
    cfg : ScenarioConfig
    kind : str
        Filter name or alias, e.g. ``'W_HOUSE'``.
    param : str
        FilterKind field, e.g. ``'w_threshold'`` or ``'delta'``.
    values : sequence of float
    workers : int
        Trial-level processes per value.

    Returns
    -------
    list of SweepPoint

    Notes
    -----
    Truth and measurements do not depend on the filter parameter, so every
    trial is synthesized once and shared by all values.
    """
    kinds = [filter_kinds(cfg.raw, [kind], {param: v})[0] for v in values]
    scenarios = {i: synthesize(cfg, cfg.seed + i) for i in range(cfg.trials)} \
        if len(values) > 1 else None
    out = []
    for v, fk in zip(values, kinds):
        results = run_monte_carlo(cfg, [fk], workers=workers, scenarios=scenarios)
        runs = [r.runs[fk.label] for r in results]
        status = [run.status for run in runs]
        sig = tuple(tuple(int(c) for c in run.resets) if run.resets is not None else ()
                    for run in runs)
        pt = SweepPoint(param, float(v), compute_stats(error_table(results)),
                        all(s == "ok" for s in status), status.count("ok"),
                        status.count("diverged"), status.count("failed"),
                        int(sum(sum(s) for s in sig)), sig, results)
        out.append(pt)
        if progress:
            progress(pt)
    return out
