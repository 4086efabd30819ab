"""Monte-Carlo execution of several filters on shared realizations."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging
import time

import numpy as np

from ..astro.elements import mee_to_cart
from ..errors import FilterError
from ..filters import run_filter, wrap_angle
from .scenario import cached_harmonics, filter_models, initial_estimate, synthesize

__all__ = ["FilterRun", "TrialResult", "run_trial", "run_monte_carlo"]

log = logging.getLogger(__name__)


@dataclass(eq=False)
class FilterRun:
    """Outcome of one filter on one trial.

    ``status`` is 'ok', 'diverged' or 'failed'. Failed runs carry no errors.
    ``resets`` holds the w-mode reset count of every timeline step.
    """

    label: str
    status: str
    runtime: float
    errors: np.ndarray | None = None      # (6, K) estimate minus truth
    residuals: np.ndarray | None = None   # (n_z, K) post-fit residuals
    means: np.ndarray | None = None       # (6, K) filter means in filter coordinates
    resets: np.ndarray | None = None
    cause: str = ""
    fail_epoch: float | None = None


@dataclass(eq=False)
class TrialResult:
    trial: int
    seed: int
    times: np.ndarray
    tracks: np.ndarray
    truth: np.ndarray
    runs: dict = field(default_factory=dict)


def _position_scale(cfg):
    return float(np.sqrt(np.trace(cfg.initial.cov[:3, :3])))


def run_trial(cfg, trial, filters=None, scenario=None):
    """Synthesize trial ``trial`` (seed = base seed + trial) and run every filter on it.

    A ``scenario`` already synthesized for that seed may be passed in.
    """
    filters = cfg.filters if filters is None else filters
    seed = cfg.seed + trial
    scn = synthesize(cfg, seed) if scenario is None else scenario
    if scn.seed != seed:
        raise ValueError(f"scenario seed {scn.seed} does not belong to trial {trial}")
    dyn, mm = filter_models(cfg)
    init = initial_estimate(cfg)
    timeline = list(zip(scn.times, scn.z.T))
    limit = cfg.divergence_factor * _position_scale(cfg)
    mu = cached_harmonics(cfg.gravity_path).mu if cfg.is_orbit else None
    res = TrialResult(trial, seed, scn.times, scn.tracks, scn.truth)
    for kind in filters:
        t0 = time.perf_counter()
        try:
            ests = run_filter(kind, init, dyn, mm, (cfg.process, cfg.measurement), timeline,
                              cfg.max_step)
        except FilterError as exc:
            dt = time.perf_counter() - t0
            log.warning("trial %d %s: %s", trial, kind.label, exc)
            res.runs[kind.label] = FilterRun(kind.label, "failed", dt, cause=str(exc),
                                             fail_epoch=exc.epoch)
            continue
        dt = time.perf_counter() - t0
        means = np.array([e.mean for e in ests]).T
        cart = mee_to_cart(means, mu) if cfg.is_orbit and cfg.representation == "mee" else means
        err = cart - scn.truth
        resid = np.empty_like(scn.z)
        for k, e in enumerate(ests):
            zk = mm.measure(e.mean[:, None], None, e.epoch)[:, 0]
            resid[:, k] = scn.z[:, k] - zk
        ang = mm.angular
        resid[ang] = wrap_angle(resid[ang])
        dist = np.sqrt(np.sum(err[:3] ** 2, axis=0))
        status = "diverged" if np.any(~np.isfinite(dist)) or np.any(dist > limit) else "ok"
        cause = "" if status == "ok" else f"3D position error above {limit:.6g} m"
        res.runs[kind.label] = FilterRun(kind.label, status, dt, err, resid, means,
                                         np.array([e.resets for e in ests]), cause)
    return res


def _trial_job(args):
    cfg, trial, filters, scn = args
    return run_trial(cfg, trial, filters, scn)


def run_monte_carlo(cfg, filters=None, workers=1, trials=None, progress=None, scenarios=None):
    """Run ``cfg.trials`` independent trials; returns TrialResults sorted by trial.

    Parameters
    ----------
    cfg : ScenarioConfig
    filters : list of FilterKind, optional
        Defaults to the configured list.
    workers : int
        Processes for trial-level parallelism; 1 runs inline.
    trials : iterable of int, optional
        Explicit trial indices (default ``range(cfg.trials)``).
    progress : callable, optional
        Called with each finished TrialResult.
    scenarios : dict, optional
        Pre-synthesized Scenario per trial index; missing trials are synthesized.
    """
    filters = cfg.filters if filters is None else filters
    idx = list(range(cfg.trials)) if trials is None else list(trials)
    scenarios = scenarios or {}
    out = []
    if workers > 1 and len(idx) > 1:
        with ProcessPoolExecutor(workers) as ex:
            for r in ex.map(_trial_job, [(cfg, i, filters, scenarios.get(i)) for i in idx]):
                out.append(r)
                if progress:
                    progress(r)
    else:
        for i in idx:
            r = run_trial(cfg, i, filters, scenarios.get(i))
            out.append(r)
            if progress:
                progress(r)
    out.sort(key=lambda r: r.trial)
    return out
